#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "malfew/dataset.hpp"
#include "malfew/episodes.hpp"
#include "malfew/gradcore/optim.hpp"
#include "malfew/sdae.hpp"

namespace malfew::trainer {

struct TrainConfig {
  std::size_t ways = 2;
  std::size_t shots = 1;
  std::size_t queries = 19;
  std::size_t episodes_train = 20000;
  std::size_t episodes_eval = 2000;
  std::size_t runs = 10;
  double lambda = 0.7;
  double lr = 1e-2;
  gradcore::OptimizerKind optimizer = gradcore::OptimizerKind::Adam;
  sdae::PoolingMode pooling = sdae::PoolingMode::Mean;
  std::size_t head_dim = 256;
  std::size_t channels = 64;
  std::uint64_t seed = 0;
  bool obfuscation_enabled = false;
  bool decoder_enabled = true;
  bool include_augmented = true;
  std::optional<std::uint32_t> obfuscation_frequency;  // unset: any variant
  double norm_mean = entropix::kDefaultMean;
  double norm_std = entropix::kDefaultStd;

  /// Throws InvalidArgument when a field is outside its allowed range.
  void validate() const;
  sdae::ArchConfig arch() const;
};

/// Default per-shot query counts: 19 for 1-shot, 15 for 5-shot.
std::size_t default_queries(std::size_t shots);

struct Checkpoint {
  sdae::Model<float> model;
  double norm_mean = entropix::kDefaultMean;
  double norm_std = entropix::kDefaultStd;
  RenderOptions render;
  std::vector<std::string> config_echo;  // resolved run config, "key=value"
};

struct LossRecord {
  std::size_t episode = 0;
  double relation = 0.0;
  double reconstruction = 0.0;
  double total = 0.0;
};

using LossSink = std::function<void(const LossRecord&)>;

/// Episode-based training. Deterministic in (config, bank, classes).
/// Aborts with NonFinite if a loss turns NaN/Inf.
Checkpoint train(const TrainConfig& config, const ImageBank& bank, std::span<const std::string> train_classes,
                 const LossSink& sink = {});

/// Continue training an existing model for config.episodes_train episodes,
/// numbering episodes from first_episode.
void train_episodes(sdae::Model<float>& model, gradcore::Optimizer<float>& optimizer, const TrainConfig& config,
                    const ImageBank& bank, const episodes::SamplePool& pool, std::size_t first_episode,
                    const LossSink& sink = {});

struct EvalOptions {
  bool obfuscated = false;                   // feed obfuscated variants as inputs
  std::optional<std::uint32_t> frequency;    // variant frequency when obfuscated
  bool randomize_labels = false;             // score against random labels (leakage check)
};

struct AccuracyReport {
  std::size_t ways = 0;
  std::size_t shots = 0;
  std::vector<std::vector<double>> episode_accuracy;  // per run
  std::vector<double> run_means;
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * sample std of run means / sqrt(runs)
  std::vector<std::string> config_echo;

  /// "C-way K-shot: mean ± half-width" in percent.
  std::string table_row() const;
  /// Machine-readable record lines.
  std::string records() const;
};

/// Aggregates per-episode accuracies into an AccuracyReport.
AccuracyReport summarize(std::vector<std::vector<double>> episode_accuracy, std::size_t ways, std::size_t shots);

/// Assembles the network batch for one episode. Inputs are obfuscated
/// variants when `obfuscated` is set; targets are always the clean images.
sdae::EpisodeBatch<float> make_batch(const episodes::Episode& episode, const ImageBank& bank, double mean,
                                     double std, bool obfuscated, std::optional<std::uint32_t> frequency,
                                     std::uint64_t variant_seed);

/// argmax over the C relation scores per query (first index wins ties).
std::vector<std::size_t> predict(const gradcore::Tensor<float>& scores, std::size_t ways);

/// Evaluates on `classes` with eval-mode batch norm. The checkpoint is not modified.
AccuracyReport evaluate(const Checkpoint& checkpoint, const ImageBank& bank, std::span<const std::string> classes,
                        const TrainConfig& config, const EvalOptions& options = {});

struct EmbeddingRow {
  std::string origin_id;
  std::string family;
  std::string lineage;
  std::vector<float> latent;
  std::vector<float> projection;
};

std::vector<EmbeddingRow> export_embeddings(const Checkpoint& checkpoint, const ImageBank& bank);
void write_embeddings(const std::filesystem::path& path, std::span<const EmbeddingRow> rows,
                      std::span<const std::string> comments = {});

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// SHA-256 over every persistent model array.
std::string parameter_hash(const sdae::Model<float>& model);

}  // namespace malfew::trainer
