#include "malfew/trainer.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "malfew/error.hpp"
#include "malfew/random.hpp"

namespace malfew::trainer {

using gradcore::Tensor;

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (ways < 1 || shots < 1 || queries < 1) fail("ways, shots and queries must be >= 1");
  if (episodes_train < 1 || episodes_eval < 1 || runs < 1) fail("episode and run counts must be >= 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (!(lr > 0.0)) fail("lr must be positive");
  if (head_dim < 1 || channels < 1) fail("layer widths must be >= 1");
  if (!(norm_std > 0.0)) throw Error(ErrorCode::DegenerateStd, "normalization std must be positive");
}

sdae::ArchConfig TrainConfig::arch() const {
  sdae::ArchConfig a;
  a.channels = channels;
  a.head_dim = head_dim;
  a.pooling = pooling;
  a.lambda = lambda;
  a.decoder_enabled = decoder_enabled;
  return a;
}

std::size_t default_queries(std::size_t shots) { return shots >= 5 ? 15 : 19; }

// ---------------------------------------------------------------------------

sdae::EpisodeBatch<float> make_batch(const episodes::Episode& episode, const ImageBank& bank, double mean,
                                     double std, bool obfuscated, std::optional<std::uint32_t> frequency,
                                     std::uint64_t variant_seed) {
  if (!(std > 0.0)) throw Error(ErrorCode::DegenerateStd, "normalization std must be positive");
  std::array<float, 256> lut{};
  for (int p = 0; p < 256; ++p) lut[p] = static_cast<float>((p / 255.0 - mean) / std);

  const std::size_t side = entropix::kImageSide;
  const std::size_t S = episode.support.size();
  const std::size_t N = episode.query.size();
  sdae::EpisodeBatch<float> batch;
  batch.n_classes = episode.ways;
  batch.shots = episode.shots;
  batch.n_queries = N;
  batch.inputs = Tensor<float>({S + N, 1, side, side});
  batch.targets = Tensor<float>({S + N, 1, side, side});
  batch.labels = Tensor<float>({N * episode.ways, 1, 1, 1});
  for (std::size_t i = 0; i < episode.labels.size(); ++i) batch.labels[i] = episode.labels[i];

  Rng rng(variant_seed);
  auto fill = [&](std::span<float> dst, const entropix::EntropyImage& img) {
    if (img.pixels.size() != dst.size()) throw Error(ErrorCode::ShapeMismatch, "image is not 105x105");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = lut[img.pixels[i]];
  };
  const auto& manifest = bank.manifest();
  for (std::size_t i = 0; i < S + N; ++i) {
    const std::size_t unit = i < S ? episode.support[i].entry : episode.query[i - S].entry;
    const auto& clean = bank.image(unit);
    fill(batch.targets.sample(i), clean);
    if (!obfuscated) {
      fill(batch.inputs.sample(i), clean);
      continue;
    }
    const auto variants = bank.variants(manifest.root_of(unit), frequency);
    if (variants.empty()) {
      throw Error(ErrorCode::InvalidArgument, "no obfuscated variant for '" + manifest.at(unit).origin_id + "'");
    }
    fill(batch.inputs.sample(i), bank.obfuscated_image(unit, variants[rng.uniform_below(variants.size())]));
  }
  return batch;
}

std::vector<std::size_t> predict(const Tensor<float>& scores, std::size_t ways) {
  if (ways == 0 || scores.size() % ways != 0) throw Error(ErrorCode::ShapeMismatch, "score count not a multiple of ways");
  std::vector<std::size_t> out(scores.size() / ways);
  for (std::size_t q = 0; q < out.size(); ++q) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < ways; ++c) {
      if (scores[q * ways + c] > scores[q * ways + best]) best = c;
    }
    out[q] = best;
  }
  return out;
}

// ---------------------------------------------------------------------------

void train_episodes(sdae::Model<float>& model, gradcore::Optimizer<float>& optimizer, const TrainConfig& config,
                    const ImageBank& bank, const episodes::SamplePool& pool, std::size_t first_episode,
                    const LossSink& sink) {
  for (std::size_t e = first_episode; e < first_episode + config.episodes_train; ++e) {
    const auto tag = "episode/" + std::to_string(e);
    const auto episode = episodes::sample_episode(pool, config.ways, config.shots, config.queries,
                                                  derive_seed(config.seed, "train", tag));
    const auto batch = make_batch(episode, bank, config.norm_mean, config.norm_std, config.obfuscation_enabled,
                                  config.obfuscation_frequency, derive_seed(config.seed, "train-variant", tag));
    optimizer.zero_grad();
    const auto out = sdae::episode_step(model, batch);
    if (!std::isfinite(out.losses.total)) {
      std::ostringstream msg;
      msg << "episode " << e << ": L_r=" << out.losses.relation << " L_mse=" << out.losses.reconstruction;
      throw Error(ErrorCode::NonFinite, msg.str());
    }
    optimizer.step();
    if (sink) sink({e, out.losses.relation, out.losses.reconstruction, out.losses.total});
  }
}

Checkpoint train(const TrainConfig& config, const ImageBank& bank, std::span<const std::string> train_classes,
                 const LossSink& sink) {
  config.validate();
  const auto pool = episodes::SamplePool::from(bank.manifest(), train_classes, config.include_augmented);
  Checkpoint ck{sdae::Model<float>::make(config.arch(), config.seed), config.norm_mean, config.norm_std,
                bank.options(), {}};
  gradcore::Optimizer<float> optimizer({config.optimizer, config.lr}, ck.model.parameters());
  train_episodes(ck.model, optimizer, config, bank, pool, 0, sink);
  return ck;
}

// ---------------------------------------------------------------------------

AccuracyReport summarize(std::vector<std::vector<double>> episode_accuracy, std::size_t ways, std::size_t shots) {
  if (episode_accuracy.empty()) throw Error(ErrorCode::InvalidArgument, "no runs to summarize");
  AccuracyReport r;
  r.ways = ways;
  r.shots = shots;
  for (const auto& run : episode_accuracy) {
    if (run.empty()) throw Error(ErrorCode::InvalidArgument, "run without episodes");
    double s = 0.0;
    for (double a : run) s += a;
    r.run_means.push_back(s / static_cast<double>(run.size()));
  }
  const double n = static_cast<double>(r.run_means.size());
  double s = 0.0;
  for (double m : r.run_means) s += m;
  r.mean = s / n;
  if (r.run_means.size() > 1) {
    double ss = 0.0;
    for (double m : r.run_means) ss += (m - r.mean) * (m - r.mean);
    r.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  r.episode_accuracy = std::move(episode_accuracy);
  return r;
}

std::string AccuracyReport::table_row() const {
  std::ostringstream os;
  os << ways << "-way " << shots << "-shot: " << std::fixed << std::setprecision(1) << 100.0 * mean << " ± "
     << 100.0 * half_width << "%";
  return os.str();
}

std::string AccuracyReport::records() const {
  std::ostringstream os;
  os << std::setprecision(17);
  for (const auto& c : config_echo) os << "config\t" << c << '\n';
  os << "ways\t" << ways << '\n' << "shots\t" << shots << '\n' << "runs\t" << run_means.size() << '\n';
  os << "episodes_per_run\t" << (episode_accuracy.empty() ? 0 : episode_accuracy.front().size()) << '\n';
  os << "mean\t" << mean << '\n' << "half_width\t" << half_width << '\n';
  for (std::size_t r = 0; r < run_means.size(); ++r) os << "run_mean\t" << r << '\t' << run_means[r] << '\n';
  return os.str();
}

AccuracyReport evaluate(const Checkpoint& checkpoint, const ImageBank& bank, std::span<const std::string> classes,
                        const TrainConfig& config, const EvalOptions& options) {
  config.validate();
  if (checkpoint.model.config.channels != config.channels || checkpoint.model.config.head_dim != config.head_dim ||
      checkpoint.model.config.pooling != config.pooling) {
    throw Error(ErrorCode::MismatchedCheckpoint, "checkpoint architecture differs from the evaluation config");
  }
  if (checkpoint.render.block_size != bank.options().block_size ||
      checkpoint.render.width_blocks != bank.options().width_blocks) {
    throw Error(ErrorCode::MismatchedCheckpoint, "checkpoint render options differ from the image bank");
  }
  // Eval-mode batch norm reads but never writes; a private copy keeps that airtight.
  sdae::Model<float> model = checkpoint.model;
  const auto pool = episodes::SamplePool::from(bank.manifest(), classes, config.include_augmented);

  std::vector<std::vector<double>> acc(config.runs);
  for (std::size_t r = 0; r < config.runs; ++r) {
    for (std::size_t e = 0; e < config.episodes_eval; ++e) {
      const auto tag = "run/" + std::to_string(r) + "/episode/" + std::to_string(e);
      const auto episode = episodes::sample_episode(pool, config.ways, config.shots, config.queries,
                                                    derive_seed(config.seed, "eval", tag));
      const auto batch = make_batch(episode, bank, checkpoint.norm_mean, checkpoint.norm_std, options.obfuscated,
                                    options.frequency, derive_seed(config.seed, "eval-variant", tag));
      const auto predicted = predict(sdae::episode_scores(model, batch), config.ways);
      Rng label_rng(derive_seed(config.seed, "eval-labels", tag));
      std::size_t correct = 0;
      for (std::size_t q = 0; q < predicted.size(); ++q) {
        const std::size_t truth =
            options.randomize_labels ? label_rng.uniform_below(config.ways) : episode.query[q].slot;
        if (predicted[q] == truth) ++correct;
      }
      acc[r].push_back(static_cast<double>(correct) / static_cast<double>(predicted.size()));
    }
  }
  auto report = summarize(std::move(acc), config.ways, config.shots);
  report.config_echo = checkpoint.config_echo;
  return report;
}

// ---------------------------------------------------------------------------

std::vector<EmbeddingRow> export_embeddings(const Checkpoint& checkpoint, const ImageBank& bank) {
  sdae::Model<float> model = checkpoint.model;
  const auto& manifest = bank.manifest();
  const std::size_t side = entropix::kImageSide;
  const std::size_t F = model.latent_features();
  const std::size_t H = model.config.head_dim;
  std::array<float, 256> lut{};
  for (int p = 0; p < 256; ++p) lut[p] = static_cast<float>((p / 255.0 - checkpoint.norm_mean) / checkpoint.norm_std);

  std::vector<EmbeddingRow> rows;
  rows.reserve(manifest.size());
  constexpr std::size_t kChunk = 32;
  for (std::size_t begin = 0; begin < manifest.size(); begin += kChunk) {
    const std::size_t count = std::min(kChunk, manifest.size() - begin);
    Tensor<float> batch({count, 1, side, side});
    for (std::size_t i = 0; i < count; ++i) {
      const auto& img = bank.image(begin + i);
      auto dst = batch.sample(i);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = lut[img.pixels[k]];
    }
    const auto latent = sdae::encode(model, batch, gradcore::Mode::Eval);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& e = manifest.at(begin + i);
      EmbeddingRow row{e.origin_id, e.family, binfeed::to_string(e.lineage), {}, {}};
      auto z = latent.sample(i);
      row.latent.assign(z.begin(), z.end());
      row.projection.resize(H);
      const auto& w = model.fc1.weight.value;
      for (std::size_t h = 0; h < H; ++h) {
        double a = model.fc1.bias.value[h];
        const float* wr = w.data() + h * 2 * F;
        for (std::size_t f = 0; f < F; ++f) a += static_cast<double>(wr[f]) * z[f];
        row.projection[h] = static_cast<float>(std::max(a, 0.0));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_embeddings(const std::filesystem::path& path, std::span<const EmbeddingRow> rows,
                      std::span<const std::string> comments) {
  std::ostringstream os;
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "origin_id\tfamily\tlineage";
  if (!rows.empty()) {
    for (std::size_t i = 0; i < rows.front().latent.size(); ++i) os << "\tz" << i;
    for (std::size_t i = 0; i < rows.front().projection.size(); ++i) os << "\tg" << i;
  }
  os << '\n' << std::setprecision(9);
  for (const auto& r : rows) {
    os << r.origin_id << '\t' << r.family << '\t' << r.lineage;
    for (float v : r.latent) os << '\t' << v;
    for (float v : r.projection) os << '\t' << v;
    os << '\n';
  }
  binfeed::write_file_atomic(path, os.str());
}

}  // namespace malfew::trainer
