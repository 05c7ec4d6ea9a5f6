#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "malfew/gradcore/layers.hpp"
#include "malfew/gradcore/loss.hpp"
#include "malfew/gradcore/tensor.hpp"

namespace malfew::sdae {

using gradcore::Mode;
using gradcore::Shape;
using gradcore::Tensor;

enum class PoolingMode { Mean, Sum };
std::string to_string(PoolingMode mode);
PoolingMode parse_pooling(const std::string& text);

struct ArchConfig {
  std::size_t input_side = 105;
  std::size_t channels = 64;  // every encoder stage
  std::vector<std::size_t> decoder_channels{32, 16, 8, 4};  // outputs of decoder stages 1-4; stage 5 emits 1
  std::size_t head_dim = 256;
  PoolingMode pooling = PoolingMode::Mean;
  double lambda = 0.7;
  bool decoder_enabled = true;

  bool operator==(const ArchConfig&) const = default;
};

/// Spatial extents through the encoder: input, stage1, pool, stage2, stage3, stage4.
std::array<std::size_t, 6> encoder_trace(std::size_t input_side);
/// Decoder stage targets: the encoder trace reversed, excluding the latent.
std::array<std::size_t, 5> decoder_targets(std::size_t input_side);

/// Weight-shared Siamese denoising autoencoder with a relation head. Both
/// Siamese branches run through this single parameter set.
template <class T>
struct Model {
  ArchConfig config;
  std::array<gradcore::Conv2d<T>, 4> enc_conv;
  std::array<gradcore::BatchNorm2d<T>, 4> enc_bn;
  std::array<gradcore::Conv2d<T>, 5> dec_conv;
  std::array<gradcore::BatchNorm2d<T>, 4> dec_bn;  // the last decoder stage is linear
  gradcore::Linear<T> fc1;  // pair vector -> head_dim
  gradcore::Linear<T> fc2;  // head_dim -> 1

  static Model make(const ArchConfig& config, std::uint64_t seed);

  std::size_t latent_side() const { return encoder_trace(config.input_side)[5]; }
  Shape latent_shape(std::size_t n) const { return {n, config.channels, latent_side(), latent_side()}; }
  std::size_t latent_features() const { return config.channels * latent_side() * latent_side(); }

  /// Learnable parameters in a fixed order.
  std::vector<gradcore::Parameter<T>*> parameters();
  /// Every persistent array (parameters and batch-norm running stats) with a stable name.
  std::vector<std::pair<std::string, Tensor<T>*>> state();
  std::vector<std::pair<std::string, const Tensor<T>*>> state() const;

  void zero_grad();
};

template <class T>
struct EncodeTrace {
  std::array<Tensor<T>, 4> conv_in;
  std::array<gradcore::BatchNormCache<T>, 4> bn;
  std::array<Tensor<T>, 4> bn_out;
  gradcore::MaxPoolResult<T> pool;
};

template <class T>
struct DecodeTrace {
  std::array<Shape, 5> up_in;
  std::array<Tensor<T>, 5> conv_in;
  std::array<gradcore::BatchNormCache<T>, 4> bn;
  std::array<Tensor<T>, 4> bn_out;
};

template <class T>
struct HeadTrace {
  Tensor<T> pairs;
  Tensor<T> hidden_pre;
  Tensor<T> hidden;
  Tensor<T> scores;
  std::size_t n_classes = 0;
  std::size_t n_queries = 0;
};

/// batch: (n, 1, side, side) normalized images -> latent (n, channels, 4, 4).
template <class T>
Tensor<T> encode(Model<T>& model, const Tensor<T>& batch, Mode mode = Mode::Eval, EncodeTrace<T>* trace = nullptr);
template <class T>
Tensor<T> encode_backward(Model<T>& model, const EncodeTrace<T>& trace, const Tensor<T>& grad_latent);

/// latent -> (n, 1, side, side) reconstruction; final stage has linear activation.
template <class T>
Tensor<T> decode(Model<T>& model, const Tensor<T>& latent, Mode mode = Mode::Eval, DecodeTrace<T>* trace = nullptr);
template <class T>
Tensor<T> decode_backward(Model<T>& model, const DecodeTrace<T>& trace, const Tensor<T>& grad_recon);

/// Mean-squared reconstruction error, sum / (2n).
template <class T>
double reconstruction_loss(const Tensor<T>& recon, const Tensor<T>& clean_target);

/// Element-wise mean or sum over K latents shaped (K, c, h, w) -> (1, c, h, w).
template <class T>
Tensor<T> class_pool(const Tensor<T>& support_latents, PoolingMode mode);

/// Scores every (class, query) pair. class_feats (C, ...), query_feats (N, ...).
/// Output (N*C, 1, 1, 1) with pair index q*C + c; support half first in depth.
template <class T>
Tensor<T> relation_scores(Model<T>& model, const Tensor<T>& class_feats, const Tensor<T>& query_feats,
                          HeadTrace<T>* trace = nullptr);
/// Returns (grad class_feats, grad query_feats), accumulating head grads.
template <class T>
std::pair<Tensor<T>, Tensor<T>> relation_scores_backward(Model<T>& model, const HeadTrace<T>& trace,
                                                         const Tensor<T>& grad_scores);

/// Single-pair convenience wrapper; features shaped (1, c, h, w) or (c, h, w) flattened.
template <class T>
double relation_score(Model<T>& model, const Tensor<T>& class_feat, const Tensor<T>& query_feat);

/// Sum of squared differences, no averaging.
template <class T>
gradcore::LossResult<T> relation_loss(const Tensor<T>& scores, const Tensor<T>& labels);

/// Squared norm between projections g(z) = relu(W_s z + b), where W_s is the
/// support half of the head's first linear layer.
template <class T>
double contrastive_distance(const Model<T>& model, const Tensor<T>& z_i, const Tensor<T>& z_j);

struct ContrastiveTerm {
  double value = 0.0;
  double grad = 0.0;  // d value / d distance
};

/// y = 0 marks a similar pair (L = d), y = 1 a dissimilar one (L = max(0, m - sqrt d)^2).
ContrastiveTerm contrastive_loss(double distance, int y, double margin = 1.0);

double total_loss(double relation, double reconstruction, double lambda);

/// One episode laid out for the network. Support samples are class-major
/// (class c occupies rows c*K .. c*K+K-1), followed by the queries.
template <class T>
struct EpisodeBatch {
  Tensor<T> inputs;   // (C*K + N, 1, side, side)
  Tensor<T> targets;  // clean reconstruction targets, same shape
  std::size_t n_classes = 0;
  std::size_t shots = 0;
  std::size_t n_queries = 0;
  Tensor<T> labels;   // (N*C, 1, 1, 1), pair index q*C + c
};

struct EpisodeLosses {
  double relation = 0.0;
  double reconstruction = 0.0;
  double total = 0.0;
};

template <class T>
struct EpisodeOutput {
  EpisodeLosses losses;
  Tensor<T> scores;  // (N*C, 1, 1, 1)
};

/// Train-mode forward plus full backward; gradients accumulate into the
/// model's parameters. Decoder is skipped when disabled.
template <class T>
EpisodeOutput<T> episode_step(Model<T>& model, const EpisodeBatch<T>& batch);

/// Eval-mode scoring (no decoder, no gradients).
template <class T>
Tensor<T> episode_scores(Model<T>& model, const EpisodeBatch<T>& batch);

}  // namespace malfew::sdae
