#include "malfew/sdae.hpp"

#include <cmath>

#include "malfew/error.hpp"
#include "malfew/random.hpp"

namespace malfew::sdae {

using namespace gradcore;

std::string to_string(PoolingMode mode) { return mode == PoolingMode::Mean ? "mean" : "sum"; }

PoolingMode parse_pooling(const std::string& text) {
  if (text == "mean") return PoolingMode::Mean;
  if (text == "sum") return PoolingMode::Sum;
  throw Error(ErrorCode::InvalidArgument, "pooling must be mean or sum, got '" + text + "'");
}

std::array<std::size_t, 6> encoder_trace(std::size_t input_side) {
  std::array<std::size_t, 6> t{};
  t[0] = input_side;
  t[1] = conv_out_extent(t[0], 3, 2, 1);
  t[2] = t[1] / 2;
  t[3] = conv_out_extent(t[2], 3, 2, 1);
  t[4] = conv_out_extent(t[3], 3, 2, 1);
  t[5] = conv_out_extent(t[4], 3, 2, 1);
  return t;
}

std::array<std::size_t, 5> decoder_targets(std::size_t input_side) {
  const auto t = encoder_trace(input_side);
  return {t[4], t[3], t[2], t[1], t[0]};
}

template <class T>
Model<T> Model<T>::make(const ArchConfig& config, std::uint64_t seed) {
  if (config.decoder_channels.size() != 4) throw Error(ErrorCode::InvalidArgument, "decoder needs 4 hidden widths");
  if (config.channels == 0 || config.head_dim == 0) throw Error(ErrorCode::InvalidArgument, "zero-width layer");
  Model m;
  m.config = config;
  Rng rng(derive_seed(seed, "sdae", "init"));
  std::size_t in = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto name = "enc" + std::to_string(i + 1);
    m.enc_conv[i] = Conv2d<T>::make(in, config.channels, 3, 2, 1, rng, name + ".conv");
    m.enc_bn[i] = BatchNorm2d<T>::make(config.channels, name + ".bn");
    in = config.channels;
  }
  for (std::size_t i = 0; i < 5; ++i) {
    const auto name = "dec" + std::to_string(i + 1);
    const std::size_t out = i < 4 ? config.decoder_channels[i] : 1;
    m.dec_conv[i] = Conv2d<T>::make(in, out, 3, 1, 1, rng, name + ".conv");
    if (i < 4) m.dec_bn[i] = BatchNorm2d<T>::make(out, name + ".bn");
    in = out;
  }
  m.fc1 = Linear<T>::make(2 * m.latent_features(), config.head_dim, rng, "head.fc1");
  m.fc2 = Linear<T>::make(config.head_dim, 1, rng, "head.fc2");
  return m;
}

template <class T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  std::vector<Parameter<T>*> p;
  for (std::size_t i = 0; i < 4; ++i) {
    p.insert(p.end(), {&enc_conv[i].weight, &enc_conv[i].bias, &enc_bn[i].scale, &enc_bn[i].shift});
  }
  for (std::size_t i = 0; i < 5; ++i) {
    p.insert(p.end(), {&dec_conv[i].weight, &dec_conv[i].bias});
    if (i < 4) p.insert(p.end(), {&dec_bn[i].scale, &dec_bn[i].shift});
  }
  p.insert(p.end(), {&fc1.weight, &fc1.bias, &fc2.weight, &fc2.bias});
  return p;
}

template <class T>
std::vector<std::pair<std::string, Tensor<T>*>> Model<T>::state() {
  std::vector<std::pair<std::string, Tensor<T>*>> s;
  for (auto* p : parameters()) s.emplace_back(p->name, &p->value);
  for (std::size_t i = 0; i < 4; ++i) {
    s.emplace_back(enc_bn[i].scale.name + ".running_mean", &enc_bn[i].running_mean);
    s.emplace_back(enc_bn[i].scale.name + ".running_var", &enc_bn[i].running_var);
    s.emplace_back(dec_bn[i].scale.name + ".running_mean", &dec_bn[i].running_mean);
    s.emplace_back(dec_bn[i].scale.name + ".running_var", &dec_bn[i].running_var);
  }
  return s;
}

template <class T>
std::vector<std::pair<std::string, const Tensor<T>*>> Model<T>::state() const {
  auto mutable_state = const_cast<Model*>(this)->state();
  return {mutable_state.begin(), mutable_state.end()};
}

template <class T>
void Model<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

// ---------------------------------------------------------------------------

template <class T>
Tensor<T> encode(Model<T>& model, const Tensor<T>& batch, Mode mode, EncodeTrace<T>* trace) {
  const auto side = model.config.input_side;
  require_shape(batch.shape().c == 1 && batch.shape().h == side && batch.shape().w == side,
                "encode expects (n,1," + std::to_string(side) + "," + std::to_string(side) + "), got " +
                    to_string(batch.shape()));
  Tensor<T> x = batch;
  for (std::size_t i = 0; i < 4; ++i) {
    BatchNormCache<T> cache;
    Tensor<T> pre = batchnorm2d_forward(model.enc_bn[i], conv2d_forward(model.enc_conv[i], x), mode,
                                        trace ? &cache : nullptr);
    Tensor<T> act = relu_forward(pre);
    if (trace) {
      trace->conv_in[i] = std::move(x);
      trace->bn[i] = std::move(cache);
      trace->bn_out[i] = std::move(pre);
    }
    if (i == 0) {
      auto pooled = maxpool2x2_forward(act);
      x = pooled.output;
      if (trace) trace->pool = std::move(pooled);
    } else {
      x = std::move(act);
    }
  }
  return x;
}

template <class T>
Tensor<T> encode_backward(Model<T>& model, const EncodeTrace<T>& trace, const Tensor<T>& grad_latent) {
  Tensor<T> g = grad_latent;
  for (std::size_t k = 4; k-- > 0;) {
    if (k == 0) g = maxpool2x2_backward(trace.pool, g);
    g = relu_backward(trace.bn_out[k], g);
    g = batchnorm2d_backward(model.enc_bn[k], trace.bn[k], g);
    g = conv2d_backward(model.enc_conv[k], trace.conv_in[k], g);
  }
  return g;
}

template <class T>
Tensor<T> decode(Model<T>& model, const Tensor<T>& latent, Mode mode, DecodeTrace<T>* trace) {
  require_shape(latent.shape() == model.latent_shape(latent.shape().n), "decode latent shape " + to_string(latent.shape()));
  const auto targets = decoder_targets(model.config.input_side);
  Tensor<T> x = latent;
  for (std::size_t i = 0; i < 5; ++i) {
    const Shape up_in = x.shape();
    Tensor<T> up = upsample_nearest_forward(x, targets[i], targets[i]);
    Tensor<T> conv = conv2d_forward(model.dec_conv[i], up);
    if (trace) {
      trace->up_in[i] = up_in;
      trace->conv_in[i] = std::move(up);
    }
    if (i == 4) {
      x = std::move(conv);
      break;
    }
    BatchNormCache<T> cache;
    Tensor<T> pre = batchnorm2d_forward(model.dec_bn[i], conv, mode, trace ? &cache : nullptr);
    x = relu_forward(pre);
    if (trace) {
      trace->bn[i] = std::move(cache);
      trace->bn_out[i] = std::move(pre);
    }
  }
  return x;
}

template <class T>
Tensor<T> decode_backward(Model<T>& model, const DecodeTrace<T>& trace, const Tensor<T>& grad_recon) {
  Tensor<T> g = grad_recon;
  for (std::size_t k = 5; k-- > 0;) {
    if (k < 4) {
      g = relu_backward(trace.bn_out[k], g);
      g = batchnorm2d_backward(model.dec_bn[k], trace.bn[k], g);
    }
    g = conv2d_backward(model.dec_conv[k], trace.conv_in[k], g);
    g = upsample_nearest_backward(g, trace.up_in[k]);
  }
  return g;
}

template <class T>
double reconstruction_loss(const Tensor<T>& recon, const Tensor<T>& clean_target) {
  return mse_loss(recon, clean_target).value;
}

template <class T>
Tensor<T> class_pool(const Tensor<T>& support_latents, PoolingMode mode) {
  const auto& s = support_latents.shape();
  if (s.n == 0) throw Error(ErrorCode::InvalidArgument, "class_pool needs at least one support latent");
  Tensor<T> out({1, s.c, s.h, s.w});
  for (std::size_t k = 0; k < s.n; ++k) {
    auto src = support_latents.sample(k);
    for (std::size_t i = 0; i < src.size(); ++i) out[i] += src[i];
  }
  if (mode == PoolingMode::Mean) out *= T(1) / static_cast<T>(s.n);
  return out;
}

template <class T>
Tensor<T> relation_scores(Model<T>& model, const Tensor<T>& class_feats, const Tensor<T>& query_feats,
                          HeadTrace<T>* trace) {
  const std::size_t C = class_feats.shape().n;
  const std::size_t N = query_feats.shape().n;
  require_shape(class_feats.shape() == model.latent_shape(C), "class feature shape " + to_string(class_feats.shape()));
  require_shape(query_feats.shape() == model.latent_shape(N), "query feature shape " + to_string(query_feats.shape()));
  const std::size_t F = model.latent_features();
  Tensor<T> pairs({N * C, 2 * model.config.channels, model.latent_side(), model.latent_side()});
  for (std::size_t q = 0; q < N; ++q) {
    for (std::size_t c = 0; c < C; ++c) {
      auto dst = pairs.sample(q * C + c);
      auto cf = class_feats.sample(c);
      auto qf = query_feats.sample(q);
      std::copy(cf.begin(), cf.end(), dst.begin());
      std::copy(qf.begin(), qf.end(), dst.begin() + static_cast<std::ptrdiff_t>(F));
    }
  }
  Tensor<T> hidden_pre = linear_forward(model.fc1, pairs);
  Tensor<T> hidden = relu_forward(hidden_pre);
  Tensor<T> scores = sigmoid_forward(linear_forward(model.fc2, hidden));
  if (trace) {
    trace->pairs = std::move(pairs);
    trace->hidden_pre = std::move(hidden_pre);
    trace->hidden = std::move(hidden);
    trace->scores = scores;
    trace->n_classes = C;
    trace->n_queries = N;
  }
  return scores;
}

template <class T>
std::pair<Tensor<T>, Tensor<T>> relation_scores_backward(Model<T>& model, const HeadTrace<T>& trace,
                                                         const Tensor<T>& grad_scores) {
  const std::size_t C = trace.n_classes, N = trace.n_queries;
  Tensor<T> g = sigmoid_backward(trace.scores, grad_scores);
  g = linear_backward(model.fc2, trace.hidden, g);
  g = relu_backward(trace.hidden_pre, g);
  g = linear_backward(model.fc1, trace.pairs, g);
  const std::size_t F = model.latent_features();
  Tensor<T> gc(model.latent_shape(C));
  Tensor<T> gq(model.latent_shape(N));
  for (std::size_t q = 0; q < N; ++q) {
    for (std::size_t c = 0; c < C; ++c) {
      auto src = g.sample(q * C + c);
      auto dc = gc.sample(c);
      auto dq = gq.sample(q);
      for (std::size_t i = 0; i < F; ++i) {
        dc[i] += src[i];
        dq[i] += src[F + i];
      }
    }
  }
  return {std::move(gc), std::move(gq)};
}

template <class T>
double relation_score(Model<T>& model, const Tensor<T>& class_feat, const Tensor<T>& query_feat) {
  require_shape(class_feat.size() == model.latent_features() && query_feat.size() == model.latent_features(),
                "relation_score feature size mismatch");
  auto scores = relation_scores(model, class_feat.reshaped(model.latent_shape(1)),
                                query_feat.reshaped(model.latent_shape(1)));
  return static_cast<double>(scores[0]);
}

template <class T>
LossResult<T> relation_loss(const Tensor<T>& scores, const Tensor<T>& labels) {
  for (auto y : labels.values()) {
    if (y != T(0) && y != T(1)) throw Error(ErrorCode::InvalidArgument, "relation labels must be 0 or 1");
  }
  return sum_squared_loss(scores, labels);
}

template <class T>
double contrastive_distance(const Model<T>& model, const Tensor<T>& z_i, const Tensor<T>& z_j) {
  const std::size_t F = model.latent_features();
  require_shape(z_i.size() == F && z_j.size() == F, "contrastive_distance feature size mismatch");
  const std::size_t H = model.config.head_dim;
  const auto& w = model.fc1.weight.value;  // (H, 2F)
  const auto& b = model.fc1.bias.value;
  double d = 0.0;
  for (std::size_t h = 0; h < H; ++h) {
    double a = b[h], c = b[h];
    const T* row = w.data() + h * 2 * F;
    for (std::size_t f = 0; f < F; ++f) {
      a += static_cast<double>(row[f]) * z_i[f];
      c += static_cast<double>(row[f]) * z_j[f];
    }
    const double diff = std::max(a, 0.0) - std::max(c, 0.0);
    d += diff * diff;
  }
  return d;
}

ContrastiveTerm contrastive_loss(double distance, int y, double margin) {
  if (distance < 0.0) throw Error(ErrorCode::InvalidArgument, "negative distance");
  if (y != 0 && y != 1) throw Error(ErrorCode::InvalidArgument, "similarity indicator must be 0 or 1");
  if (y == 0) return {distance, 1.0};
  const double root = std::sqrt(distance);
  const double gap = margin - root;
  if (gap <= 0.0) return {0.0, 0.0};
  // d/dd (m - sqrt d)^2 = -(m - sqrt d) / sqrt d; undefined at d = 0.
  const double grad = root > 0.0 ? -gap / root : -std::numeric_limits<double>::infinity();
  return {gap * gap, grad};
}

double total_loss(double relation, double reconstruction, double lambda) { return relation + lambda * reconstruction; }

// ---------------------------------------------------------------------------

namespace {

template <class T>
void check_batch(const Model<T>& model, const EpisodeBatch<T>& batch) {
  const std::size_t S = batch.n_classes * batch.shots;
  const std::size_t side = model.config.input_side;
  require_shape(batch.n_classes >= 1 && batch.shots >= 1 && batch.n_queries >= 1, "empty episode");
  require_shape(batch.inputs.shape() == Shape{S + batch.n_queries, 1, side, side},
                "episode inputs shape " + to_string(batch.inputs.shape()));
  require_shape(batch.labels.size() == batch.n_queries * batch.n_classes, "episode labels size");
}

template <class T>
Tensor<T> slice_batch(const Tensor<T>& t, std::size_t begin, std::size_t count) {
  Shape s = t.shape();
  s.n = count;
  const auto per = t.shape().per_sample();
  std::vector<T> data(t.data() + begin * per, t.data() + (begin + count) * per);
  return Tensor<T>(s, std::move(data));
}

template <class T>
Tensor<T> pool_classes(const Tensor<T>& latent, std::size_t classes, std::size_t shots, PoolingMode mode) {
  Shape s = latent.shape();
  s.n = classes;
  Tensor<T> out(s);
  for (std::size_t c = 0; c < classes; ++c) {
    auto pooled = class_pool(slice_batch(latent, c * shots, shots), mode);
    std::copy(pooled.values().begin(), pooled.values().end(), out.sample(c).begin());
  }
  return out;
}

}  // namespace

template <class T>
EpisodeOutput<T> episode_step(Model<T>& model, const EpisodeBatch<T>& batch) {
  check_batch(model, batch);
  const std::size_t C = batch.n_classes, K = batch.shots, N = batch.n_queries;
  const std::size_t S = C * K;

  EncodeTrace<T> enc;
  Tensor<T> latent = encode(model, batch.inputs, Mode::Train, &enc);

  EpisodeOutput<T> out;
  Tensor<T> grad_latent(latent.shape());

  if (model.config.decoder_enabled) {
    require_shape(batch.targets.shape() == batch.inputs.shape(), "episode targets shape");
    DecodeTrace<T> dec;
    Tensor<T> recon = decode(model, latent, Mode::Train, &dec);
    auto mse = mse_loss(recon, batch.targets);
    out.losses.reconstruction = mse.value;
    mse.grad *= static_cast<T>(model.config.lambda);
    grad_latent += decode_backward(model, dec, mse.grad);
  }

  const Tensor<T> class_feats = pool_classes(latent, C, K, model.config.pooling);
  const Tensor<T> query_feats = slice_batch(latent, S, N);
  HeadTrace<T> head;
  out.scores = relation_scores(model, class_feats, query_feats, &head);
  auto rel = relation_loss(out.scores, batch.labels);
  out.losses.relation = rel.value;
  out.losses.total = total_loss(rel.value, out.losses.reconstruction,
                                model.config.decoder_enabled ? model.config.lambda : 0.0);

  auto [grad_class, grad_query] = relation_scores_backward(model, head, rel.grad);
  const T share = model.config.pooling == PoolingMode::Mean ? T(1) / static_cast<T>(K) : T(1);
  const std::size_t F = model.latent_features();
  for (std::size_t c = 0; c < C; ++c) {
    auto gc = grad_class.sample(c);
    for (std::size_t k = 0; k < K; ++k) {
      auto dst = grad_latent.sample(c * K + k);
      for (std::size_t i = 0; i < F; ++i) dst[i] += share * gc[i];
    }
  }
  for (std::size_t q = 0; q < N; ++q) {
    auto gq = grad_query.sample(q);
    auto dst = grad_latent.sample(S + q);
    for (std::size_t i = 0; i < F; ++i) dst[i] += gq[i];
  }
  encode_backward(model, enc, grad_latent);
  return out;
}

template <class T>
Tensor<T> episode_scores(Model<T>& model, const EpisodeBatch<T>& batch) {
  check_batch(model, batch);
  const std::size_t S = batch.n_classes * batch.shots;
  Tensor<T> latent = encode(model, batch.inputs, Mode::Eval);
  return relation_scores(model, pool_classes(latent, batch.n_classes, batch.shots, model.config.pooling),
                         slice_batch(latent, S, batch.n_queries));
}

#define MALFEW_INSTANTIATE_SDAE(T)                                                                          \
  template struct Model<T>;                                                                                 \
  template Tensor<T> encode(Model<T>&, const Tensor<T>&, Mode, EncodeTrace<T>*);                            \
  template Tensor<T> encode_backward(Model<T>&, const EncodeTrace<T>&, const Tensor<T>&);                   \
  template Tensor<T> decode(Model<T>&, const Tensor<T>&, Mode, DecodeTrace<T>*);                            \
  template Tensor<T> decode_backward(Model<T>&, const DecodeTrace<T>&, const Tensor<T>&);                   \
  template double reconstruction_loss(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> class_pool(const Tensor<T>&, PoolingMode);                                             \
  template Tensor<T> relation_scores(Model<T>&, const Tensor<T>&, const Tensor<T>&, HeadTrace<T>*);         \
  template std::pair<Tensor<T>, Tensor<T>> relation_scores_backward(Model<T>&, const HeadTrace<T>&,         \
                                                                    const Tensor<T>&);                      \
  template double relation_score(Model<T>&, const Tensor<T>&, const Tensor<T>&);                            \
  template LossResult<T> relation_loss(const Tensor<T>&, const Tensor<T>&);                                 \
  template double contrastive_distance(const Model<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template EpisodeOutput<T> episode_step(Model<T>&, const EpisodeBatch<T>&);                                \
  template Tensor<T> episode_scores(Model<T>&, const EpisodeBatch<T>&);

MALFEW_INSTANTIATE_SDAE(float)
MALFEW_INSTANTIATE_SDAE(double)

}  // namespace malfew::sdae
