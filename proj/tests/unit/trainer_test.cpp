#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "malfew/error.hpp"
#include "malfew/obfuscate.hpp"
#include "malfew/trainer.hpp"
#include "support.hpp"

using namespace malfew;
using namespace malfew::trainer;

namespace {

const ImageBank& small_bank() {
  static const ImageBank bank = [] {
    binfeed::SynthOptions opt;
    opt.n_families = 4;
    opt.n_per_family = 8;
    opt.min_len = 8 * 1024;
    opt.max_len = 24 * 1024;
    const auto m = binfeed::synth_corpus(opt, 21);
    const std::uint32_t f[] = {200};
    return ImageBank::build(obfuscate::obfuscate_corpus(m, f, 21));
  }();
  return bank;
}

std::vector<std::string> all_classes() { return small_bank().manifest().families(); }

// Narrow encoder so the unit suite stays quick; the head sees 8*4*4 features.
TrainConfig quick_config() {
  TrainConfig c;
  c.channels = 8;
  c.head_dim = 16;
  c.queries = 6;
  c.episodes_train = 4;
  c.episodes_eval = 20;
  c.runs = 2;
  c.lr = 1e-3;
  c.seed = 5;
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no malfew::Error thrown";
  return ErrorCode::InvalidArgument;
}

gradcore::Tensor<float> probe_batch(std::size_t n) {
  gradcore::Tensor<float> x({n, 1, 105, 105});
  Rng rng(99);
  for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-2.0, 2.0));
  return x;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lambda = 1.5;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidArgument);
  c = {};
  c.lr = 0.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidArgument);
  c = {};
  c.ways = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::InvalidArgument);
  c = {};
  c.norm_std = 0.0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::DegenerateStd);
  EXPECT_EQ(default_queries(1), 19u);
  EXPECT_EQ(default_queries(5), 15u);
}

TEST(Predict, ArgmaxFirstWins) {
  gradcore::Tensor<float> s({6, 1, 1, 1}, {0.2f, 0.9f, 0.7f, 0.7f, 0.1f, 0.3f});
  EXPECT_EQ(predict(s, 2), (std::vector<std::size_t>{1, 0, 1}));
}

TEST(Predict, OracleScoresAreExact) {
  const auto& bank = small_bank();
  const auto classes = all_classes();
  const auto pool = episodes::SamplePool::from(bank.manifest(), classes);
  const auto ep = episodes::sample_episode(pool, 3, 1, 9, 1);
  const auto batch = make_batch(ep, bank, 0.5, 0.25, false, std::nullopt, 0);
  const auto guess = predict(batch.labels, 3);
  for (std::size_t q = 0; q < ep.query.size(); ++q) EXPECT_EQ(guess[q], ep.query[q].slot);
}

TEST(MakeBatch, NormalizesAndPairsObfuscatedWithCleanTargets) {
  const auto& bank = small_bank();
  const auto classes = all_classes();
  const auto pool = episodes::SamplePool::from(bank.manifest(), classes);
  const auto ep = episodes::sample_episode(pool, 2, 1, 4, 2);
  const auto clean = make_batch(ep, bank, 0.5, 0.25, false, std::nullopt, 0);
  EXPECT_EQ(clean.inputs.storage(), clean.targets.storage());
  const auto& img = bank.image(ep.support[0].entry);
  EXPECT_FLOAT_EQ(clean.inputs[0], static_cast<float>((img.pixels[0] / 255.0 - 0.5) / 0.25));

  const auto noisy = make_batch(ep, bank, 0.5, 0.25, true, 200u, 3);
  EXPECT_EQ(noisy.targets.storage(), clean.targets.storage());
  EXPECT_NE(noisy.inputs.storage(), clean.inputs.storage());
  EXPECT_THROW(make_batch(ep, bank, 0.5, 0.25, true, 400u, 3), Error);
}

TEST(Train, RepeatedEpisodeOverfits) {
  const auto& bank = small_bank();
  const auto classes = all_classes();
  const auto pool = episodes::SamplePool::from(bank.manifest(), classes);
  const auto cfg = quick_config();
  auto model = sdae::Model<float>::make(cfg.arch(), 1);
  gradcore::Optimizer<float> opt({cfg.optimizer, cfg.lr}, model.parameters());
  const auto ep = episodes::sample_episode(pool, 2, 1, 6, 7);
  const auto batch = make_batch(ep, bank, cfg.norm_mean, cfg.norm_std, false, std::nullopt, 0);
  double first = 0.0, last = 0.0;
  for (int step = 0; step <= 50; ++step) {
    model.zero_grad();
    const double loss = sdae::episode_step(model, batch).losses.total;
    if (step == 0) first = loss;
    last = loss;
    opt.step();
  }
  EXPECT_LT(last, first);
}

TEST(Train, DeterministicCheckpoints) {
  const auto classes = all_classes();
  const auto a = train(quick_config(), small_bank(), classes);
  const auto b = train(quick_config(), small_bank(), classes);
  EXPECT_EQ(serialize_checkpoint(a), serialize_checkpoint(b));
  auto other = quick_config();
  other.seed = 6;
  EXPECT_NE(parameter_hash(train(other, small_bank(), classes).model), parameter_hash(a.model));
}

TEST(Train, NoDecoderReportsRelationOnly) {
  auto cfg = quick_config();
  cfg.decoder_enabled = false;
  std::vector<LossRecord> log;
  const auto classes = all_classes();
  train(cfg, small_bank(), classes, [&](const LossRecord& r) { log.push_back(r); });
  ASSERT_EQ(log.size(), cfg.episodes_train);
  for (const auto& r : log) {
    EXPECT_EQ(r.reconstruction, 0.0);
    EXPECT_EQ(r.total, r.relation);
  }
}

TEST(Train, ObfuscatedTrainingRuns) {
  auto cfg = quick_config();
  cfg.obfuscation_enabled = true;
  cfg.episodes_train = 2;
  const auto classes = all_classes();
  EXPECT_NO_THROW(train(cfg, small_bank(), classes));
}

TEST(Train, LossSlopeIsNegativeOverTwoHundredEpisodes) {
  auto cfg = quick_config();
  cfg.episodes_train = 200;
  std::vector<double> y;
  const auto classes = all_classes();
  train(cfg, small_bank(), classes, [&](const LossRecord& r) { y.push_back(r.total); });
  ASSERT_EQ(y.size(), 200u);
  const double n = static_cast<double>(y.size());
  const double xbar = (n - 1) / 2.0;
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (i - xbar) * (y[i] - ybar);
    sxx += (i - xbar) * (i - xbar);
  }
  EXPECT_LT(sxy / sxx, 0.0);
}

TEST(Checkpoint, RoundTripIsExact) {
  testkit::TempDir dir;
  const auto classes = all_classes();
  auto ck = train(quick_config(), small_bank(), classes);
  ck.config_echo = {"seed=5"};
  save_checkpoint(dir / "ck.bin", ck);
  auto back = load_checkpoint(dir / "ck.bin");
  EXPECT_EQ(parameter_hash(back.model), parameter_hash(ck.model));
  EXPECT_EQ(back.config_echo, ck.config_echo);
  EXPECT_EQ(back.norm_mean, ck.norm_mean);
  const auto x = probe_batch(3);
  auto original = ck.model;
  EXPECT_EQ(sdae::encode(back.model, x).storage(), sdae::encode(original, x).storage());
  EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(ck));
}

TEST(Checkpoint, TruncatedAndVersionErrors) {
  const auto classes = all_classes();
  auto cfg = quick_config();
  cfg.episodes_train = 1;
  const auto bytes = serialize_checkpoint(train(cfg, small_bank(), classes));
  for (std::size_t keep : {std::size_t{0}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_EQ(code_of([&] { deserialize_checkpoint(std::string_view(bytes).substr(0, keep)); }),
              ErrorCode::CorruptCheckpoint)
        << keep;
  }
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  EXPECT_EQ(code_of([&] { deserialize_checkpoint(flipped); }), ErrorCode::CorruptCheckpoint);
  auto versioned = bytes;
  versioned[8] = static_cast<char>(kCheckpointVersion + 1);
  EXPECT_EQ(code_of([&] { deserialize_checkpoint(versioned); }), ErrorCode::VersionMismatch);
}

TEST(Evaluate, UntrainedIsNearChanceAndDoesNotMutate) {
  const auto classes = all_classes();
  auto cfg = quick_config();
  cfg.episodes_train = 1;
  cfg.episodes_eval = 50;
  const auto ck = train(cfg, small_bank(), classes);
  const auto before = serialize_checkpoint(ck);
  const auto report = evaluate(ck, small_bank(), classes, cfg);
  EXPECT_EQ(serialize_checkpoint(ck), before);

  ASSERT_EQ(report.episode_accuracy.size(), cfg.runs);
  const double queries = double(cfg.episodes_eval * cfg.runs * cfg.queries);
  const double sigma = std::sqrt(0.25 / queries);
  EXPECT_LT(std::abs(report.mean - 0.5), 3 * sigma) << report.table_row();

  EvalOptions shuffled;
  shuffled.randomize_labels = true;
  const auto random = evaluate(ck, small_bank(), classes, cfg, shuffled);
  EXPECT_LT(std::abs(random.mean - 0.5), 3 * sigma) << random.table_row();
}

TEST(Evaluate, MismatchedCheckpoint) {
  const auto classes = all_classes();
  auto cfg = quick_config();
  cfg.episodes_train = 1;
  const auto ck = train(cfg, small_bank(), classes);
  cfg.head_dim = 32;
  EXPECT_EQ(code_of([&] { evaluate(ck, small_bank(), classes, cfg); }), ErrorCode::MismatchedCheckpoint);
}

TEST(Summarize, HalfWidthOverRunMeans) {
  const auto r = summarize({{1.0, 0.5}, {0.5, 0.5}, {1.0, 1.0}}, 2, 1);
  ASSERT_EQ(r.run_means.size(), 3u);
  EXPECT_DOUBLE_EQ(r.mean, (0.75 + 0.5 + 1.0) / 3);
  double ss = 0.0;
  for (double m : r.run_means) ss += (m - r.mean) * (m - r.mean);
  EXPECT_NEAR(r.half_width, 1.96 * std::sqrt(ss / 2) / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(summarize({{0.5}}, 2, 1).half_width, 0.0);
  EXPECT_NE(r.table_row().find("2-way 1-shot: 75.0 ± "), std::string::npos);
  EXPECT_NE(r.records().find("mean\t"), std::string::npos);
}

TEST(Embeddings, OneRowPerEntryAndStableExport) {
  testkit::TempDir dir;
  const auto classes = all_classes();
  auto cfg = quick_config();
  cfg.channels = 64;
  cfg.head_dim = 128;
  cfg.episodes_train = 1;
  const auto ck = train(cfg, small_bank(), classes);
  const auto rows = export_embeddings(ck, small_bank());
  ASSERT_EQ(rows.size(), small_bank().manifest().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].origin_id, small_bank().manifest().at(i).origin_id);
    EXPECT_EQ(rows[i].latent.size(), 1024u);
    EXPECT_EQ(rows[i].projection.size(), 128u);
  }
  write_embeddings(dir / "a.tsv", rows);
  write_embeddings(dir / "b.tsv", export_embeddings(ck, small_bank()));
  EXPECT_EQ(testkit::slurp(dir / "a.tsv"), testkit::slurp(dir / "b.tsv"));
}
