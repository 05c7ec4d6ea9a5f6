#include "malfew/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <sstream>

#include "malfew/binfeed.hpp"
#include "malfew/dataset.hpp"
#include "malfew/entropix.hpp"
#include "malfew/error.hpp"
#include "malfew/obfuscate.hpp"
#include "malfew/run_config.hpp"
#include "malfew/trainer.hpp"

namespace malfew::cli {

namespace fs = std::filesystem;

namespace {

fs::path require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " is required");
  return value;
}

fs::path dir_of(const fs::path& file) {
  auto parent = file.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

// Rewrites inline or foreign bytes next to the manifest, then writes it.
void store_manifest(const binfeed::Manifest& manifest, const fs::path& path, const RunConfig& config) {
  const auto rebased = binfeed::write_corpus(manifest, dir_of(path));
  binfeed::write_manifest(path, rebased, config.echo());
}

void apply_stats(RunConfig& config) {
  if (config.stats.empty()) return;
  const auto stats = entropix::read_stats(config.stats);
  config.train.norm_mean = stats.mean;
  config.train.norm_std = stats.std;
}

int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto root = require(config.root, "--root");
  auto scan = binfeed::scan_corpus(root);
  for (const auto& w : scan.warnings) err << "warning: " << w << '\n';
  auto manifest = config.min_per_class ? binfeed::augment_to_minimum(scan.manifest, config.min_per_class)
                                       : std::move(scan.manifest);
  const fs::path path = config.out.empty() ? root / "manifest.tsv" : fs::path(config.out);
  store_manifest(manifest, path, config);
  out << "manifest\t" << path.string() << '\t' << manifest.size() << " entries\t" << manifest.families().size()
      << " classes\n";
  return 0;
}

int cmd_synth(const RunConfig& config, std::ostream& out) {
  const auto root = require(config.out.empty() ? config.root : config.out, "--out");
  binfeed::SynthOptions options;
  options.n_families = config.families;
  options.n_per_family = config.per_family;
  auto manifest = binfeed::synth_corpus(options, config.train.seed);
  if (config.min_per_class) manifest = binfeed::augment_to_minimum(manifest, config.min_per_class);
  const auto path = root / "manifest.tsv";
  store_manifest(manifest, path, config);
  out << "manifest\t" << path.string() << '\t' << manifest.size() << " entries\n";
  return 0;
}

int cmd_obfuscate(const RunConfig& config, std::ostream& out) {
  const auto in = require(config.manifest, "--manifest");
  const fs::path path = config.out.empty() ? in : fs::path(config.out);
  std::vector<std::uint32_t> freqs = config.frequencies;
  if (freqs.empty()) freqs.push_back(200);
  const auto manifest =
      obfuscate::obfuscate_corpus(binfeed::read_manifest(in), freqs, config.train.seed, config.nop_byte);
  store_manifest(manifest, path, config);
  out << "manifest\t" << path.string() << '\t' << manifest.size() << " entries\n";
  return 0;
}

int cmd_render(const RunConfig& config, std::ostream& out) {
  const auto manifest = binfeed::read_manifest(require(config.manifest, "--manifest"));
  const auto dir = require(config.out, "--out");
  const auto bank = trainer::ImageBank::build(manifest, config.render());
  fs::create_directories(dir);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest.at(i);
    entropix::write_pgm(dir / (e.origin_id + ".pgm"), bank.image(i), e.origin_id, binfeed::to_string(e.lineage));
  }
  const auto stats = entropix::corpus_stats(manifest, config.block_size, config.width_blocks);
  const fs::path stats_path = config.stats.empty() ? dir / "stats.tsv" : fs::path(config.stats);
  entropix::write_stats(stats_path, stats, config.echo());
  out << "images\t" << manifest.size() << "\nmean\t" << stats.mean << "\nstd\t" << stats.std << '\n';
  return 0;
}

int cmd_train(RunConfig config, std::ostream& out) {
  apply_stats(config);
  const auto ck_path = require(config.checkpoint.empty() ? config.out : config.checkpoint, "--checkpoint");
  const auto bank = trainer::ImageBank::build(binfeed::read_manifest(require(config.manifest, "--manifest")),
                                              config.render());
  const auto split = resolve_split(bank.manifest(), config);
  std::ostringstream log;
  for (const auto& c : config.echo()) log << "# " << c << '\n';
  log << "episode\trelation\treconstruction\ttotal\n";
  log.precision(9);
  trainer::LossRecord last;
  auto ck = trainer::train(config.train, bank, split.train_classes, [&](const trainer::LossRecord& r) {
    log << r.episode << '\t' << r.relation << '\t' << r.reconstruction << '\t' << r.total << '\n';
    last = r;
  });
  ck.config_echo = config.echo();
  trainer::save_checkpoint(ck_path, ck);
  const fs::path log_path = config.loss_log.empty() ? fs::path(ck_path.string() + ".loss.tsv") : fs::path(config.loss_log);
  binfeed::write_file_atomic(log_path, log.str());
  out << "checkpoint\t" << ck_path.string() << "\nfinal_loss\t" << last.total << "\nparameters\t"
      << trainer::parameter_hash(ck.model) << '\n';
  return 0;
}

int cmd_eval(RunConfig config, std::ostream& out) {
  apply_stats(config);
  const auto ck = trainer::load_checkpoint(require(config.checkpoint, "--checkpoint"));
  const auto bank = trainer::ImageBank::build(binfeed::read_manifest(require(config.manifest, "--manifest")),
                                              config.render());
  const auto split = resolve_split(bank.manifest(), config);
  trainer::EvalOptions options;
  options.obfuscated = config.eval_obfuscated;
  if (!config.frequencies.empty()) options.frequency = config.frequencies.front();
  options.randomize_labels = config.randomize_labels;
  auto report = trainer::evaluate(ck, bank, split.test_classes, config.train, options);
  report.config_echo = config.echo();
  if (!config.out.empty()) binfeed::write_file_atomic(config.out, report.records());
  out << report.table_row() << '\n';
  return 0;
}

int cmd_embed(const RunConfig& config, std::ostream& out) {
  const auto ck = trainer::load_checkpoint(require(config.checkpoint, "--checkpoint"));
  const auto bank = trainer::ImageBank::build(binfeed::read_manifest(require(config.manifest, "--manifest")),
                                              ck.render);
  const auto path = require(config.out, "--out");
  const auto rows = trainer::export_embeddings(ck, bank);
  const auto echo = config.echo();
  trainer::write_embeddings(path, rows, echo);
  out << "embeddings\t" << path.string() << '\t' << rows.size() << " rows\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig config;
  auto& t = config.train;
  std::string pooling = "mean";
  std::string optimizer = "adam";
  std::string nop_byte = "90";
  bool no_decoder = false;
  bool no_augmented = false;

  CLI::App app{"Few-shot malware family classification from entropy images", "malfew"};
  app.set_config("--config", "", "Flat key=value config file; flags override it")->envname("MALFEW_CONFIG");
  app.require_subcommand(1, 1);

  app.add_option("--seed", t.seed, "Root seed");
  app.add_option("--way", t.ways, "Classes per episode")->check(CLI::PositiveNumber);
  app.add_option("--shot", t.shots, "Support samples per class")->check(CLI::PositiveNumber);
  auto* queries = app.add_option("--queries", t.queries, "Query samples per episode")->check(CLI::PositiveNumber);
  app.add_option("--episodes", t.episodes_train, "Training episodes")->check(CLI::PositiveNumber);
  app.add_option("--eval-episodes", t.episodes_eval, "Evaluation episodes per run")->check(CLI::PositiveNumber);
  app.add_option("--runs", t.runs, "Evaluation runs")->check(CLI::PositiveNumber);
  app.add_option("--lambda", t.lambda, "Reconstruction loss weight")->check(CLI::Range(0.0, 1.0));
  app.add_option("--lr", t.lr, "Learning rate")->check(CLI::PositiveNumber);
  app.add_option("--optimizer", optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
  app.add_option("--pooling", pooling, "Support pooling")->check(CLI::IsMember({"mean", "sum"}));
  app.add_option("--head-dim", t.head_dim, "Relation head width")->check(CLI::IsMember({128, 256}));
  app.add_flag("--no-decoder", no_decoder, "Train without the reconstruction branch");
  app.add_flag("--obfuscate-train", t.obfuscation_enabled, "Feed obfuscated variants as training inputs");
  app.add_flag("--no-augmented", no_augmented, "Sample originals only");
  app.add_option("--norm-mean", t.norm_mean, "Normalization mean");
  app.add_option("--norm-std", t.norm_std, "Normalization std")->check(CLI::PositiveNumber);
  app.add_option("--block-size", config.block_size, "Entropy block size in bytes")->check(CLI::PositiveNumber);
  app.add_option("--width-blocks", config.width_blocks, "Blocks per image row")->check(CLI::PositiveNumber);
  app.add_option("--nop-byte", nop_byte, "NOP byte as two hex digits");
  app.add_option("--frequency", config.frequencies, "NOP insertion frequency (repeatable)")->take_all();
  app.add_option("--families", config.families, "Synthetic families")->check(CLI::PositiveNumber);
  app.add_option("--per-family", config.per_family, "Synthetic samples per family")->check(CLI::PositiveNumber);
  app.add_option("--min-per-class", config.min_per_class, "Rotate originals up to this many samples per class");
  app.add_option("--train-classes", config.train_classes, "Families used for training");
  app.add_option("--test-classes", config.test_classes, "Families held out for evaluation");
  app.add_option("--root", config.root, "Corpus directory");
  app.add_option("--manifest", config.manifest, "Manifest file");
  app.add_option("--out", config.out, "Output path");
  app.add_option("--checkpoint", config.checkpoint, "Checkpoint file");
  app.add_option("--stats", config.stats, "Normalization stats file");
  app.add_option("--loss-log", config.loss_log, "Per-episode loss log");
  app.add_flag("--eval-obfuscated", config.eval_obfuscated, "Evaluate on obfuscated inputs");
  app.add_flag("--random-labels", config.randomize_labels, "Score against random labels");

  auto* ingest = app.add_subcommand("ingest", "Scan a corpus directory into a manifest")->fallthrough();
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus")->fallthrough();
  auto* obfus = app.add_subcommand("obfuscate", "Add NOP-inserted variants to a manifest")->fallthrough();
  auto* render = app.add_subcommand("render", "Write entropy images and normalization stats")->fallthrough();
  auto* train = app.add_subcommand("train", "Episodic training")->fallthrough();
  auto* eval = app.add_subcommand("eval", "Few-shot evaluation on held-out families")->fallthrough();
  auto* embed = app.add_subcommand("embed", "Export latent and projection vectors")->fallthrough();
  ingest->add_option("root", config.root, "Corpus directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    t.pooling = sdae::parse_pooling(pooling);
    t.optimizer = optimizer == "sgd" ? gradcore::OptimizerKind::Sgd : gradcore::OptimizerKind::Adam;
    t.decoder_enabled = !no_decoder;
    t.include_augmented = !no_augmented;
    if (queries->count() == 0) t.queries = trainer::default_queries(t.shots);
    config.nop_byte = parse_nop_byte(nop_byte);
    t.validate();

    if (ingest->parsed()) return cmd_ingest(config, out, err);
    if (synth->parsed()) return cmd_synth(config, out);
    if (obfus->parsed()) return cmd_obfuscate(config, out);
    if (render->parsed()) return cmd_render(config, out);
    if (train->parsed()) return cmd_train(config, out);
    if (eval->parsed()) return cmd_eval(config, out);
    if (embed->parsed()) return cmd_embed(config, out);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace malfew::cli
