#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "malfew/binfeed.hpp"
#include "malfew/cli.hpp"
#include "support.hpp"

using malfew::testkit::TempDir;
using malfew::testkit::slurp;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "malfew");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = malfew::cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string value_of(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.starts_with(key + "\t")) return line.substr(key.size() + 1);
  }
  return {};
}

}  // namespace

TEST(Cli, IngestTwoFamilies) {
  TempDir dir;
  for (const char* fam : {"Bitman", "Sage"}) {
    for (int i = 0; i < 3; ++i) {
      malfew::testkit::write_bytes(dir / "corpus" / fam / ("s" + std::to_string(i)), {0x4D, 0x5A, std::uint8_t(i)});
    }
  }
  const auto r = run({"ingest", (dir / "corpus").string(), "--out", (dir / "m.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("6 entries\t2 classes"), std::string::npos) << r.out;
  const auto m = malfew::binfeed::read_manifest(dir / "m.tsv");
  EXPECT_EQ(m.families(), (std::vector<std::string>{"Bitman", "Sage"}));

  const auto again = run({"ingest", (dir / "corpus").string(), "--out", (dir / "m2.tsv").string()});
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(slurp(dir / "m.tsv"), slurp(dir / "m2.tsv"));
}

TEST(Cli, MissingRootFails) {
  TempDir dir;
  const auto r = run({"ingest", (dir / "nowhere").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, BadFlagsFail) {
  EXPECT_NE(run({"train", "--lambda", "2"}).code, 0);
  EXPECT_NE(run({"train", "--head-dim", "64"}).code, 0);
  EXPECT_NE(run({}).code, 0);
  EXPECT_NE(run({"obfuscate", "--nop-byte", "zz", "--manifest", "x"}).code, 0);
}

TEST(Cli, FullPipeline) {
  TempDir dir;
  const auto corpus = dir / "corpus";
  const auto manifest = (corpus / "manifest.tsv").string();
  const std::vector<std::string> common = {"--seed", "3", "--manifest", manifest, "--stats",
                                           (dir / "stats.tsv").string(), "--queries", "4", "--shot", "1"};
  auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), common.begin(), common.end());
    return run(args);
  };

  auto r = run({"synth", "--out", corpus.string(), "--families", "4", "--per-family", "5", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("20 entries"), std::string::npos);

  r = run({"obfuscate", "--manifest", manifest, "--frequency", "200", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("40 entries"), std::string::npos);

  r = with({"render", "--out", (dir / "img").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "stats.tsv"));
  EXPECT_EQ(value_of(r.out, "images"), "40");

  const auto ck = (dir / "ck.bin").string();
  r = with({"train", "--episodes", "2", "--checkpoint", ck, "--train-classes", "2", "--test-classes", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto hash = value_of(r.out, "parameters");
  EXPECT_EQ(hash.size(), 64u);
  EXPECT_TRUE(std::filesystem::exists(ck + ".loss.tsv"));
  EXPECT_NE(slurp(ck + ".loss.tsv").find("episode\trelation\treconstruction\ttotal"), std::string::npos);

  const auto ck2 = (dir / "ck2.bin").string();
  r = with({"train", "--episodes", "2", "--checkpoint", ck2, "--train-classes", "2", "--test-classes", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(value_of(r.out, "parameters"), hash);
  EXPECT_EQ(slurp(ck), slurp(ck2));

  const auto report = (dir / "report.tsv").string();
  r = with({"eval", "--checkpoint", ck, "--eval-episodes", "3", "--runs", "2", "--out", report, "--train-classes",
            "2", "--test-classes", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("2-way 1-shot: "), std::string::npos) << r.out;
  EXPECT_NE(slurp(report).find("run_mean"), std::string::npos);

  r = with({"eval", "--checkpoint", ck, "--eval-episodes", "3", "--runs", "1", "--eval-obfuscated", "--frequency",
            "200", "--train-classes", "2", "--test-classes", "2"});
  ASSERT_EQ(r.code, 0) << r.err;

  const auto emb = (dir / "emb.tsv").string();
  r = with({"embed", "--checkpoint", ck, "--out", emb});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("40 rows"), std::string::npos);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  TempDir dir;
  std::ofstream(dir / "run.ini") << "families = 3\nper-family = 4\nseed = 9\n";
  auto r = run({"synth", "--config", (dir / "run.ini").string(), "--out", (dir / "a").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("12 entries"), std::string::npos) << r.out;
  r = run({"synth", "--config", (dir / "run.ini").string(), "--per-family", "2", "--out", (dir / "b").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("6 entries"), std::string::npos) << r.out;
  EXPECT_NE(slurp(dir / "b" / "manifest.tsv").find("# seed=9"), std::string::npos);
}
