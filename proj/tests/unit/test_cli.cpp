#include <sys/wait.h>

#include <cstdlib>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gen.hpp"
#include "onealign/binio.hpp"

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + ONEALIGN_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, ExitCodes) {
  gen::TempDir dir("cli");
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("eval-retrieval"), 2);
  EXPECT_EQ(run("ingest --workspace " + q(dir / "missing.json")), 2);
  onealign::binio::write_file(dir / "bad.json", "{not json");
  EXPECT_EQ(run("--config " + q(dir / "bad.json") + " align-train --out " + q(dir / "o")), 2);
  onealign::binio::write_file(dir / "x.txt", "1\n2\n");
  onealign::binio::write_file(dir / "y.txt", "3\nzz\n");
  EXPECT_EQ(run("stats wilcoxon --x " + q(dir / "x.txt") + " --y " + q(dir / "y.txt")), 2);
}

TEST(Cli, StatsWorkedCase) {
  gen::TempDir dir("cli_stats");
  onealign::binio::write_file(dir / "x.txt", "4\n5\n6\n");
  onealign::binio::write_file(dir / "y.txt", "1\n2\n3\n");
  ASSERT_EQ(run("--out " + q(dir / "o") + " stats wilcoxon --alternative greater --x " + q(dir / "x.txt") +
                " --y " + q(dir / "y.txt")),
            0);
  const auto j = nlohmann::json::parse(onealign::binio::read_file(dir / "o" / "stats.json"));
  EXPECT_EQ(j["p_value"].get<double>(), 0.05);
}

TEST(Cli, SynthIngestDeterministic) {
  gen::TempDir dir("cli_synth");
  for (const char* tag : {"a", "b"}) {
    ASSERT_EQ(run("--seed 4 --out " + q(dir / tag) + " synth --preset small"), 0);
    ASSERT_EQ(run("--seed 4 --out " + q(dir / (std::string(tag) + "_ing")) + " ingest --workspace " +
                  q(dir / tag / "workspace.json")),
              0);
  }
  EXPECT_EQ(onealign::binio::read_file(dir / "a" / "manifest.tsv"),
            onealign::binio::read_file(dir / "b" / "manifest.tsv"));
  EXPECT_EQ(onealign::binio::read_file(dir / "a_ing" / "pairs.tsv"),
            onealign::binio::read_file(dir / "b_ing" / "pairs.tsv"));
}

TEST(Cli, Selfcheck) { EXPECT_EQ(run("selfcheck"), 0); }
