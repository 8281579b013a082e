#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include <sys/wait.h>

#include "kpzsync/config.hpp"
#include "kpzsync/experiments.hpp"
#include "kpzsync/io.hpp"

using namespace kpzsync;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(KPZSYNC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> dir_contents(const fs::path& d) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(d))
    if (e.is_regular_file())
      out[fs::relative(e.path(), d).string()] = read_text_file(e.path().string());
  return out;
}

}  // namespace

TEST_CASE("doubles print with full round-trip precision") {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -7.2e-18}) {
    REQUIRE(std::stod(format_full(v)) == v);
  }
}

TEST_CASE("config serialization is a parse fixed point") {
  ExperimentConfig cfg;
  cfg.kind = "sync-forward";
  std::string text = cfg.serialize();
  ExperimentConfig back = ExperimentConfig::parse(text);
  REQUIRE(back.serialize() == text);
  REQUIRE(back.hash() == cfg.hash());
}

TEST_CASE("defaults validate cleanly") {
  ExperimentConfig cfg;
  std::vector<std::string> v;
  cfg.validate(&v);
  REQUIRE(v.empty());
}

TEST_CASE("every violation is reported in one pass") {
  ExperimentConfig cfg;
  cfg.n = 37;
  cfg.noise_type = "fractional";
  cfg.H = 0.4;
  cfg.tol = 2.0;
  std::vector<std::string> v;
  cfg.validate(&v);
  REQUIRE(v.size() == 3);
}

TEST_CASE("H violations carry the documented message") {
  ExperimentConfig cfg;
  cfg.noise_type = "fractional";
  for (double h : {0.3, 0.5, 1.0, 1.5}) {
    cfg.H = h;
    std::vector<std::string> v;
    cfg.validate(&v);
    REQUIRE(v.size() == 1);
    REQUIRE(v[0].find("H must be in (1/2, 1)") == 0);
  }
  cfg.H = 0.75;
  std::vector<std::string> v;
  cfg.validate(&v);
  REQUIRE(v.empty());
  // Outside the fractional regime H is inert metadata.
  cfg.noise_type = "zero";
  cfg.H = 0.1;
  v.clear();
  cfg.validate(&v);
  REQUIRE(v.empty());
}

TEST_CASE("parse reports unknown keys by name and collects everything") {
  std::string text =
      "[experiment]\n"
      "kind = she\n"
      "banana = 3\n"
      "n = 37\n";
  try {
    ExperimentConfig::parse(text);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    REQUIRE(msg.find("banana") != std::string::npos);
    REQUIRE(msg.find("power of two") != std::string::npos);
    REQUIRE(msg.find("2 problems") != std::string::npos);
  }
}

TEST_CASE("parse errors carry line numbers") {
  REQUIRE_THROWS_WITH(ExperimentConfig::parse("[experiment]\nkind she\n"),
                      Catch::Matchers::ContainsSubstring("line 2"));
  REQUIRE_THROWS_WITH(ExperimentConfig::parse("[noise\n"),
                      Catch::Matchers::ContainsSubstring("line 1"));
}

TEST_CASE("section is inferred from unambiguous keys") {
  ExperimentConfig cfg;
  std::vector<std::string> v;
  cfg.set_key("", "type", "white", &v);
  cfg.set_key("", "horizon", "8", &v);
  cfg.set_key("", "V", "sin:2:1", &v);
  REQUIRE(v.empty());
  REQUIRE(cfg.noise_type == "white");
  REQUIRE(cfg.horizon == 8);
  REQUIRE(cfg.V == "sin:2:1");
}

TEST_CASE("config hash tracks content") {
  ExperimentConfig a, b;
  REQUIRE(a.hash() == b.hash());
  b.seed = 2;
  REQUIRE(a.hash() != b.hash());
}

TEST_CASE("cross-field constraints are enforced") {
  ExperimentConfig cfg;
  cfg.kind = "constants";
  cfg.noise_type = "white";
  std::vector<std::string> v;
  cfg.validate(&v);
  REQUIRE(v.size() == 1);
  cfg.noise_type = "fractional";
  v.clear();
  cfg.validate(&v);
  REQUIRE(v.empty());

  cfg.kind = "noise-check";
  cfg.noise_type = "zero";
  v.clear();
  cfg.validate(&v);
  REQUIRE(v.size() == 1);
}

TEST_CASE("csv writers produce headers and full-precision rows") {
  fs::path d = fresh_dir("kpzsync_io_csv");
  TorusGrid g(8);
  GridFunction f(g, 0.0);
  for (int j = 0; j < g.n; ++j) f[j] = 1.0 + j / 7.0;
  std::string p = (d / "f.csv").string();
  write_field_csv(p, f);
  std::string body = read_text_file(p);
  REQUIRE(body.rfind("x,value\n", 0) == 0);
  REQUIRE(std::count(body.begin(), body.end(), '\n') == 9);
  REQUIRE(body.find(format_full(1.0 + 3.0 / 7.0)) != std::string::npos);
}

TEST_CASE("experiment runs are byte-identical across directories and thread counts") {
  ExperimentConfig cfg;
  cfg.kind = "sync-forward";
  cfg.n = 32;
  cfg.spu = 8;
  cfg.unit_time = 0.125;
  cfg.horizon = 6;
  cfg.replicates = 2;
  cfg.noise_type = "fractional";
  cfg.seed = 11;

  fs::path d1 = fresh_dir("kpzsync_det_a");
  fs::path d2 = fresh_dir("kpzsync_det_b");
  cfg.out = d1.string();
  run_experiment(cfg, 1);
  cfg.out = d2.string();
  run_experiment(cfg, 2);  // different worker count must not matter

  auto c1 = dir_contents(d1);
  auto c2 = dir_contents(d2);
  REQUIRE(c1.size() == c2.size());
  for (const auto& [name, body] : c1) {
    INFO(name);
    if (name == "manifest.json") continue;  // wall-clock field is informational
    REQUIRE(c2.count(name) == 1);
    REQUIRE(c2.at(name) == body);
  }
}

TEST_CASE("cli runs, plots, and maps failures to documented exit codes") {
  fs::path d = fresh_dir("kpzsync_cli_run");
  std::string common = "--set n=32 --set spu=8 --set unit_time=0.125 --set horizon=6 --seed 3";
  REQUIRE(run_cli("sync-forward " + common + " --out " + d.string()) == 0);
  REQUIRE(fs::exists(d / "manifest.json"));
  REQUIRE(fs::exists(d / "sync.csv"));
  REQUIRE(fs::exists(d / "summary.json"));

  // Plot derives .dat files from the manifest.
  REQUIRE(run_cli("plot --out " + d.string()) == 0);
  REQUIRE(fs::exists(d / "sync_logdH.dat"));

  // Config failures exit 2 and leave a machine-readable error.json.
  fs::path bad = fresh_dir("kpzsync_cli_bad");
  REQUIRE(run_cli("sync-forward --set type=fractional --set H=0.4 --out " + bad.string()) == 2);
  REQUIRE(fs::exists(bad / "error.json"));
  std::string err = read_text_file((bad / "error.json").string());
  REQUIRE(err.find("H must be in (1/2, 1)") != std::string::npos);
  REQUIRE(err.find("\"exit_code\": 2") != std::string::npos);

  // Plotting an empty directory is an I/O failure: exit 4.
  fs::path empty = fresh_dir("kpzsync_cli_empty");
  REQUIRE(run_cli("plot --out " + empty.string()) == 4);
}

TEST_CASE("cli output is byte-stable across repeat invocations") {
  fs::path d1 = fresh_dir("kpzsync_cli_rep_a");
  fs::path d2 = fresh_dir("kpzsync_cli_rep_b");
  std::string common =
      "she --set n=32 --set spu=16 --set unit_time=0.5 --set horizon=2 "
      "--set type=fractional --set store_stride=8 --seed 21 --out ";
  REQUIRE(run_cli(common + d1.string()) == 0);
  REQUIRE(run_cli(common + d2.string()) == 0);
  auto c1 = dir_contents(d1);
  auto c2 = dir_contents(d2);
  REQUIRE(c1.size() == c2.size());
  for (const auto& [name, body] : c1) {
    if (name == "manifest.json") continue;
    INFO(name);
    REQUIRE(c2.at(name) == body);
  }
  // The manifests agree on everything but the wall clock.
  RunManifest m1 = read_manifest(d1.string());
  RunManifest m2 = read_manifest(d2.string());
  REQUIRE(m1.config_hash == m2.config_hash);
  REQUIRE(m1.outputs == m2.outputs);
  REQUIRE(m1.replicate_seeds == m2.replicate_seeds);
}
