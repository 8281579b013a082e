// Command-line front end: one subcommand per experiment kind plus `plot`.
// Configuration comes from an INI file, then --set overrides, then the
// dedicated flags; the merged config is validated as a whole before any
// work starts. Failures leave a machine-readable error.json in the output
// directory and map to the documented exit codes.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kpzsync/config.hpp"
#include "kpzsync/errors.hpp"
#include "kpzsync/experiments.hpp"

namespace {

struct Invocation {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed_str;
  std::string out;
  int jobs = 1;
};

void add_run_options(CLI::App* sub, Invocation* inv) {
  sub->add_option("-c,--config", inv->config_path, "INI config file");
  sub->add_option("--set", inv->sets,
                  "override as key=value or section.key=value (repeatable)");
  sub->add_option("--seed", inv->seed_str, "RNG seed override");
  sub->add_option("-o,--out", inv->out, "output directory");
  sub->add_option("-j,--jobs", inv->jobs, "worker threads for replicates")
      ->check(CLI::Range(1, 256));
}

kpzsync::ExperimentConfig merge_config(const std::string& kind, const Invocation& inv) {
  using kpzsync::ExperimentConfig;
  ExperimentConfig cfg;
  if (!inv.config_path.empty()) cfg = ExperimentConfig::parse_file(inv.config_path);
  cfg.kind = kind;
  std::vector<std::string> violations;
  for (const std::string& s : inv.sets) {
    size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      violations.push_back("--set needs key=value, got '" + s + "'");
      continue;
    }
    std::string key = s.substr(0, eq);
    std::string value = s.substr(eq + 1);
    std::string section;
    size_t dot = key.find('.');
    if (dot != std::string::npos) {
      section = key.substr(0, dot);
      key = key.substr(dot + 1);
    }
    cfg.set_key(section, key, value, &violations);
  }
  if (!inv.seed_str.empty()) cfg.set_key("experiment", "seed", inv.seed_str, &violations);
  if (!inv.out.empty()) cfg.out = inv.out;
  cfg.validate(&violations);
  if (!violations.empty()) {
    std::string msg = "config invalid (" + std::to_string(violations.size()) + " problem" +
                      (violations.size() == 1 ? "" : "s") + "):";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw kpzsync::ValidationError(msg);
  }
  return cfg;
}

void write_error_json(const std::string& dir, const std::string& message, int exit_code) {
  try {
    nlohmann::json j;
    j["message"] = message;
    j["exit_code"] = exit_code;
    auto os = kpzsync::iodetail::open_out(dir + "/error.json");
    os << j.dump(2) << "\n";
    kpzsync::iodetail::finish(os, dir + "/error.json");
  } catch (...) {
    // Best effort only; the exit code and stderr already carry the failure.
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kpzsync: positive solution cocycles of the multiplicative heat equation"};
  app.set_version_flag("--version", kpzsync::artifact_version);
  app.require_subcommand(1);

  std::vector<std::pair<std::string, const char*>> kinds = {
      {"noise-check", "sample-path statistics of the driving noise"},
      {"she", "solve one trajectory per replicate"},
      {"lyapunov", "per-unit Birkhoff contraction samples"},
      {"sync-forward", "two-start projective synchronization"},
      {"sync-pullback", "pullback Cauchy sequence and its limit"},
      {"krein-rutman", "fixed point of a frozen kernel"},
      {"constants", "height-difference constant tracking"},
      {"regularity", "Besov/Schauder estimator checks"}};

  Invocation inv;
  for (auto& [name, desc] : kinds) add_run_options(app.add_subcommand(name, desc), &inv);

  std::string plot_dir = "out";
  CLI::App* plot = app.add_subcommand("plot", "emit gnuplot .dat files from a finished run");
  plot->add_option("-o,--out", plot_dir, "run directory holding manifest.json");

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  std::string out_dir = inv.out.empty() ? std::string("out") : inv.out;
  try {
    if (sub == plot) {
      auto made = kpzsync::emit_plotdata(plot_dir);
      std::printf("wrote %zu plot file%s to %s\n", made.size(), made.size() == 1 ? "" : "s",
                  plot_dir.c_str());
      return 0;
    }
    kpzsync::ExperimentConfig cfg = merge_config(sub->get_name(), inv);
    out_dir = cfg.out;
    kpzsync::RunManifest man = kpzsync::run_experiment(cfg, inv.jobs);
    std::printf("%s: %zu output file%s in %s (%.2fs, config %016llx)\n", cfg.kind.c_str(),
                man.outputs.size(), man.outputs.size() == 1 ? "" : "s", cfg.out.c_str(),
                man.wall_seconds, static_cast<unsigned long long>(man.config_hash));
    return 0;
  } catch (const kpzsync::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    int code = static_cast<int>(e.code());
    write_error_json(sub == plot ? plot_dir : out_dir, e.what(), code);
    return code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    write_error_json(sub == plot ? plot_dir : out_dir, e.what(), 1);
    return 1;
  }
}
