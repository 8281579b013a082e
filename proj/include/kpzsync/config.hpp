#ifndef KPZSYNC_CONFIG_HPP
#define KPZSYNC_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kpzsync/errors.hpp"
#include "kpzsync/io.hpp"
#include "kpzsync/noise.hpp"
#include "kpzsync/rds.hpp"

// Experiment configuration: flat INI-style text with [experiment] and
// [noise] sections. Parsing reports parse errors with line numbers and
// collects every validation violation before throwing, so a bad config is
// fixed in one round trip. serialize() is canonical: parse(serialize(c))
// reproduces c exactly, and the FNV hash of the canonical form identifies
// the run in the manifest.

namespace kpzsync {

inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

struct ExperimentConfig {
  // [experiment]
  std::string kind = "sync-forward";
  int n = 64;
  int spu = 64;
  double unit_time = 1.0;
  int horizon = 16;       // units: N_steps, N_max, sample count, per kind
  int64_t t_obs = 0;      // pullback observation units
  int replicates = 1;
  int ensemble = 400;     // inner Monte Carlo size (noise-check)
  uint64_t seed = 1;
  std::string out = "out";
  double tol = 1e-8;      // krein-rutman stopping tolerance
  int store_stride = 0;   // trajectory storage stride in solver steps
  std::string u0 = "const:1,sin:1:0.5";
  std::string u0_b = "const:1,cos:1:0.25";
  // [noise]
  std::string noise_type = "zero";
  double H = 0.75;
  std::string V = "sin:1:1";

  static const std::set<std::string>& kinds() {
    static const std::set<std::string> k = {"noise-check",  "she",          "lyapunov",
                                            "sync-forward", "sync-pullback", "krein-rutman",
                                            "constants",    "regularity"};
    return k;
  }

  NoiseKind noise_kind() const {
    if (noise_type == "zero") return NoiseKind::Zero;
    if (noise_type == "fractional") return NoiseKind::Fractional;
    return NoiseKind::White;
  }

  SpatialProfile profile() const { return SpatialProfile::parse(V); }
  SpatialProfile initial_profile() const { return SpatialProfile::parse(u0); }
  SpatialProfile initial_profile_b() const { return SpatialProfile::parse(u0_b); }

  std::string serialize() const {
    std::ostringstream os;
    os << "[experiment]\n";
    os << "kind = " << kind << "\n";
    os << "n = " << n << "\n";
    os << "spu = " << spu << "\n";
    os << "unit_time = " << format_full(unit_time) << "\n";
    os << "horizon = " << horizon << "\n";
    os << "t_obs = " << t_obs << "\n";
    os << "replicates = " << replicates << "\n";
    os << "ensemble = " << ensemble << "\n";
    os << "seed = " << seed << "\n";
    // `out` is deliberately not serialized: the canonical text describes the
    // experiment itself, so runs into different directories hash identically.
    os << "tol = " << format_full(tol) << "\n";
    os << "store_stride = " << store_stride << "\n";
    os << "u0 = " << u0 << "\n";
    os << "u0_b = " << u0_b << "\n";
    os << "[noise]\n";
    os << "type = " << noise_type << "\n";
    os << "H = " << format_full(H) << "\n";
    os << "V = " << V << "\n";
    return os.str();
  }

  uint64_t hash() const { return fnv1a(serialize()); }

  /// Apply one key=value assignment. Section may be empty (inferred from the
  /// key name, which is unique across sections). Appends to violations
  /// instead of throwing so every problem is reported together.
  void set_key(const std::string& section, const std::string& key, const std::string& value,
               std::vector<std::string>* violations);

  void validate(std::vector<std::string>* violations) const;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig parse_file(const std::string& path) {
    return parse(read_text_file(path));
  }
};

namespace configdetail {

inline std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline bool to_double(const std::string& s, double* out) {
  try {
    size_t pos = 0;
    *out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

inline bool to_int64(const std::string& s, int64_t* out) {
  try {
    size_t pos = 0;
    *out = std::stoll(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

inline bool to_uint64(const std::string& s, uint64_t* out) {
  try {
    size_t pos = 0;
    *out = std::stoull(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace configdetail

inline void ExperimentConfig::set_key(const std::string& section, const std::string& key,
                                      const std::string& value,
                                      std::vector<std::string>* violations) {
  using namespace configdetail;
  auto bad_number = [&] {
    violations->push_back("key '" + key + "': cannot parse number from '" + value + "'");
  };
  auto as_int = [&](int* dst, const std::string& k) {
    int64_t v;
    if (!to_int64(value, &v))
      bad_number();
    else
      *dst = static_cast<int>(v);
    (void)k;
  };
  const bool in_noise = section == "noise";
  if (!section.empty() && section != "experiment" && section != "noise") {
    violations->push_back("unknown section [" + section + "]");
    return;
  }
  if (!in_noise && key == "kind") kind = value;
  else if (!in_noise && key == "n") as_int(&n, key);
  else if (!in_noise && key == "spu") as_int(&spu, key);
  else if (!in_noise && key == "unit_time") { if (!to_double(value, &unit_time)) bad_number(); }
  else if (!in_noise && key == "horizon") as_int(&horizon, key);
  else if (!in_noise && key == "t_obs") { if (!to_int64(value, &t_obs)) bad_number(); }
  else if (!in_noise && key == "replicates") as_int(&replicates, key);
  else if (!in_noise && key == "ensemble") as_int(&ensemble, key);
  else if (!in_noise && key == "seed") { if (!to_uint64(value, &seed)) bad_number(); }
  else if (!in_noise && key == "out") out = value;
  else if (!in_noise && key == "tol") { if (!to_double(value, &tol)) bad_number(); }
  else if (!in_noise && key == "store_stride") as_int(&store_stride, key);
  else if (!in_noise && key == "u0") u0 = value;
  else if (!in_noise && key == "u0_b") u0_b = value;
  else if (in_noise && key == "type") noise_type = value;
  else if (in_noise && key == "H") { if (!to_double(value, &H)) bad_number(); }
  else if (in_noise && key == "V") V = value;
  else if (section.empty()) {
    // Command-line override: section inferred by name.
    if (key == "type" || key == "H" || key == "V")
      set_key("noise", key, value, violations);
    else if (key == "kind" || key == "n" || key == "spu" || key == "unit_time" ||
             key == "horizon" || key == "t_obs" || key == "replicates" || key == "ensemble" ||
             key == "seed" || key == "out" || key == "tol" || key == "store_stride" ||
             key == "u0" || key == "u0_b")
      set_key("experiment", key, value, violations);
    else
      violations->push_back("unknown key '" + key + "'");
  } else {
    violations->push_back("unknown key '" + key + "' in section [" + section + "]");
  }
}

inline void ExperimentConfig::validate(std::vector<std::string>* violations) const {
  if (!kinds().count(kind))
    violations->push_back("kind '" + kind + "' is not an experiment kind");
  if (n < 8 || (n & (n - 1)) != 0 || n > 4096)
    violations->push_back("n must be a power of two in [8, 4096], got " + std::to_string(n));
  if (spu < 1 || spu > 1000000)
    violations->push_back("spu must be in [1, 1e6], got " + std::to_string(spu));
  if (!(unit_time > 0.0) || unit_time > 16.0)
    violations->push_back("unit_time must be in (0, 16]");
  if (horizon < 1 || horizon > 4096)
    violations->push_back("horizon must be in [1, 4096], got " + std::to_string(horizon));
  if (t_obs < 0 || t_obs > 4096) violations->push_back("t_obs must be in [0, 4096]");
  if (replicates < 1 || replicates > 100000)
    violations->push_back("replicates must be in [1, 1e5]");
  if (ensemble < 2 || ensemble > 1000000) violations->push_back("ensemble must be in [2, 1e6]");
  if (!(tol > 0.0) || tol >= 1.0) violations->push_back("tol must be in (0, 1)");
  if (store_stride < 0) violations->push_back("store_stride must be >= 0");
  if (noise_type != "zero" && noise_type != "fractional" && noise_type != "white")
    violations->push_back("noise type '" + noise_type + "' is not zero|fractional|white");
  if (noise_type == "fractional" && (!(H > 0.5) || !(H < 1.0)))
    violations->push_back("H must be in (1/2, 1), got " + format_full(H));
  if (kind == "constants" && noise_type == "white")
    violations->push_back("constants tracking needs zero or fractional noise");
  if (kind == "noise-check" && noise_type == "zero")
    violations->push_back("noise-check needs fractional or white noise");
  for (const auto& [name, text] :
       {std::pair<const char*, const std::string&>{"V", V}, {"u0", u0}, {"u0_b", u0_b}}) {
    try {
      SpatialProfile::parse(text);
    } catch (const ParseError& e) {
      violations->push_back(std::string(name) + ": " + e.what());
    }
  }
}

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  using namespace configdetail;
  ExperimentConfig cfg;
  std::vector<std::string> violations;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParseError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section != "experiment" && section != "noise")
        violations.push_back("unknown section [" + section + "]");
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected key = value, got '" + t +
                       "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParseError("line " + std::to_string(lineno) + ": empty key");
    if (section == "experiment" || section == "noise")
      cfg.set_key(section, key, value, &violations);
    else if (section.empty())
      cfg.set_key("", key, value, &violations);
    // keys under an unknown section were already reported once
  }
  cfg.validate(&violations);
  if (!violations.empty()) {
    std::string msg = "config invalid (" + std::to_string(violations.size()) + " problem" +
                      (violations.size() == 1 ? "" : "s") + "):";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ValidationError(msg);
  }
  return cfg;
}

}  // namespace kpzsync

#endif
