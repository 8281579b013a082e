#ifndef KPZSYNC_IO_HPP
#define KPZSYNC_IO_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "kpzsync/analysis.hpp"
#include "kpzsync/cone.hpp"
#include "kpzsync/errors.hpp"
#include "kpzsync/grid.hpp"
#include "kpzsync/noise.hpp"
#include "kpzsync/rds.hpp"
#include "kpzsync/spde.hpp"

// Plain-text output: CSV tables, key=value sidecars, and gnuplot-ready
// two-column data. Doubles are printed with %.17g so files round-trip
// bit for bit, which the determinism contract leans on.

namespace kpzsync {

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace iodetail {

inline std::ofstream open_out(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string());
  }
  std::ofstream os(path, std::ios::binary);  // binary: fixed newlines everywhere
  if (!os) throw IoError("cannot open " + path + " for writing");
  return os;
}

inline void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw IoError("short write to " + path);
}

}  // namespace iodetail

inline void write_field_csv(const std::string& path, const GridFunction& f) {
  auto os = iodetail::open_out(path);
  os << "x,value\n";
  for (int j = 0; j < f.n(); ++j)
    os << format_full(f.grid().x(j)) << "," << format_full(f[j]) << "\n";
  iodetail::finish(os, path);
}

inline void write_kernel_csv(const std::string& path, const PositiveKernel& K) {
  auto os = iodetail::open_out(path);
  os << "# n=" << K.grid.n << " t=" << format_full(K.t) << "\n";
  for (int i = 0; i < K.grid.n; ++i) {
    for (int j = 0; j < K.grid.n; ++j) {
      if (j) os << ",";
      os << format_full(K.at(i, j));
    }
    os << "\n";
  }
  iodetail::finish(os, path);
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
  auto os = iodetail::open_out(path);
  os << "t,x,value\n";
  for (size_t s = 0; s < tr.times.size(); ++s)
    for (int j = 0; j < tr.grid.n; ++j)
      os << format_full(tr.times[s]) << "," << format_full(tr.grid.x(j)) << ","
         << format_full(tr.fields[s][j]) << "\n";
  iodetail::finish(os, path);
}

inline void write_sidecar(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& kv) {
  auto os = iodetail::open_out(path);
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
  iodetail::finish(os, path);
}

inline void write_white_noise_csv(const std::string& path, const WhiteNoiseField& w, int steps) {
  auto os = iodetail::open_out(path);
  os << "t,x,value\n";
  for (int m = 0; m < steps; ++m)
    for (int i = 0; i < w.grid().n; ++i)
      os << format_full((m + 0.5) * w.dt()) << "," << format_full(w.grid().x(i)) << ","
         << format_full(w.xi(m, i)) << "\n";
  iodetail::finish(os, path);
  write_sidecar(path + ".meta", {{"kind", "white"},
                                 {"seed", std::to_string(w.seed())},
                                 {"origin", std::to_string(w.origin())},
                                 {"dt", format_full(w.dt())},
                                 {"spu", std::to_string(w.spu())},
                                 {"n", std::to_string(w.grid().n)}});
}

inline void write_fbm_csv(const std::string& path, const FbmPath& p, int64_t steps) {
  auto os = iodetail::open_out(path);
  os << "t,value\n";
  for (int64_t m = 0; m <= steps; ++m)
    os << format_full(static_cast<double>(m) * p.dt()) << "," << format_full(p.beta(m)) << "\n";
  iodetail::finish(os, path);
  write_sidecar(path + ".meta", {{"kind", "fbm"},
                                 {"seed", std::to_string(p.seed())},
                                 {"origin", std::to_string(p.origin())},
                                 {"window_lo", std::to_string(p.window_lo())},
                                 {"window_hi", std::to_string(p.window_hi())},
                                 {"H", format_full(p.H())},
                                 {"dt", format_full(p.dt())},
                                 {"spu", std::to_string(p.spu())},
                                 {"dense_fallback", p.used_dense() ? "1" : "0"}});
}

inline void write_sync_csv(const std::string& path, const SyncReport& rep) {
  auto os = iodetail::open_out(path);
  os << "n,dH,log_dH,sup_norm_centered\n";
  for (size_t i = 0; i < rep.times.size(); ++i) {
    os << format_full(rep.times[i]) << "," << format_full(rep.dh[i]) << ",";
    if (rep.dh[i] > 0.0)
      os << format_full(std::log(rep.dh[i]));
    else
      os << "nan";
    os << "," << format_full(rep.sup_centered[i]) << "\n";
  }
  iodetail::finish(os, path);
}

inline void write_besov_csv(const std::string& path, const BesovProfile& bp) {
  auto os = iodetail::open_out(path);
  os << "j,block_norm\n";
  for (size_t i = 0; i < bp.blocks.size(); ++i)
    os << bp.blocks[i] << "," << format_full(bp.norms[i]) << "\n";
  iodetail::finish(os, path);
}

/// Two-column gnuplot data: `x y` per line, no header.
inline void write_plot_xy(const std::string& path, const std::vector<double>& xs,
                          const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw ValidationError("plot columns differ in length");
  auto os = iodetail::open_out(path);
  for (size_t i = 0; i < xs.size(); ++i)
    os << format_full(xs[i]) << " " << format_full(ys[i]) << "\n";
  iodetail::finish(os, path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::string s((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return s;
}

}  // namespace kpzsync

#endif
