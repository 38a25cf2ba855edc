#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdrhs/engine.hpp"
#include "fdrhs/grid.hpp"
#include "fdrhs/params.hpp"
#include "fdrhs/stats.hpp"

namespace fdrhs {

namespace io {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw io_error("cannot parse number '" + s + "' in " + context);
  }
}

inline long parse_long(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw io_error("cannot parse integer '" + s + "' in " + context);
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps \n on every platform
  if (!out) throw io_error("cannot write " + path);
  return out;
}

}  // namespace io

// ---------------------------------------------------------------------------
// mask: header voxel_id,i,j,k with 0-based coordinates in voxel_id order

inline void write_mask_csv(const std::string& path, const VoxelGrid& grid) {
  auto out = io::open_output(path);
  out << "voxel_id,i,j,k\n";
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Coord& c = grid.coord(static_cast<int>(v));
    out << v << ',' << c.i << ',' << c.j << ',' << c.k << '\n';
  }
}

inline VoxelGrid read_mask_csv(const std::string& path, std::array<int, 3> dims) {
  auto in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line) || io::split_csv_line(line) != std::vector<std::string>{"voxel_id", "i", "j", "k"})
    throw io_error("bad mask header in " + path + " (expected voxel_id,i,j,k)");
  std::vector<Coord> coords;
  long expected = 0;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 4) throw io_error("bad mask row in " + path + ": " + line);
    if (io::parse_long(f[0], path) != expected)
      throw io_error("mask voxel_id not consecutive in " + path);
    coords.push_back({static_cast<int>(io::parse_long(f[1], path)),
                      static_cast<int>(io::parse_long(f[2], path)),
                      static_cast<int>(io::parse_long(f[3], path))});
    ++expected;
  }
  if (coords.empty()) throw io_error("empty mask in " + path);
  try {
    return VoxelGrid(dims, std::move(coords));
  } catch (const std::invalid_argument& e) {
    throw io_error(std::string("invalid mask in ") + path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// labels: header subject_id,label with label in {+1, -1}

inline void write_labels_csv(const std::string& path, const std::vector<int>& y) {
  auto out = io::open_output(path);
  out << "subject_id,label\n";
  for (std::size_t s = 0; s < y.size(); ++s) out << s << ',' << (y[s] > 0 ? "+1" : "-1") << '\n';
}

inline std::vector<int> read_labels_csv(const std::string& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line) ||
      io::split_csv_line(line) != std::vector<std::string>{"subject_id", "label"})
    throw io_error("bad labels header in " + path + " (expected subject_id,label)");
  std::vector<int> y;
  long expected = 0;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 2) throw io_error("bad labels row in " + path + ": " + line);
    if (io::parse_long(f[0], path) != expected) throw io_error("subject_id not consecutive in " + path);
    const std::string& lab = f[1];
    if (lab == "+1" || lab == "1")
      y.push_back(1);
    else if (lab == "-1")
      y.push_back(-1);
    else
      throw io_error("label must be +1 or -1 in " + path + ", got '" + lab + "'");
    ++expected;
  }
  if (y.empty()) throw io_error("empty labels file " + path);
  return y;
}

// ---------------------------------------------------------------------------
// data: headerless CSV, one row per subject, columns in voxel_id order;
// raw64 alternative: row-major little-endian float64, shape from the manifest

inline void write_data_csv(const std::string& path, const Eigen::MatrixXd& x) {
  auto out = io::open_output(path);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (c) out << ',';
      out << io::fmt_double(x(r, c));
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd read_data_csv(const std::string& path) {
  auto in = io::open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    const auto f = io::split_csv_line(line);
    std::vector<double> row;
    row.reserve(f.size());
    for (const auto& s : f) row.push_back(io::parse_double(s, path));
    if (!rows.empty() && row.size() != rows.front().size())
      throw io_error("ragged data rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw io_error("empty data file " + path);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) x(r, c) = rows[r][c];
  return x;
}

inline void write_data_raw64(const std::string& path, const Eigen::MatrixXd& x) {
  auto out = io::open_output(path);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double v = x(r, c);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

inline Eigen::MatrixXd read_data_raw64(const std::string& path, long n, long p) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < p; ++c) {
      double v;
      if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw io_error("raw64 file " + path + " shorter than n*p doubles");
      x(r, c) = v;
    }
  char extra;
  if (in.read(&extra, 1)) throw io_error("raw64 file " + path + " longer than n*p doubles");
  return x;
}

// ---------------------------------------------------------------------------
// truth: header voxel_id,truth_group with group in {lesion, bias, null}

inline void write_truth_csv(const std::string& path, int p, const std::vector<int>& lesion,
                            const std::vector<int>& bias) {
  std::vector<std::string> group(static_cast<std::size_t>(p), "null");
  for (int v : lesion) group.at(static_cast<std::size_t>(v)) = "lesion";
  for (int v : bias) {
    if (group.at(static_cast<std::size_t>(v)) == "lesion")
      throw std::invalid_argument("truth voxel assigned to both groups");
    group[static_cast<std::size_t>(v)] = "bias";
  }
  auto out = io::open_output(path);
  out << "voxel_id,truth_group\n";
  for (int v = 0; v < p; ++v) out << v << ',' << group[static_cast<std::size_t>(v)] << '\n';
}

struct TruthSets {
  std::vector<int> lesion;
  std::vector<int> bias;
  int p = 0;
};

inline TruthSets read_truth_csv(const std::string& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line) ||
      io::split_csv_line(line) != std::vector<std::string>{"voxel_id", "truth_group"})
    throw io_error("bad truth header in " + path);
  TruthSets t;
  long expected = 0;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 2) throw io_error("bad truth row in " + path + ": " + line);
    if (io::parse_long(f[0], path) != expected) throw io_error("voxel_id not consecutive in " + path);
    if (f[1] == "lesion")
      t.lesion.push_back(static_cast<int>(expected));
    else if (f[1] == "bias")
      t.bias.push_back(static_cast<int>(expected));
    else if (f[1] != "null")
      throw io_error("truth_group must be lesion/bias/null in " + path);
    ++expected;
  }
  t.p = static_cast<int>(expected);
  return t;
}

// ---------------------------------------------------------------------------
// fit output: voxel_id,i,j,k,t,z,beta,c,lfdr,selected,group

struct FitRow {
  double t = 0, z = 0, beta = 0, c = 0, lfdr = 0;
  bool selected = false;
  std::string group = "none";  // bias | lesion | none
};

inline void write_fit_csv(const std::string& path, const VoxelGrid& grid,
                          const std::vector<FitRow>& rows) {
  if (rows.size() != grid.size()) throw std::invalid_argument("fit rows do not match grid");
  auto out = io::open_output(path);
  out << "voxel_id,i,j,k,t,z,beta,c,lfdr,selected,group\n";
  for (std::size_t v = 0; v < rows.size(); ++v) {
    const Coord& c = grid.coord(static_cast<int>(v));
    const FitRow& r = rows[v];
    out << v << ',' << c.i << ',' << c.j << ',' << c.k << ',' << io::fmt_double(r.t) << ','
        << io::fmt_double(r.z) << ',' << io::fmt_double(r.beta) << ',' << io::fmt_double(r.c)
        << ',' << io::fmt_double(r.lfdr) << ',' << (r.selected ? 1 : 0) << ',' << r.group << '\n';
  }
}

struct FitTable {
  std::vector<Coord> coords;
  std::vector<FitRow> rows;

  std::vector<int> selected() const {
    std::vector<int> out;
    for (std::size_t v = 0; v < rows.size(); ++v)
      if (rows[v].selected) out.push_back(static_cast<int>(v));
    return out;
  }
  std::vector<int> selected_group(const std::string& g) const {
    std::vector<int> out;
    for (std::size_t v = 0; v < rows.size(); ++v)
      if (rows[v].selected && rows[v].group == g) out.push_back(static_cast<int>(v));
    return out;
  }
};

inline FitTable read_fit_csv(const std::string& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!std::getline(in, line) ||
      io::split_csv_line(line) !=
          std::vector<std::string>{"voxel_id", "i", "j", "k", "t", "z", "beta", "c", "lfdr",
                                   "selected", "group"})
    throw io_error("bad fit header in " + path);
  FitTable table;
  long expected = 0;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 11) throw io_error("bad fit row in " + path + ": " + line);
    if (io::parse_long(f[0], path) != expected) throw io_error("voxel_id not consecutive in " + path);
    table.coords.push_back({static_cast<int>(io::parse_long(f[1], path)),
                            static_cast<int>(io::parse_long(f[2], path)),
                            static_cast<int>(io::parse_long(f[3], path))});
    FitRow r;
    r.t = io::parse_double(f[4], path);
    r.z = io::parse_double(f[5], path);
    r.beta = io::parse_double(f[6], path);
    r.c = io::parse_double(f[7], path);
    r.lfdr = io::parse_double(f[8], path);
    const long sel = io::parse_long(f[9], path);
    if (sel != 0 && sel != 1) throw io_error("selected must be 0/1 in " + path);
    r.selected = sel == 1;
    if (f[10] != "bias" && f[10] != "lesion" && f[10] != "none")
      throw io_error("group must be bias/lesion/none in " + path);
    r.group = f[10];
    table.rows.push_back(std::move(r));
    ++expected;
  }
  return table;
}

// objective trace: iteration,objective
inline void write_trace_csv(const std::string& path, const std::vector<double>& trace) {
  auto out = io::open_output(path);
  out << "iteration,objective\n";
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << i << ',' << io::fmt_double(trace[i]) << '\n';
}

// metrics report: metric,group,value
inline void write_metrics_csv(const std::string& path,
                              const std::vector<std::array<std::string, 3>>& rows) {
  auto out = io::open_output(path);
  out << "metric,group,value\n";
  for (const auto& r : rows) out << r[0] << ',' << r[1] << ',' << r[2] << '\n';
}

// ---------------------------------------------------------------------------
// slice rendering: lesion-selected 255, bias-selected 160, masked 64, unmasked 0

struct SliceImage {
  int height = 0, width = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// axis 0 fixes i (rows j, cols k), axis 1 fixes j (rows i, cols k),
// axis 2 fixes k (rows i, cols j)
inline SliceImage render_slice(const VoxelGrid& grid, const std::vector<FitRow>& rows, int axis,
                               int slice) {
  if (rows.size() != grid.size()) throw std::invalid_argument("fit rows do not match grid");
  if (axis < 0 || axis > 2) throw std::invalid_argument("axis must be 0, 1 or 2");
  const auto& dims = grid.dims();
  if (slice < 0 || slice >= dims[static_cast<std::size_t>(axis)])
    throw std::invalid_argument("slice index out of range");

  SliceImage img;
  img.height = axis == 0 ? dims[1] : dims[0];
  img.width = axis == 2 ? dims[1] : dims[2];
  img.pixels.assign(static_cast<std::size_t>(img.height) * img.width, 0);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const Coord& c = grid.coord(static_cast<int>(v));
    const int along = axis == 0 ? c.i : axis == 1 ? c.j : c.k;
    if (along != slice) continue;
    const int r = axis == 0 ? c.j : c.i;
    const int col = axis == 2 ? c.j : c.k;
    std::uint8_t val = 64;
    if (rows[v].selected) val = rows[v].group == "lesion" ? 255 : 160;
    img.pixels[static_cast<std::size_t>(r) * img.width + col] = val;
  }
  return img;
}

inline void write_pgm(const std::string& path, const SliceImage& img) {
  auto out = io::open_output(path);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_slice_csv(const std::string& path, const SliceImage& img) {
  auto out = io::open_output(path);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (c) out << ',';
      out << static_cast<int>(img.pixels[static_cast<std::size_t>(r) * img.width + c]);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// manifest: `key = value` lines, '#' starts a comment

class Manifest {
 public:
  Manifest() = default;

  static Manifest load(const std::string& path) {
    Manifest m;
    m.dir_ = std::filesystem::path(path).parent_path().string();
    auto in = io::open_input(path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = io::trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw io_error(path + ":" + std::to_string(lineno) + ": expected `key = value`");
      const std::string key = io::trim(line.substr(0, eq));
      const std::string value = io::trim(line.substr(eq + 1));
      if (key.empty()) throw io_error(path + ":" + std::to_string(lineno) + ": empty key");
      m.kv_[key] = value;
    }
    return m;
  }

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw io_error("manifest missing key '" + key + "'");
    return it->second;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key) const { return io::parse_double(get(key), "manifest key " + key); }
  long get_long(const std::string& key) const { return io::parse_long(get(key), "manifest key " + key); }

  std::array<int, 3> get_dims() const {
    const auto f = io::split_csv_line(get("dims"));
    if (f.size() != 3) throw io_error("manifest dims must be three comma-separated integers");
    return {static_cast<int>(io::parse_long(f[0], "dims")),
            static_cast<int>(io::parse_long(f[1], "dims")),
            static_cast<int>(io::parse_long(f[2], "dims"))};
  }

  // paths are resolved relative to the manifest's directory
  std::string resolve(const std::string& key) const {
    const std::string& v = get(key);
    std::filesystem::path p(v);
    if (p.is_absolute() || dir_.empty()) return v;
    return (std::filesystem::path(dir_) / p).string();
  }

  void save(const std::string& path) const {
    auto out = io::open_output(path);
    out << "# fdrhs manifest\n";
    for (const auto& [k, v] : kv_) out << k << " = " << v << '\n';
  }

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
  std::string dir_;
};

}  // namespace fdrhs
