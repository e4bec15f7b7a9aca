#include "minkunext/train/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "minkunext/binary_io.hpp"

namespace minkunext {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw std::runtime_error("index.csv line " + std::to_string(line_no) + ": invalid number '" + s + "'");
  return v;
}

std::string run_of(const std::string& relative_path) {
  const auto parent = fs::path(relative_path).parent_path();
  return parent.empty() ? std::string("default") : parent.generic_string();
}

}  // namespace

double utm_distance(const Utm& a, const Utm& b) noexcept {
  return std::hypot(a.northing - b.northing, a.easting - b.easting);
}

std::vector<SubmapRecord> Dataset::select(Split split, const std::vector<std::string>& regions) const {
  std::vector<SubmapRecord> out;
  for (const auto& r : records) {
    if (r.split != split) continue;
    if (!regions.empty() && std::find(regions.begin(), regions.end(), r.region) == regions.end()) continue;
    out.push_back(r);
  }
  return out;
}

PointCloud load_submap_bin(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes % 24 != 0) throw std::runtime_error("malformed submap");
  PointCloud cloud;
  cloud.points.resize(bytes / 24);
  for (auto& p : cloud.points)
    for (double& c : p) c = io::read_le<double>(in);
  return cloud;
}

void save_submap_bin(const fs::path& path, const PointCloud& cloud) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : cloud.points)
    for (double c : p) io::write_le<double>(out, c);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path index = dir / "index.csv";
  std::ifstream in(index);
  if (!in) throw std::runtime_error("cannot open " + index.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty index.csv");
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"relative_path", "northing", "easting", "split", "region"};
  if (header != expected)
    throw std::runtime_error("index.csv header must be relative_path,northing,easting,split,region");

  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw std::runtime_error("index.csv line " + std::to_string(line_no) + ": expected 5 columns");
    SubmapRecord r;
    r.id = static_cast<std::int64_t>(ds.records.size());
    r.path = f[0];
    r.utm = {parse_double(f[1], line_no), parse_double(f[2], line_no)};
    r.split = split_from_string(f[3]);
    r.region = f[4];
    r.run = run_of(f[0]);
    r.cloud = load_submap_bin(dir / f[0]);
    ds.records.push_back(std::move(r));
  }
  return ds;
}

void save_dataset(const fs::path& dir, const Dataset& dataset) {
  fs::create_directories(dir);
  std::ofstream index(dir / "index.csv");
  if (!index) throw std::runtime_error("cannot write " + (dir / "index.csv").string());
  index << "relative_path,northing,easting,split,region\n";
  index.precision(17);
  for (const auto& r : dataset.records) {
    if (r.path.empty()) throw std::invalid_argument("record without a relative path");
    save_submap_bin(dir / r.path, r.cloud);
    index << r.path << ',' << r.utm.northing << ',' << r.utm.easting << ',' << to_string(r.split)
          << ',' << r.region << '\n';
  }
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

}  // namespace minkunext
