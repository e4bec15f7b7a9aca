#include "minkunext/eval/descriptor_db.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "minkunext/binary_io.hpp"

namespace minkunext {

void DescriptorDB::validate() const {
  const std::size_t m = ids.size();
  if (descriptors.rows() != m || utm.size() != m || regions.size() != m || runs.size() != m)
    throw std::invalid_argument("descriptor database fields disagree in length");
}

DescriptorDB DescriptorDB::subset(std::span<const std::size_t> rows) const {
  DescriptorDB out;
  out.descriptors = Matrix<float>(rows.size(), dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= size()) throw std::out_of_range("descriptor row out of range");
    std::copy(descriptors.row(r).begin(), descriptors.row(r).end(), out.descriptors.row(i).begin());
    out.utm.push_back(utm[r]);
    out.ids.push_back(ids[r]);
    out.regions.push_back(regions[r]);
    out.runs.push_back(runs[r]);
  }
  return out;
}

DescriptorDB embed_dataset(MinkUNeXt<float>& model, std::span<const SubmapRecord> records, std::size_t chunk) {
  if (records.empty()) throw std::invalid_argument("empty record list");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].id < records[b].id; });

  std::vector<PointCloud> clouds;
  clouds.reserve(records.size());
  DescriptorDB db;
  for (std::size_t i : order) {
    const auto& r = records[i];
    clouds.push_back(r.cloud);
    db.utm.push_back(r.utm);
    db.ids.push_back(r.id);
    db.regions.push_back(r.region);
    db.runs.push_back(r.run);
  }
  db.descriptors = model.embed(clouds, chunk);
  return db;
}

void save_descriptor_db(const std::filesystem::path& path, const DescriptorDB& db) {
  db.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kDescriptorMagic, sizeof kDescriptorMagic);
  io::write_le<std::uint32_t>(out, kDescriptorVersion);
  io::write_le<std::uint64_t>(out, db.size());
  io::write_le<std::uint64_t>(out, db.dim());
  for (float v : db.descriptors.flat()) io::write_le<float>(out, v);
  for (const auto& u : db.utm) {
    io::write_le<double>(out, u.northing);
    io::write_le<double>(out, u.easting);
  }
  for (std::size_t i = 0; i < db.size(); ++i) {
    io::write_le<std::int64_t>(out, db.ids[i]);
    io::write_string(out, db.regions[i]);
    io::write_string(out, db.runs[i]);
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

DescriptorDB load_descriptor_db(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kDescriptorMagic, sizeof magic) != 0)
    throw std::runtime_error("not a descriptor database");
  if (io::read_le<std::uint32_t>(in) != kDescriptorVersion)
    throw std::runtime_error("unsupported descriptor database version");
  const auto m = io::read_le<std::uint64_t>(in);
  const auto d = io::read_le<std::uint64_t>(in);
  if (m > (1ull << 32) || d > (1ull << 20)) throw std::runtime_error("descriptor database header out of range");
  DescriptorDB db;
  db.descriptors = Matrix<float>(m, d);
  for (float& v : db.descriptors.flat()) v = io::read_le<float>(in);
  db.utm.resize(m);
  for (auto& u : db.utm) {
    u.northing = io::read_le<double>(in);
    u.easting = io::read_le<double>(in);
  }
  for (std::uint64_t i = 0; i < m; ++i) {
    db.ids.push_back(io::read_le<std::int64_t>(in));
    db.regions.push_back(io::read_string(in));
    db.runs.push_back(io::read_string(in));
  }
  return db;
}

}  // namespace minkunext
