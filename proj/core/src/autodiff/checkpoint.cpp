#include "minkunext/autodiff/checkpoint.hpp"

#include <fstream>
#include <numeric>
#include <stdexcept>

#include "minkunext/binary_io.hpp"

namespace minkunext::ad {

namespace {

void write_tensor(std::ostream& os, const NamedTensor& t) {
  const std::uint64_t count = std::accumulate(t.shape.begin(), t.shape.end(), std::uint64_t{1},
                                              std::multiplies<>());
  if (count != t.data.size()) throw std::invalid_argument("tensor '" + t.name + "' shape does not match data");
  io::write_string(os, t.name);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) io::write_le<std::uint64_t>(os, d);
  for (float v : t.data) io::write_le<float>(os, v);
}

NamedTensor read_tensor(std::istream& is) {
  NamedTensor t;
  t.name = io::read_string(is, 4096);
  const auto ndim = io::read_le<std::uint32_t>(is);
  if (ndim > 8) throw std::runtime_error("tensor rank out of range");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    t.shape.push_back(io::read_le<std::uint64_t>(is));
    count *= t.shape.back();
  }
  if (count > (std::uint64_t{1} << 34)) throw std::runtime_error("tensor too large");
  t.data.resize(count);
  for (auto& v : t.data) v = io::read_le<float>(is);
  return t;
}

}  // namespace

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  io::write_le<std::uint32_t>(os, kCheckpointVersion);
  io::write_string(os, ckpt.metadata);
  io::write_le<std::uint64_t>(os, ckpt.tensors.size());
  for (const auto& t : ckpt.tensors) write_tensor(os, t);
  io::write_le<std::uint8_t>(os, ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    if (o.first_moments.size() != o.second_moments.size())
      throw std::invalid_argument("optimizer moment lists differ in length");
    io::write_le<std::uint64_t>(os, o.step);
    for (double v : {o.lr, o.beta1, o.beta2, o.eps, o.weight_decay}) io::write_le<double>(os, v);
    io::write_le<std::uint64_t>(os, o.first_moments.size());
    for (std::size_t i = 0; i < o.first_moments.size(); ++i) {
      write_tensor(os, o.first_moments[i]);
      write_tensor(os, o.second_moments[i]);
    }
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  if (!is.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
    throw std::runtime_error("not a checkpoint file: " + path.string());
  const auto version = io::read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.metadata = io::read_string(is);
  const auto count = io::read_le<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < count; ++i) ckpt.tensors.push_back(read_tensor(is));
  if (io::read_le<std::uint8_t>(is) != 0) {
    OptimizerSnapshot o;
    o.step = io::read_le<std::uint64_t>(is);
    o.lr = io::read_le<double>(is);
    o.beta1 = io::read_le<double>(is);
    o.beta2 = io::read_le<double>(is);
    o.eps = io::read_le<double>(is);
    o.weight_decay = io::read_le<double>(is);
    const auto n = io::read_le<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < n; ++i) {
      o.first_moments.push_back(read_tensor(is));
      o.second_moments.push_back(read_tensor(is));
    }
    ckpt.optimizer = std::move(o);
  }
  return ckpt;
}

}  // namespace minkunext::ad
