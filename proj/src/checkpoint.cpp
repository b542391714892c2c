#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "snn/train.hpp"

namespace snn {

namespace {

constexpr char kMagic[4] = {'S', 'N', 'N', 'W'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  Reader(std::vector<char> bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  bool done() const { return pos_ == bytes_.size(); }

  void read(void* dst, std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw std::runtime_error(path_ + ": truncated while reading " + what);
    }
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::uint32_t u32(const char* what) {
    std::uint32_t v;
    read(&v, sizeof v, what);
    return v;
  }

 private:
  std::vector<char> bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_archive(const std::string& path, const TensorArchive& archive) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.write(kMagic, 4);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(archive.text.size()));
  os.write(archive.text.data(), std::streamsize(archive.text.size()));
  for (const auto& t : archive.tensors) {
    put_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) put_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data().data()),
             std::streamsize(t.numel() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("write failed for " + path);
}

TensorArchive read_archive(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path);
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": bad magic (not an SNNW file)");
  }
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version) +
                             " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  TensorArchive out;
  out.text.resize(r.u32("text length"));
  r.read(out.text.data(), out.text.size(), "text");
  while (!r.done()) {
    const auto rank = r.u32("tensor rank");
    if (rank == 0 || rank > 8) {
      throw std::runtime_error(path + ": implausible tensor rank " + std::to_string(rank));
    }
    Shape shape(rank);
    for (auto& d : shape) d = r.u32("tensor dims");
    std::vector<float> values(numel(shape));
    r.read(values.data(), values.size() * sizeof(float), "tensor data");
    out.tensors.emplace_back(std::move(shape), std::move(values));
  }
  return out;
}

void save_checkpoint(const Network& net, const std::string& path) {
  TensorArchive a;
  a.text = to_text(net.spec());
  for (const auto& p : net.parameters()) a.tensors.push_back(p);
  write_archive(path, a);
}

Network load_checkpoint(const std::string& path) {
  auto a = read_archive(path);
  Network net = Network::build(parse_arch_text(a.text));
  auto params = net.parameters();
  if (params.size() != a.tensors.size()) {
    throw std::runtime_error(path + ": holds " + std::to_string(a.tensors.size()) +
                             " tensors, architecture needs " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != a.tensors[i].shape()) {
      throw std::runtime_error(path + ": tensor " + std::to_string(i) + " has shape " +
                               to_string(a.tensors[i].shape()) + ", expected " +
                               to_string(params[i].shape()));
    }
    std::copy(a.tensors[i].data().begin(), a.tensors[i].data().end(),
              params[i].data().begin());
  }
  return net;
}

}  // namespace snn
