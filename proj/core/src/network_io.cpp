#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "icrst/error.hpp"
#include "icrst/nn.hpp"

namespace icrst {
namespace {

constexpr char kMagic[4] = {'A', 'E', 'N', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t take(std::size_t width) {
    if (pos_ + width > bytes_.size()) {
      throw FormatError("AEN1: truncated at byte offset " + std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += width;
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)); }
  double f64() { return std::bit_cast<double>(take(8)); }
  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_network(const Network& net) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& layer : net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(layer.out()));
    put_u32(out, static_cast<std::uint32_t>(layer.in()));
    out.push_back(static_cast<std::uint8_t>(layer.activation));
    for (double w : layer.weights.values()) put_f64(out, w);
    for (double b : layer.bias) put_f64(out, b);
  }
  return out;
}

Network deserialize_network(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("AEN1: bad magic at byte offset 0");
  }
  Reader in(bytes.subspan(4));
  const std::uint32_t count = in.u32();
  if (count < 2) throw FormatError("AEN1: need at least two layers, found " + std::to_string(count));
  std::vector<DenseLayer> layers;
  layers.reserve(count);
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    const std::size_t tag_offset = in.offset() + 4;
    const std::uint8_t tag = in.u8();
    if (tag > static_cast<std::uint8_t>(Activation::Sigmoid)) {
      throw FormatError("AEN1: unknown activation tag " + std::to_string(tag) + " at byte offset " +
                        std::to_string(tag_offset));
    }
    DenseLayer layer{Matrix(rows, cols), Vector(rows), static_cast<Activation>(tag)};
    for (auto& w : layer.weights.values()) w = in.f64();
    for (auto& b : layer.bias) b = in.f64();
    layers.push_back(std::move(layer));
  }
  if (!in.done()) throw FormatError("AEN1: trailing bytes after last layer");

  // First layer (excluding the output layer) reaching the narrowest width.
  std::size_t split = 0;
  for (std::size_t i = 1; i + 1 < layers.size(); ++i)
    if (layers[i].out() < layers[split].out()) split = i;
  std::vector<DenseLayer> enc(std::make_move_iterator(layers.begin()),
                              std::make_move_iterator(layers.begin() + static_cast<std::ptrdiff_t>(split + 1)));
  std::vector<DenseLayer> dec(std::make_move_iterator(layers.begin() + static_cast<std::ptrdiff_t>(split + 1)),
                              std::make_move_iterator(layers.end()));
  return Network(std::move(enc), std::move(dec));
}

void save_network(const Network& net, const std::filesystem::path& path) {
  const auto bytes = serialize_network(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_network(bytes);
}

std::uint64_t parameter_checksum(const Network& net) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : serialize_network(net)) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace icrst
