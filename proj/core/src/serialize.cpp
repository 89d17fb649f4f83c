#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "perddqn/network.hpp"

namespace perddqn::nn {
namespace {

constexpr std::string_view kMagic = "PERDDQN1";
constexpr std::uint32_t kVersion = 1;
// Guards against absurd dims in a corrupt header before any allocation.
constexpr std::uint64_t kMaxParams = std::uint64_t{1} << 32;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw LengthError(std::string("parameter stream truncated while reading ") + what);
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }

  double f64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return std::bit_cast<double>(v);
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string save_params(const Network& net) {
  std::string out(kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    put_u32(out, static_cast<std::uint32_t>(l.fan_out()));
    put_u32(out, static_cast<std::uint32_t>(l.fan_in()));
  }
  for (const auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) put_f64(out, l.weights(r, c));
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) put_f64(out, l.biases(r));
  }
  return out;
}

void save_params(const Network& net, std::ostream& out) {
  const std::string bytes = save_params(net);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Network load_params(std::string_view bytes) {
  Reader in(bytes);
  if (in.remaining() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not a parameter file: bad magic");
  }
  in.take(kMagic.size(), "magic");
  const auto version = in.u32("version");
  if (version != kVersion) throw FormatError("unsupported parameter format version " + std::to_string(version));
  const auto layer_count = in.u32("layer count");
  if (layer_count == 0) throw FormatError("parameter file declares zero layers");

  std::vector<std::size_t> sizes;
  std::uint64_t total = 0;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const auto out = in.u32("layer dims");
    const auto inp = in.u32("layer dims");
    if (out == 0 || inp == 0) throw FormatError("zero layer dimension");
    if (l == 0) {
      sizes.push_back(inp);
    } else if (sizes.back() != inp) {
      throw FormatError("layer " + std::to_string(l) + " input does not match previous output");
    }
    sizes.push_back(out);
    total += static_cast<std::uint64_t>(out) * inp + out;
    if (total > kMaxParams) throw FormatError("parameter file declares too many parameters");
  }
  if (in.remaining() != total * 8) {
    throw LengthError("parameter payload has " + std::to_string(in.remaining()) + " bytes, expected " +
                      std::to_string(total * 8));
  }

  Network net(sizes);
  for (auto& l : net.layers()) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = in.f64();
    }
    for (Eigen::Index r = 0; r < l.biases.size(); ++r) l.biases(r) = in.f64();
  }
  return net;
}

void save_params_file(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path + " for writing");
  save_params(net, out);
  if (!out) throw Error("failed writing " + path);
}

Network load_params_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open parameter file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_params(buf.str());
}

}  // namespace perddqn::nn
