#include "seqlrp/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "seqlrp/error.hpp"

namespace seqlrp::nn {

namespace {

constexpr char kMagic[8] = {'S', 'E', 'Q', 'L', 'R', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw ParseError("checkpoint: truncated file");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const nlohmann::json& header, const ParamStore& params) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  const std::string h = header.dump();
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (ParamId p = 0; p < params.size(); ++p) {
    const std::string& name = params.name(p);
    const Matrix& m = params.value(p);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.values()) put_f64(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) throw ParseError("checkpoint: bad magic");
  if (const auto v = r.u32(); v != kVersion) throw ParseError("checkpoint: unsupported version " + std::to_string(v));
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(r.raw(r.u32()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad header: ") + e.what());
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.raw(r.u32());
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    Matrix m(rows, cols);
    for (double& v : m.values()) v = r.f64();
    ck.params.add(std::move(name), std::move(m));
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header, const ParamStore& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const std::string bytes = encode_checkpoint(header, params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace seqlrp::nn
