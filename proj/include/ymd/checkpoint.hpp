#pragma once

// Binary checkpoints of SimulationState.
//
// Little-endian. Header: "YMD1", version u32, N u32, n_colors u32,
// convention u8 (0 paper, 1 physics), time f64. Then, x-fastest and one
// component after another: adf_plus, adf_minus (complex, re/im f64 pairs),
// acf, dtacf (f64), psi_plus, psi_minus (complex). L is not stored.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "ymd/state.hpp"

namespace ymd {

inline constexpr std::uint32_t checkpoint_version = 1;
inline constexpr char checkpoint_magic[4] = {'Y', 'M', 'D', '1'};
inline constexpr std::size_t checkpoint_header_bytes = 4 + 4 + 4 + 4 + 1 + 8;

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(char(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<char> b) : buf_(std::move(b)) {}
  std::size_t remaining() const { return buf_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(ErrorCode::corrupt_checkpoint, "file is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return std::uint8_t(buf_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(buf_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(buf_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void raw(char* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

template <std::size_t C>
void put(ByteWriter& w, const LatticeField<double, C>& f) {
  for (double v : f.data()) w.f64(v);
}
template <std::size_t C>
void put(ByteWriter& w, const LatticeField<cplx, C>& f) {
  for (const cplx& v : f.data()) {
    w.f64(v.real());
    w.f64(v.imag());
  }
}
template <std::size_t C>
void get(ByteReader& r, LatticeField<double, C>& f) {
  for (double& v : f.data()) v = r.f64();
}
template <std::size_t C>
void get(ByteReader& r, LatticeField<cplx, C>& f) {
  for (cplx& v : f.data()) {
    const double re = r.f64();
    const double im = r.f64();
    v = cplx(re, im);
  }
}

inline std::size_t payload_bytes(std::size_t sites) { return sites * 8 * (2 * 2 * 9 + 2 * 9 + 2 * 2 * 8); }

}  // namespace detail

inline std::vector<char> serialize(const SimulationState& s) {
  detail::ByteWriter w;
  w.raw(checkpoint_magic, 4);
  w.u32(checkpoint_version);
  w.u32(std::uint32_t(s.grid().n()));
  w.u32(std::uint32_t(n_colors));
  w.u8(std::uint8_t(s.convention));
  w.f64(s.t);
  detail::put(w, s.adf_plus);
  detail::put(w, s.adf_minus);
  detail::put(w, s.acf);
  detail::put(w, s.dtacf);
  detail::put(w, s.psi_plus);
  detail::put(w, s.psi_minus);
  return w.bytes();
}

/// `length` supplies the box size, which the format does not carry.
inline SimulationState deserialize(std::vector<char> bytes, double length = 2.0 * std::numbers::pi) {
  detail::ByteReader r(std::move(bytes));
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, checkpoint_magic, 4) != 0) throw Error(ErrorCode::corrupt_checkpoint, "bad magic");
  const std::uint32_t version = r.u32();
  if (version != checkpoint_version)
    throw Error(ErrorCode::unsupported_version, "checkpoint version " + std::to_string(version));
  const std::uint32_t n = r.u32();
  const std::uint32_t colors = r.u32();
  if (colors != n_colors) throw Error(ErrorCode::dimension_mismatch, "n_colors " + std::to_string(colors));
  if (n < 8 || n > 4096 || (n & (n - 1)) != 0) throw Error(ErrorCode::dimension_mismatch, "N " + std::to_string(n));
  const std::uint8_t conv = r.u8();
  if (conv > 1) throw Error(ErrorCode::corrupt_checkpoint, "convention byte " + std::to_string(conv));
  const double t = r.f64();
  const Grid g(int(n), length);
  if (r.remaining() != detail::payload_bytes(g.size()))
    throw Error(ErrorCode::corrupt_checkpoint, r.remaining() < detail::payload_bytes(g.size()) ? "file is truncated"
                                                                                              : "trailing bytes");
  SimulationState s(g);
  s.t = t;
  s.convention = Convention(conv);
  detail::get(r, s.adf_plus);
  detail::get(r, s.adf_minus);
  detail::get(r, s.acf);
  detail::get(r, s.dtacf);
  detail::get(r, s.psi_plus);
  detail::get(r, s.psi_minus);
  return s;
}

inline void checkpoint_write(const SimulationState& s, const std::string& path) {
  const auto bytes = serialize(s);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_failure, "cannot open " + path + " for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorCode::io_failure, "write failed for " + path);
}

inline SimulationState checkpoint_read(const std::string& path, double length = 2.0 * std::numbers::pi) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(std::move(bytes), length);
}

/// Expected grid check for callers that know N in advance.
inline SimulationState checkpoint_read(const std::string& path, const Grid& expect) {
  auto s = checkpoint_read(path, expect.length());
  if (s.grid().n() != expect.n())
    throw Error(ErrorCode::dimension_mismatch,
                "checkpoint N=" + std::to_string(s.grid().n()) + ", expected " + std::to_string(expect.n()));
  return s;
}

}  // namespace ymd
