#pragma once

// Byte-level utilities shared across the library: hex coding, the canonical
// length-prefixed serialization used for everything that gets signed or
// hash-chained, and token escaping for the line-based trace format.
//
// Canonical serialization rules (bit-exact, stable across versions):
//   - integers are encoded little-endian with a fixed width
//   - every variable-length field is prefixed by its u32-LE byte length
//   - fields are concatenated in the order listed by the owning type

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hcsim {

using Bytes = std::vector<std::uint8_t>;

inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

inline std::string to_string_view_copy(std::span<const std::uint8_t> b) {
  return std::string(b.begin(), b.end());
}

// ---------------------------------------------------------------------------
// Hex
// ---------------------------------------------------------------------------

inline std::string hex_encode(std::span<const std::uint8_t> data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0x0f]);
  }
  return out;
}

inline std::optional<Bytes> hex_decode(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical writer / reader
// ---------------------------------------------------------------------------

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  // IEEE-754 bit pattern, little-endian. Exact round trip.
  void f64(double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }

  void bytes(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    buf_.insert(buf_.end(), b.begin(), b.end());
  }

  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }

  template <std::size_t N>
  void fixed(const std::array<std::uint8_t, N>& a) {
    buf_.insert(buf_.end(), a.begin(), a.end());
  }

  const Bytes& data() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

// Reader over a canonical byte buffer. All accessors return nullopt on
// truncation instead of throwing; callers surface a typed error.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::optional<std::uint8_t> u8() {
    if (pos_ + 1 > data_.size()) return std::nullopt;
    return data_[pos_++];
  }

  std::optional<std::uint32_t> u32() {
    if (pos_ + 4 > data_.size()) return std::nullopt;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::optional<std::uint64_t> u64() {
    if (pos_ + 8 > data_.size()) return std::nullopt;
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::optional<std::int64_t> i64() {
    auto v = u64();
    if (!v) return std::nullopt;
    return static_cast<std::int64_t>(*v);
  }

  std::optional<double> f64() {
    auto bits = u64();
    if (!bits) return std::nullopt;
    double v = 0;
    std::memcpy(&v, &*bits, sizeof v);
    return v;
  }

  std::optional<Bytes> bytes() {
    auto n = u32();
    if (!n || pos_ + *n > data_.size()) return std::nullopt;
    Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
              data_.begin() + static_cast<std::ptrdiff_t>(pos_ + *n));
    pos_ += *n;
    return out;
  }

  std::optional<std::string> str() {
    auto b = bytes();
    if (!b) return std::nullopt;
    return std::string(b->begin(), b->end());
  }

  template <std::size_t N>
  std::optional<std::array<std::uint8_t, N>> fixed() {
    if (pos_ + N > data_.size()) return std::nullopt;
    std::array<std::uint8_t, N> a{};
    std::memcpy(a.data(), data_.data() + pos_, N);
    pos_ += N;
    return a;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_{0};
};

// ---------------------------------------------------------------------------
// Text helpers for the trace / scenario formats
// ---------------------------------------------------------------------------

// Shortest round-trip decimal for a double (std::to_chars general form).
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), end);
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> parse_i64(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Percent-escapes the characters that have structural meaning in the
// line-based formats (space, '=', '%', newline). Reversible.
inline std::string escape_token(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  static constexpr char digits[] = "0123456789abcdef";
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (c == ' ' || c == '=' || c == '%' || c == '\n' || c == '\r' || u < 0x20) {
      out.push_back('%');
      out.push_back(digits[u >> 4]);
      out.push_back(digits[u & 0x0f]);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

inline std::optional<std::string> unescape_token(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 2 >= s.size()) return std::nullopt;
    auto decoded = hex_decode(s.substr(i + 1, 2));
    if (!decoded) return std::nullopt;
    out.push_back(static_cast<char>((*decoded)[0]));
    i += 2;
  }
  return out;
}

}  // namespace hcsim
