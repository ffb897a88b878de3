#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "commscape/errors.hpp"

namespace commscape {

// Little-endian primitives for the versioned artifact formats. Explicit
// byte order keeps artifacts portable across hosts.
class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

  void u32(std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, 4);
  }

  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

  void u64(std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out_.write(b, 8);
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void str(std::string_view s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  bool ok() const { return static_cast<bool>(out_); }

 private:
  std::ostream& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    int c = in_.get();
    if (c == std::char_traits<char>::eof()) truncated();
    return static_cast<std::uint8_t>(c);
  }

  std::uint32_t u32() {
    char b[4];
    read(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i]))
           << (8 * i);
    }
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

  std::uint64_t u64() {
    char b[8];
    read(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i]))
           << (8 * i);
    }
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str() {
    std::uint64_t n = u64();
    if (n > (1ull << 32)) truncated();  // corrupt length field
    std::string s(n, '\0');
    if (n > 0) read(s.data(), static_cast<std::streamsize>(n));
    return s;
  }

 private:
  void read(char* dst, std::streamsize n) {
    in_.read(dst, n);
    if (in_.gcount() != n) truncated();
  }

  [[noreturn]] void truncated() {
    throw IoError("artifact file truncated or corrupt");
  }

  std::istream& in_;
};

}  // namespace commscape
