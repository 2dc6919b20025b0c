#include "slotcast/binary_io.hpp"

#include <algorithm>
#include <bit>

#include <zlib.h>

#include "slotcast/error.hpp"

namespace slotcast::io {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u64(s.size());
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::f64_array(std::span<const double> v) {
  u64(v.size());
  for (const double x : v) f64(x);
}

void ByteWriter::i64_array(std::span<const std::int64_t> v) {
  u64(v.size());
  for (const auto x : v) i64(x);
}

void ByteWriter::str_array(std::span<const std::string> v) {
  u64(v.size());
  for (const auto& s : v) str(s);
}

void ByteReader::need(std::size_t n) const {
  if (n > data_.size() - pos_) throw Error(ErrorKind::CorruptBundle, "unexpected end of payload");
}

std::uint8_t ByteReader::u8() {
  need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::size_t ByteReader::count(std::size_t min_element_size) {
  const std::uint64_t n = u64();
  if (min_element_size > 0 && n > remaining() / min_element_size) {
    throw Error(ErrorKind::CorruptBundle, "array length exceeds payload size");
  }
  return static_cast<std::size_t>(n);
}

std::string ByteReader::str() {
  const std::size_t n = count(1);
  std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<double> ByteReader::f64_array() {
  std::vector<double> v(count(8));
  for (auto& x : v) x = f64();
  return v;
}

std::vector<std::int64_t> ByteReader::i64_array() {
  std::vector<std::int64_t> v(count(8));
  for (auto& x : v) x = i64();
  return v;
}

std::vector<std::string> ByteReader::str_array() {
  std::vector<std::string> v(count(8));
  for (auto& s : v) s = str();
  return v;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large payloads.
  std::size_t off = 0;
  while (off < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
    crc = ::crc32(crc, data.data() + off, chunk);
    off += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace slotcast::io
