#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace liepose {

/// Append-only little-endian byte buffer for binary model formats. Explicit
/// byte order keeps serialized artifacts loadable on any host.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v);
  void bytes(const void* data, std::size_t n);
  void str(const std::string& s);  // u32 length + raw bytes

  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Little-endian reader over a byte span; throws CorruptStream on underflow.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<std::uint8_t>& buf) : ByteReader(buf.data(), buf.size()) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64();
  void bytes(void* out, std::size_t n);
  std::string str();

  std::size_t remaining() const { return size_ - pos_; }
  bool done() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const;

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

/// Reads a whole file; throws MissingInput if it cannot be opened.
std::vector<std::uint8_t> read_file(const std::string& path);
std::string read_text_file(const std::string& path);

/// Atomic file write: writes to a temp file in the same directory, then
/// renames over the destination so partial files are never observed.
void write_file_atomic(const std::string& path, const void* data, std::size_t size);
void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace liepose
