#include "liepose/depth_image.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>

#include "liepose/errors.hpp"
#include "liepose/io_util.hpp"

namespace liepose {
namespace {

// Consumes whitespace and '#' comment lines between header tokens.
void skip_pgm_separators(const std::string& buf, size_t& pos) {
  while (pos < buf.size()) {
    const char c = buf[pos];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else if (c == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
}

long parse_pgm_int(const std::string& buf, size_t& pos) {
  skip_pgm_separators(buf, pos);
  const size_t start = pos;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) ++pos;
  if (pos == start) throw CorruptStream("malformed PGM header");
  return std::stol(buf.substr(start, pos - start));
}

}  // namespace

void write_pgm16(const DepthImage& image, const std::string& path) {
  if (image.width() <= 0 || image.height() <= 0) {
    throw InvalidArgument("cannot write empty depth image");
  }
  std::string out;
  out += "P5\n";
  out += std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n";
  out += "65535\n";
  out.reserve(out.size() + static_cast<size_t>(image.width()) * static_cast<size_t>(image.height()) * 2);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const double d = image.at(x, y);
      uint16_t q = 65535;
      if (DepthImage::is_foreground(d)) {
        const long long r = std::llround(d);
        q = static_cast<uint16_t>(std::min<long long>(std::max<long long>(r, 0), 65535));
      }
      out.push_back(static_cast<char>((q >> 8) & 0xff));
      out.push_back(static_cast<char>(q & 0xff));
    }
  }
  write_file_atomic(path, out);
}

DepthImage read_pgm16(const std::string& path) {
  const std::string buf = read_text_file(path);
  if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5') {
    throw CorruptStream("not a binary PGM file: " + path);
  }
  size_t pos = 2;
  const long width = parse_pgm_int(buf, pos);
  const long height = parse_pgm_int(buf, pos);
  const long maxval = parse_pgm_int(buf, pos);
  if (width <= 0 || height <= 0 || maxval != 65535) {
    throw CorruptStream("unsupported PGM geometry in " + path);
  }
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    throw CorruptStream("malformed PGM header in " + path);
  }
  ++pos;  // single whitespace byte separates header from raster
  const size_t need = static_cast<size_t>(width) * static_cast<size_t>(height) * 2;
  if (buf.size() - pos < need) throw CorruptStream("truncated PGM raster in " + path);

  DepthImage image(static_cast<int>(width), static_cast<int>(height));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto hi = static_cast<uint8_t>(buf[pos]);
      const auto lo = static_cast<uint8_t>(buf[pos + 1]);
      pos += 2;
      const uint16_t q = static_cast<uint16_t>((hi << 8) | lo);
      image.at(x, y) = (q == 65535) ? kBackgroundDepth : static_cast<double>(q);
    }
  }
  return image;
}

}  // namespace liepose
