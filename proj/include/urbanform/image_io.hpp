#ifndef URBANFORM_IMAGE_IO_HPP
#define URBANFORM_IMAGE_IO_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "urbanform/raster.hpp"

namespace urbanform {

// 8-bit gray levels: 0 = fully built (black), 255 = open space (white).
inline std::vector<std::uint8_t> gray_levels(const TileRaster& raster) {
  std::vector<std::uint8_t> out(raster.coverage.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - raster.coverage[i])));
  }
  return out;
}

inline std::string encode_pgm(const TileRaster& raster) {
  std::string out = "P5\n" + std::to_string(raster.size) + " " + std::to_string(raster.size) + "\n255\n";
  const auto gray = gray_levels(raster);
  out.append(gray.begin(), gray.end());
  return out;
}

namespace detail {

inline void put_be32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

inline void put_chunk(std::string& png, const char* type, const std::string& data) {
  put_be32(png, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  png += body;
  put_be32(png, static_cast<std::uint32_t>(
                    crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

}  // namespace detail

// Grayscale 8-bit PNG, filter type 0 on every scanline.
inline std::string encode_png(const TileRaster& raster) {
  const auto gray = gray_levels(raster);
  const auto w = static_cast<std::size_t>(raster.size);
  std::string scanlines;
  scanlines.reserve((w + 1) * w);
  for (std::size_t r = 0; r < w; ++r) {
    scanlines.push_back('\0');
    scanlines.append(reinterpret_cast<const char*>(gray.data() + r * w), w);
  }
  uLongf packed_len = compressBound(static_cast<uLong>(scanlines.size()));
  std::string packed(packed_len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_len,
                reinterpret_cast<const Bytef*>(scanlines.data()), static_cast<uLong>(scanlines.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw std::runtime_error("png: zlib compression failed");
  }
  packed.resize(packed_len);

  std::string png = "\x89PNG\r\n\x1a\n";
  std::string ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(w));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(w));
  ihdr += std::string("\x08\x00\x00\x00\x00", 5);  // 8-bit gray, no interlace
  detail::put_chunk(png, "IHDR", ihdr);
  detail::put_chunk(png, "IDAT", packed);
  detail::put_chunk(png, "IEND", "");
  return png;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace urbanform

#endif  // URBANFORM_IMAGE_IO_HPP
