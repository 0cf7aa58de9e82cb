#include "reacher/image_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace reacher {

namespace {

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back((v >> 24) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}

uint32_t get_be32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& payload) {
  put_be32(out, static_cast<uint32_t>(payload.size()));
  size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  uLong crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
  put_be32(out, static_cast<uint32_t>(crc));
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void write_pgm(const std::string& path, const ImageBytes& img) {
  if (img.channels != 1) throw std::invalid_argument("PGM is single channel");
  std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), img.data.begin(), img.data.end());
  write_file(path, bytes);
}

ImageBytes read_pgm(const std::string& path) {
  std::vector<uint8_t> bytes = read_file(path);
  std::string s(bytes.begin(), bytes.end());
  if (s.substr(0, 2) != "P5") throw std::runtime_error("not a P5 PGM: " + path);
  size_t pos = 2;
  auto next_int = [&]() {
    while (pos < s.size() && (std::isspace(static_cast<unsigned char>(s[pos])) || s[pos] == '#')) {
      if (s[pos] == '#')
        while (pos < s.size() && s[pos] != '\n') ++pos;
      else
        ++pos;
    }
    size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    return std::stoi(s.substr(start, pos - start));
  };
  ImageBytes img;
  img.channels = 1;
  img.width = next_int();
  img.height = next_int();
  int maxval = next_int();
  if (maxval != 255) throw std::runtime_error("unsupported PGM maxval");
  ++pos;  // single whitespace after header
  if (bytes.size() - pos < static_cast<size_t>(img.width) * img.height)
    throw std::runtime_error("truncated PGM: " + path);
  img.data.assign(bytes.begin() + pos, bytes.begin() + pos + static_cast<size_t>(img.width) * img.height);
  return img;
}

void write_png(const std::string& path, const ImageBytes& img) {
  if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("PNG writer: 1 or 3 channels");
  const size_t row = static_cast<size_t>(img.width) * img.channels;
  if (img.data.size() != row * img.height) throw std::invalid_argument("PNG writer: size mismatch");

  std::vector<uint8_t> raw;
  raw.reserve((row + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), img.data.begin() + y * row, img.data.begin() + (y + 1) * row);
  }
  uLongf comp_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> comp(comp_size);
  if (compress2(comp.data(), &comp_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("PNG deflate failed");
  comp.resize(comp_size);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr;
  put_be32(ihdr, static_cast<uint32_t>(img.width));
  put_be32(ihdr, static_cast<uint32_t>(img.height));
  ihdr.push_back(8);                                   // bit depth
  ihdr.push_back(img.channels == 1 ? 0 : 2);           // gray / truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", comp);
  append_chunk(out, "IEND", {});
  write_file(path, out);
}

ImageBytes read_png(const std::string& path) {
  std::vector<uint8_t> bytes = read_file(path);
  static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
    throw std::runtime_error("not a PNG: " + path);

  ImageBytes img;
  std::vector<uint8_t> idat;
  size_t pos = 8;
  int bit_depth = 0, color_type = 0;
  while (pos + 8 <= bytes.size()) {
    uint32_t len = get_be32(&bytes[pos]);
    std::string type(bytes.begin() + pos + 4, bytes.begin() + pos + 8);
    const uint8_t* payload = &bytes[pos + 8];
    if (type == "IHDR") {
      img.width = static_cast<int>(get_be32(payload));
      img.height = static_cast<int>(get_be32(payload + 4));
      bit_depth = payload[8];
      color_type = payload[9];
      if (bit_depth != 8 || (color_type != 0 && color_type != 2) || payload[12] != 0)
        throw std::runtime_error("unsupported PNG variant: " + path);
      img.channels = color_type == 0 ? 1 : 3;
    } else if (type == "IDAT") {
      idat.insert(idat.end(), payload, payload + len);
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (img.width <= 0 || img.height <= 0) throw std::runtime_error("bad PNG header: " + path);

  const size_t row = static_cast<size_t>(img.width) * img.channels;
  std::vector<uint8_t> raw((row + 1) * img.height);
  uLongf raw_size = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_size, idat.data(), static_cast<uLong>(idat.size())) != Z_OK ||
      raw_size != raw.size())
    throw std::runtime_error("PNG inflate failed: " + path);

  img.data.assign(row * img.height, 0);
  const int bpp = img.channels;
  for (int y = 0; y < img.height; ++y) {
    const uint8_t filter = raw[y * (row + 1)];
    const uint8_t* src = &raw[y * (row + 1) + 1];
    uint8_t* dst = &img.data[y * row];
    const uint8_t* up = y > 0 ? &img.data[(y - 1) * row] : nullptr;
    for (size_t x = 0; x < row; ++x) {
      int a = x >= static_cast<size_t>(bpp) ? dst[x - bpp] : 0;
      int b = up ? up[x] : 0;
      int c = (up && x >= static_cast<size_t>(bpp)) ? up[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw std::runtime_error("bad PNG filter");
      }
      dst[x] = static_cast<uint8_t>(v & 0xff);
    }
  }
  return img;
}

ImageBytes raster_to_bytes(const Raster& r) {
  ImageBytes img;
  img.width = r.width;
  img.height = r.height;
  img.channels = r.channels;
  img.data.resize(r.size());
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x)
      for (int c = 0; c < r.channels; ++c)
        img.data[(static_cast<size_t>(y) * r.width + x) * r.channels + c] =
            static_cast<uint8_t>(std::min(255.0, std::max(0.0, r.at(c, y, x) * 255.0 + 0.5)));
  return img;
}

Raster bytes_to_raster(const ImageBytes& img) {
  Raster r(img.channels, img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        r.at(c, y, x) = img.data[(static_cast<size_t>(y) * img.width + x) * img.channels + c] / 255.0;
  return r;
}

}  // namespace reacher
