#include "dstts/tensor_file.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dstts {

namespace {

void put_u32(std::ostream& s, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  s.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32(std::istream& s) {
  unsigned char b[4];
  s.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& s, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(s, bits);
}

float get_f32(std::istream& s) {
  uint32_t bits = get_u32(s);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_dstt(const std::string& path, const std::vector<int>& shape,
                const std::vector<float>& data) {
  size_t numel = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("write_dstt: negative dim");
    numel *= static_cast<size_t>(d);
  }
  if (numel != data.size()) throw std::invalid_argument("write_dstt: shape/data mismatch");
  if (shape.empty() || shape.size() > 255)
    throw std::invalid_argument("write_dstt: bad rank");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write tensor file: " + path);
  f.write("DSTT", 4);
  put_u32(f, 1);
  unsigned char rank = static_cast<unsigned char>(shape.size());
  f.write(reinterpret_cast<char*>(&rank), 1);
  for (int d : shape) put_u32(f, static_cast<uint32_t>(d));
  for (float v : data) put_f32(f, v);
  if (!f) throw std::runtime_error("short write: " + path);
}

void write_dstt(const std::string& path, const std::vector<int>& shape,
                const std::vector<double>& data) {
  std::vector<float> f32(data.begin(), data.end());
  write_dstt(path, shape, f32);
}

TensorFile read_dstt(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open tensor file: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "DSTT", 4) != 0)
    throw std::runtime_error("bad tensor file magic: " + path);
  uint32_t version = get_u32(f);
  if (version != 1)
    throw std::runtime_error("unsupported tensor file version " + std::to_string(version));
  unsigned char rank;
  f.read(reinterpret_cast<char*>(&rank), 1);
  TensorFile t;
  size_t numel = 1;
  for (int i = 0; i < rank; ++i) {
    uint32_t d = get_u32(f);
    t.shape.push_back(static_cast<int>(d));
    numel *= d;
  }
  t.data.resize(numel);
  for (size_t i = 0; i < numel; ++i) t.data[i] = get_f32(f);
  if (!f) throw std::runtime_error("truncated tensor file: " + path);
  return t;
}

}  // namespace dstts
