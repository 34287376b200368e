#include "dstts/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "dstts/config.hpp"

namespace dstts {

namespace {

using ordered_json = nlohmann::ordered_json;

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

}  // namespace

void save_checkpoint(const std::string& path, const DsTtsModel& model,
                     const std::vector<std::string>& vocab_symbols) {
  ordered_json header;
  header["config"] = ordered_json::parse(config_to_json(model.config()));
  header["vocab_symbols"] = vocab_symbols;
  ordered_json tensors = ordered_json::array();
  uint64_t offset = 0;
  for (const auto& [name, p] : model.params().all()) {
    ordered_json t;
    t["name"] = name;
    t["shape"] = p.value.shape;
    t["offset"] = offset;
    tensors.push_back(t);
    offset += static_cast<uint64_t>(p.value.size());
  }
  header["tensors"] = tensors;
  const std::string header_text = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write("DSCK", 4);
  put_u32(f, 1);
  put_u32(f, static_cast<uint32_t>(header_text.size()));
  f.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, p] : model.params().all()) {
    for (double x : p.value.data) {
      float v = static_cast<float>(x);
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(f, bits);
    }
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "DSCK", 4) != 0)
    throw std::runtime_error("bad checkpoint magic: " + path);
  const uint32_t version = get_u32(f);
  if (version != 1)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const uint32_t header_len = get_u32(f);
  std::string header_text(header_len, '\0');
  f.read(header_text.data(), header_len);
  if (!f) throw std::runtime_error("truncated checkpoint header: " + path);

  ordered_json header;
  try {
    header = ordered_json::parse(header_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("invalid checkpoint header: ") + e.what());
  }
  RunConfig cfg = config_from_json(header.at("config").dump());
  LoadedCheckpoint out;
  out.vocab_symbols = header.at("vocab_symbols").get<std::vector<std::string>>();
  out.model = std::make_unique<DsTtsModel>(cfg, static_cast<int>(out.vocab_symbols.size()));

  for (const auto& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    Parameter* p = out.model->params().find(name);
    if (!p) throw std::runtime_error("checkpoint tensor not in model: " + name);
    if (p->value.shape != shape)
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    for (double& x : p->value.data) {
      uint32_t bits = get_u32(f);
      float v;
      std::memcpy(&v, &bits, 4);
      x = static_cast<double>(v);
    }
  }
  if (!f) throw std::runtime_error("truncated checkpoint payload: " + path);
  return out;
}

}  // namespace dstts
