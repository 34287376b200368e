#pragma once

#include <string>
#include <vector>

namespace dstts {

// "DSTT" binary tensor: magic, u32 version=1, u8 rank, rank x u32 dims (LE),
// then row-major f32 little-endian payload.
struct TensorFile {
  std::vector<int> shape;
  std::vector<float> data;
};

void write_dstt(const std::string& path, const std::vector<int>& shape,
                const std::vector<float>& data);
void write_dstt(const std::string& path, const std::vector<int>& shape,
                const std::vector<double>& data);
TensorFile read_dstt(const std::string& path);

}  // namespace dstts
