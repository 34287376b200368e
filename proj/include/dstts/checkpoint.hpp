#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dstts/model.hpp"

namespace dstts {

// "DSCK" checkpoint: magic, u32 version, u32 JSON header length, header JSON
// (config + vocabulary + tensor name/offset/shape index), then concatenated
// little-endian f32 payloads. Offsets are float counts into the payload.
void save_checkpoint(const std::string& path, const DsTtsModel& model,
                     const std::vector<std::string>& vocab_symbols);

struct LoadedCheckpoint {
  std::unique_ptr<DsTtsModel> model;
  std::vector<std::string> vocab_symbols;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace dstts
