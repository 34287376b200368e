#pragma once

#include <string>

namespace dstts {

// Everything a run needs: model dimensions, optimizer settings, routing
// threshold, ablation switches, and data paths. Serialized as JSON with a
// fixed key order so serialize -> parse -> serialize is byte-identical.
struct RunConfig {
  // model
  int model_dim = 256;
  int style_width = 128;  // per style encoder; style vector is 2x this
  int enc_blocks = 4;
  int dec_blocks = 4;
  int heads = 2;
  int conv_filter = 1024;
  int conv_kernel = 9;
  int predictor_kernel = 3;
  double dropout = 0.1;
  double predictor_dropout = 0.5;
  // routing
  int dva_threshold = 85;
  bool no_mfcc = false;
  bool no_dva_sp = false;
  bool no_dva_lp = false;
  // optimization
  double lr = 1e-4;
  int batch = 4;
  int steps = 2000;
  unsigned long long seed = 1;
  int checkpoint_every = 500;
  // paths
  std::string manifest;
  std::string features_dir;
  std::string stats;
  std::string vocab;
  std::string out_dir;

  void validate() const;  // throws std::invalid_argument on bad values
};

std::string config_to_json(const RunConfig& c);
RunConfig config_from_json(const std::string& text);
RunConfig load_config_file(const std::string& path);
void save_config_file(const std::string& path, const RunConfig& c);

}  // namespace dstts
