#include "dstts/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dstts {

using ordered_json = nlohmann::ordered_json;

void RunConfig::validate() const {
  auto bad = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (model_dim < 2) bad("model_dim must be >= 2");
  if (heads < 1 || model_dim % heads != 0) bad("heads must divide model_dim");
  if (style_width < 2 || style_width % 2 != 0) bad("style_width must be even and >= 2");
  if (style_width % heads != 0) bad("heads must divide style_width");
  if (enc_blocks < 0 || dec_blocks < 0) bad("block counts must be non-negative");
  if (conv_kernel % 2 == 0 || predictor_kernel % 2 == 0) bad("conv kernels must be odd");
  if (conv_filter < 1) bad("conv_filter must be positive");
  if (dropout < 0.0 || dropout >= 1.0) bad("dropout must be in [0,1)");
  if (predictor_dropout < 0.0 || predictor_dropout >= 1.0)
    bad("predictor_dropout must be in [0,1)");
  if (dva_threshold < 1) bad("dva_threshold must be >= 1");
  if (no_dva_sp && no_dva_lp) bad("cannot remove both predictor branches");
  if (lr <= 0.0) bad("lr must be positive");
  if (batch < 1) bad("batch must be >= 1");
  if (steps < 0) bad("steps must be non-negative");
  if (checkpoint_every < 1) bad("checkpoint_every must be >= 1");
}

std::string config_to_json(const RunConfig& c) {
  ordered_json j;
  j["model_dim"] = c.model_dim;
  j["style_width"] = c.style_width;
  j["enc_blocks"] = c.enc_blocks;
  j["dec_blocks"] = c.dec_blocks;
  j["heads"] = c.heads;
  j["conv_filter"] = c.conv_filter;
  j["conv_kernel"] = c.conv_kernel;
  j["predictor_kernel"] = c.predictor_kernel;
  j["dropout"] = c.dropout;
  j["predictor_dropout"] = c.predictor_dropout;
  j["dva_threshold"] = c.dva_threshold;
  j["no_mfcc"] = c.no_mfcc;
  j["no_dva_sp"] = c.no_dva_sp;
  j["no_dva_lp"] = c.no_dva_lp;
  j["lr"] = c.lr;
  j["batch"] = c.batch;
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["manifest"] = c.manifest;
  j["features_dir"] = c.features_dir;
  j["stats"] = c.stats;
  j["vocab"] = c.vocab;
  j["out_dir"] = c.out_dir;
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("model_dim", c.model_dim);
  get("style_width", c.style_width);
  get("enc_blocks", c.enc_blocks);
  get("dec_blocks", c.dec_blocks);
  get("heads", c.heads);
  get("conv_filter", c.conv_filter);
  get("conv_kernel", c.conv_kernel);
  get("predictor_kernel", c.predictor_kernel);
  get("dropout", c.dropout);
  get("predictor_dropout", c.predictor_dropout);
  get("dva_threshold", c.dva_threshold);
  get("no_mfcc", c.no_mfcc);
  get("no_dva_sp", c.no_dva_sp);
  get("no_dva_lp", c.no_dva_lp);
  get("lr", c.lr);
  get("batch", c.batch);
  get("steps", c.steps);
  get("seed", c.seed);
  get("checkpoint_every", c.checkpoint_every);
  get("manifest", c.manifest);
  get("features_dir", c.features_dir);
  get("stats", c.stats);
  get("vocab", c.vocab);
  get("out_dir", c.out_dir);
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return config_from_json(ss.str());
}

void save_config_file(const std::string& path, const RunConfig& c) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write config file: " + path);
  f << config_to_json(c);
}

}  // namespace dstts
