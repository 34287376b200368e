#pragma once

#include <string>
#include <vector>

#include "dstts/config.hpp"

namespace dstts {

// Exit codes shared by the CLI: 0 success, 1 validation failure, 2 numerical
// abort.
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct PreprocessArgs {
  std::string manifest;
  std::string out_dir;
};

// Writes mel/mfcc/pitch/energy DSTT files per utterance plus stats.json and
// vocab.json. Per-utterance failures are logged and skipped; more than 10%
// failures turn into a validation exit.
int cmd_preprocess(const PreprocessArgs& args);

// Runs the training loop described by `cfg`; writes train_log.jsonl,
// periodic checkpoints, and final.dsck under cfg.out_dir. On a numerical
// abort the pre-step parameters are saved as last_good.dsck.
int cmd_train(const RunConfig& cfg);

struct SynthesizeArgs {
  std::string checkpoint;
  std::string phonemes;  // space-separated symbols
  std::string reference_wav;
  std::string out_wav;
  unsigned long long seed = 1;
};

int cmd_synthesize(const SynthesizeArgs& args);

struct EvalArgs {
  std::string checkpoint;
  std::string pairs_manifest;  // JSONL: {"ref_wav":..., "syn_wav":...}
  std::string out_path;
  std::string format = "json";  // or "markdown"
  std::string embeddings_dir;   // optional: external DSTT embeddings
};

int cmd_eval(const EvalArgs& args);

struct AblateArgs {
  RunConfig base;
  std::vector<int> thresholds;
  std::string out_path;  // markdown; a .json sibling is written too
};

int cmd_ablate(const AblateArgs& args);

struct GradCheckArgs {
  double tolerance = 1e-4;
  unsigned long long seed = 1;
  int samples_per_tensor = 32;
};

int cmd_gradcheck(const GradCheckArgs& args);

}  // namespace dstts
