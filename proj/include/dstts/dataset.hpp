#pragma once

#include <map>
#include <string>
#include <vector>

#include "dstts/model.hpp"

namespace dstts {

// One JSON Lines manifest record.
struct ManifestEntry {
  std::string id;
  std::string wav;
  std::vector<std::string> phonemes;
  std::vector<int> durations;
  std::string speaker;  // optional
};

std::vector<ManifestEntry> read_manifest(const std::string& path);

struct CorpusStats {
  double pitch_mean = 0.0;
  double pitch_std = 1.0;
  double energy_mean = 0.0;
  double energy_std = 1.0;
};

CorpusStats read_stats(const std::string& path);
void write_stats(const std::string& path, const CorpusStats& s);

// Phoneme vocabulary: JSON array of symbols, index = id, id 0 is padding.
std::vector<std::string> read_vocab(const std::string& path);
void write_vocab(const std::string& path, const std::vector<std::string>& symbols);
std::map<std::string, int> vocab_index(const std::vector<std::string>& symbols);

// Reconciles a manifest duration total against the actual mel frame count:
// an off-by-one is absorbed by the final phoneme, anything larger throws.
std::vector<int> reconcile_durations(const std::vector<int>& durations, int mel_frames);

// Loads one preprocessed utterance (mel/mfcc/pitch/energy DSTT files) and
// standardizes supervision with the corpus stats.
TrainItem load_train_item(const ManifestEntry& entry, const std::string& features_dir,
                          const CorpusStats& stats,
                          const std::map<std::string, int>& vocab);

std::vector<int> phonemes_to_ids(const std::vector<std::string>& phonemes,
                                 const std::map<std::string, int>& vocab);

}  // namespace dstts
