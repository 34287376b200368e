#include "dstts/dataset.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "dstts/tensor_file.hpp"

namespace dstts {

using ordered_json = nlohmann::ordered_json;

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.wav = j.at("wav").get<std::string>();
    e.phonemes = j.at("phonemes").get<std::vector<std::string>>();
    e.durations = j.at("durations").get<std::vector<int>>();
    if (j.contains("speaker")) e.speaker = j.at("speaker").get<std::string>();
    if (e.phonemes.size() != e.durations.size())
      throw std::runtime_error("manifest entry " + e.id +
                               ": phonemes/durations length mismatch");
    if (e.phonemes.empty())
      throw std::runtime_error("manifest entry " + e.id + ": empty phoneme list");
    entries.push_back(std::move(e));
  }
  return entries;
}

CorpusStats read_stats(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open stats file: " + path);
  ordered_json j = ordered_json::parse(f);
  CorpusStats s;
  s.pitch_mean = j.at("pitch_mean").get<double>();
  s.pitch_std = j.at("pitch_std").get<double>();
  s.energy_mean = j.at("energy_mean").get<double>();
  s.energy_std = j.at("energy_std").get<double>();
  if (s.pitch_std <= 0.0 || s.energy_std <= 0.0)
    throw std::runtime_error("stats file has non-positive std: " + path);
  return s;
}

void write_stats(const std::string& path, const CorpusStats& s) {
  ordered_json j;
  j["pitch_mean"] = s.pitch_mean;
  j["pitch_std"] = s.pitch_std;
  j["energy_mean"] = s.energy_mean;
  j["energy_std"] = s.energy_std;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write stats file: " + path);
  f << j.dump(2) << "\n";
}

std::vector<std::string> read_vocab(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open vocabulary: " + path);
  ordered_json j = ordered_json::parse(f);
  auto symbols = j.get<std::vector<std::string>>();
  if (symbols.empty()) throw std::runtime_error("empty vocabulary: " + path);
  return symbols;
}

void write_vocab(const std::string& path, const std::vector<std::string>& symbols) {
  ordered_json j = symbols;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write vocabulary: " + path);
  f << j.dump(2) << "\n";
}

std::map<std::string, int> vocab_index(const std::vector<std::string>& symbols) {
  std::map<std::string, int> idx;
  for (size_t i = 0; i < symbols.size(); ++i) idx[symbols[i]] = static_cast<int>(i);
  return idx;
}

std::vector<int> reconcile_durations(const std::vector<int>& durations, int mel_frames) {
  long long total = 0;
  for (int d : durations) {
    if (d < 0) throw std::runtime_error("negative phoneme duration");
    total += d;
  }
  const long long diff = static_cast<long long>(mel_frames) - total;
  if (diff == 0) return durations;
  if (std::llabs(diff) > 1)
    throw std::runtime_error("duration total " + std::to_string(total) +
                             " does not match " + std::to_string(mel_frames) +
                             " mel frames (off by " + std::to_string(diff) + ")");
  std::vector<int> fixed = durations;
  int& last = fixed.back();
  if (last + static_cast<int>(diff) < 0)
    throw std::runtime_error("cannot reconcile duration mismatch on final phoneme");
  last += static_cast<int>(diff);
  return fixed;
}

std::vector<int> phonemes_to_ids(const std::vector<std::string>& phonemes,
                                 const std::map<std::string, int>& vocab) {
  std::vector<int> ids;
  ids.reserve(phonemes.size());
  for (const std::string& p : phonemes) {
    auto it = vocab.find(p);
    if (it == vocab.end()) throw std::runtime_error("unknown phoneme: " + p);
    ids.push_back(it->second);
  }
  return ids;
}

namespace {
Tensor tensor_from_file(const TensorFile& t) {
  Tensor out(t.shape);
  for (size_t i = 0; i < t.data.size(); ++i) out.data[i] = t.data[i];
  return out;
}
}  // namespace

TrainItem load_train_item(const ManifestEntry& entry, const std::string& features_dir,
                          const CorpusStats& stats,
                          const std::map<std::string, int>& vocab) {
  TrainItem item;
  item.id = entry.id;
  item.phoneme_ids = phonemes_to_ids(entry.phonemes, vocab);

  const std::string base = features_dir + "/" + entry.id;
  item.mel = tensor_from_file(read_dstt(base + ".mel.dstt"));
  item.mfcc = tensor_from_file(read_dstt(base + ".mfcc.dstt"));
  TensorFile pitch = read_dstt(base + ".pitch.dstt");
  TensorFile energy = read_dstt(base + ".energy.dstt");
  if (item.mel.rank() != 2 || item.mel.cols() != 80)
    throw std::runtime_error(entry.id + ": mel feature has shape " + item.mel.shape_str());
  if (item.mfcc.rank() != 2 || item.mfcc.cols() != 20)
    throw std::runtime_error(entry.id + ": mfcc feature has shape " + item.mfcc.shape_str());
  if (pitch.data.size() != entry.phonemes.size() ||
      energy.data.size() != entry.phonemes.size())
    throw std::runtime_error(entry.id + ": per-phoneme feature length mismatch");

  item.durations = reconcile_durations(entry.durations, item.mel.rows());
  item.pitch_std.resize(pitch.data.size());
  item.energy_std.resize(energy.data.size());
  for (size_t i = 0; i < pitch.data.size(); ++i)
    item.pitch_std[i] = (pitch.data[i] - stats.pitch_mean) / stats.pitch_std;
  for (size_t i = 0; i < energy.data.size(); ++i)
    item.energy_std[i] = (energy.data[i] - stats.energy_mean) / stats.energy_std;
  return item;
}

}  // namespace dstts
