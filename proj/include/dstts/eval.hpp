#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dstts/dsp.hpp"
#include "dstts/model.hpp"

namespace dstts {

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// AudioClip -> fixed-dimension speaker representation.
class SpeakerEmbedder {
 public:
  virtual ~SpeakerEmbedder() = default;
  virtual std::vector<double> embed(const AudioClip& clip) = 0;
  virtual std::string name() const = 0;
};

// Default embedder: the model's own dual-style pipeline. Clips are
// peak-normalized first so the embedding (and SMCS) ignores recording gain.
class StyleVectorEmbedder : public SpeakerEmbedder {
 public:
  explicit StyleVectorEmbedder(const DsTtsModel& model) : model_(model) {}
  std::vector<double> embed(const AudioClip& clip) override;
  std::string name() const override { return "style-encoder-proxy"; }

 private:
  const DsTtsModel& model_;
};

// External embeddings read from DSTT tensor files keyed by clip id (the WAV
// basename without extension).
class FileEmbedder : public SpeakerEmbedder {
 public:
  explicit FileEmbedder(std::string dir) : dir_(std::move(dir)) {}
  std::vector<double> embed_id(const std::string& id);
  std::vector<double> embed(const AudioClip& clip) override;
  std::string name() const override { return "external-files"; }

  std::string current_id;  // set by the caller before embed()

 private:
  std::string dir_;
};

double smcs(const AudioClip& reference, const AudioClip& synthesized,
            SpeakerEmbedder& embedder);

struct EvalPairResult {
  std::string ref;
  std::string syn;
  double smcs = 0.0;
  std::optional<double> mel_mae;
};

struct EvalReport {
  std::vector<EvalPairResult> pairs;
  double smcs_mean = 0.0;
  std::optional<double> mel_mae_mean;
  // metadata
  int threshold = 0;
  std::string checkpoint;
  std::string embedder;

  void finalize();  // computes the means; throws if pairs is empty
};

std::string report_to_json(const EvalReport& r);
// Markdown table mirroring the usual methods/WER/SMCS layout; the WER column
// is fixed to "n/a (external ASR out of scope)".
std::string report_to_markdown(const EvalReport& r);
EvalReport report_from_json(const std::string& text);
EvalReport report_from_markdown(const std::string& text);

// Threshold-sweep report (one row per threshold).
struct SweepRow {
  int threshold = 0;
  double smcs = 0.0;
  double mel_mae = 0.0;
};

std::string sweep_to_markdown(const std::vector<SweepRow>& rows);
std::vector<SweepRow> sweep_from_markdown(const std::string& text);
std::string sweep_to_json(const std::vector<SweepRow>& rows);

}  // namespace dstts
