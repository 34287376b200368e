#include "dstts/eval.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dstts/style_encoder.hpp"
#include "dstts/tensor_file.hpp"

namespace dstts {

using ordered_json = nlohmann::ordered_json;

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch");
  if (a.empty()) throw std::invalid_argument("cosine_similarity: empty vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0)
    throw std::invalid_argument("cosine_similarity: zero-norm input");
  double s = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(s, -1.0, 1.0);
}

std::vector<double> StyleVectorEmbedder::embed(const AudioClip& clip) {
  AudioClip normalized = clip;
  double peak = 0.0;
  for (double s : normalized.samples) peak = std::max(peak, std::fabs(s));
  if (peak > 0.0)
    for (double& s : normalized.samples) s *= 0.95 / peak;
  SpectralFrames spec = stft_magnitude(normalized);
  MelSpectrogram mel = mel_spectrogram(spec);
  MfccSequence mf = mfcc(mel);
  Tensor style = model_.style_values(mel_to_tensor(mel), mfcc_to_tensor(mf));
  return style.data;
}

std::vector<double> FileEmbedder::embed_id(const std::string& id) {
  TensorFile t = read_dstt(dir_ + "/" + id + ".dstt");
  return std::vector<double>(t.data.begin(), t.data.end());
}

std::vector<double> FileEmbedder::embed(const AudioClip&) {
  if (current_id.empty())
    throw std::logic_error("FileEmbedder: no clip id set");
  return embed_id(current_id);
}

double smcs(const AudioClip& reference, const AudioClip& synthesized,
            SpeakerEmbedder& embedder) {
  return cosine_similarity(embedder.embed(reference), embedder.embed(synthesized));
}

void EvalReport::finalize() {
  if (pairs.empty()) throw std::invalid_argument("report: no results");
  double s = 0.0, m = 0.0;
  int m_count = 0;
  for (const auto& p : pairs) {
    s += p.smcs;
    if (p.mel_mae) {
      m += *p.mel_mae;
      ++m_count;
    }
  }
  smcs_mean = s / static_cast<double>(pairs.size());
  if (m_count > 0)
    mel_mae_mean = m / static_cast<double>(m_count);
  else
    mel_mae_mean.reset();
}

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

constexpr const char* kWerNote = "n/a (external ASR out of scope)";
}  // namespace

std::string report_to_json(const EvalReport& r) {
  ordered_json j;
  ordered_json pairs = ordered_json::array();
  for (const auto& p : r.pairs) {
    ordered_json e;
    e["ref"] = p.ref;
    e["syn"] = p.syn;
    e["smcs"] = p.smcs;
    if (p.mel_mae)
      e["mel_mae"] = *p.mel_mae;
    else
      e["mel_mae"] = nullptr;
    pairs.push_back(e);
  }
  j["pairs"] = pairs;
  j["smcs_mean"] = r.smcs_mean;
  if (r.mel_mae_mean)
    j["mel_mae_mean"] = *r.mel_mae_mean;
  else
    j["mel_mae_mean"] = nullptr;
  ordered_json meta;
  meta["threshold"] = r.threshold;
  meta["checkpoint"] = r.checkpoint;
  meta["embedder"] = r.embedder;
  meta["wer"] = kWerNote;
  j["metadata"] = meta;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  EvalReport r;
  for (const auto& e : j.at("pairs")) {
    EvalPairResult p;
    p.ref = e.at("ref").get<std::string>();
    p.syn = e.at("syn").get<std::string>();
    p.smcs = e.at("smcs").get<double>();
    if (!e.at("mel_mae").is_null()) p.mel_mae = e.at("mel_mae").get<double>();
    r.pairs.push_back(p);
  }
  r.smcs_mean = j.at("smcs_mean").get<double>();
  if (!j.at("mel_mae_mean").is_null()) r.mel_mae_mean = j.at("mel_mae_mean").get<double>();
  const auto& meta = j.at("metadata");
  r.threshold = meta.at("threshold").get<int>();
  r.checkpoint = meta.at("checkpoint").get<std::string>();
  r.embedder = meta.at("embedder").get<std::string>();
  return r;
}

std::string report_to_markdown(const EvalReport& r) {
  std::ostringstream os;
  os << "| pair | WER | SMCS | MelMAE |\n";
  os << "|---|---|---|---|\n";
  for (const auto& p : r.pairs) {
    os << "| " << p.ref << " vs " << p.syn << " | " << kWerNote << " | "
       << fmt(p.smcs) << " | " << (p.mel_mae ? fmt(*p.mel_mae) : std::string("n/a"))
       << " |\n";
  }
  os << "| mean | " << kWerNote << " | " << fmt(r.smcs_mean) << " | "
     << (r.mel_mae_mean ? fmt(*r.mel_mae_mean) : std::string("n/a")) << " |\n";
  os << "\n";
  os << "threshold: " << r.threshold << "\n";
  os << "checkpoint: " << r.checkpoint << "\n";
  os << "embedder: " << r.embedder << "\n";
  return os.str();
}

namespace {
std::vector<std::string> split_md_row(const std::string& line) {
  std::vector<std::string> cells;
  size_t pos = line.find('|');
  while (pos != std::string::npos) {
    size_t next = line.find('|', pos + 1);
    if (next == std::string::npos) break;
    std::string cell = line.substr(pos + 1, next - pos - 1);
    size_t b = cell.find_first_not_of(' ');
    size_t e = cell.find_last_not_of(' ');
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    pos = next;
  }
  return cells;
}
}  // namespace

EvalReport report_from_markdown(const std::string& text) {
  EvalReport r;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("threshold:", 0) == 0) {
      r.threshold = std::stoi(line.substr(10));
      continue;
    }
    if (line.rfind("checkpoint:", 0) == 0) {
      std::string v = line.substr(11);
      r.checkpoint = v.empty() ? "" : v.substr(v.find_first_not_of(' '));
      continue;
    }
    if (line.rfind("embedder:", 0) == 0) {
      std::string v = line.substr(9);
      r.embedder = v.empty() ? "" : v.substr(v.find_first_not_of(' '));
      continue;
    }
    if (line.empty() || line[0] != '|') continue;
    auto cells = split_md_row(line);
    if (cells.size() != 4 || cells[0] == "pair" || cells[0].rfind("---", 0) == 0)
      continue;
    if (cells[0] == "mean") {
      r.smcs_mean = std::stod(cells[2]);
      if (cells[3] != "n/a") r.mel_mae_mean = std::stod(cells[3]);
      continue;
    }
    EvalPairResult p;
    const size_t vs = cells[0].find(" vs ");
    if (vs != std::string::npos) {
      p.ref = cells[0].substr(0, vs);
      p.syn = cells[0].substr(vs + 4);
    } else {
      p.ref = cells[0];
    }
    p.smcs = std::stod(cells[2]);
    if (cells[3] != "n/a") p.mel_mae = std::stod(cells[3]);
    r.pairs.push_back(p);
  }
  if (r.pairs.empty()) throw std::runtime_error("markdown report: no rows parsed");
  return r;
}

std::string sweep_to_markdown(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "| threshold | WER | SMCS | MelMAE |\n";
  os << "|---|---|---|---|\n";
  for (const auto& row : rows)
    os << "| " << row.threshold << " | " << kWerNote << " | " << fmt(row.smcs)
       << " | " << fmt(row.mel_mae) << " |\n";
  return os.str();
}

std::vector<SweepRow> sweep_from_markdown(const std::string& text) {
  std::vector<SweepRow> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] != '|') continue;
    auto cells = split_md_row(line);
    if (cells.size() != 4 || cells[0] == "threshold" || cells[0].rfind("---", 0) == 0)
      continue;
    SweepRow row;
    row.threshold = std::stoi(cells[0]);
    row.smcs = std::stod(cells[2]);
    row.mel_mae = std::stod(cells[3]);
    rows.push_back(row);
  }
  if (rows.empty()) throw std::runtime_error("markdown sweep: no rows parsed");
  return rows;
}

std::string sweep_to_json(const std::vector<SweepRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json j;
    j["threshold"] = row.threshold;
    j["wer"] = kWerNote;
    j["smcs"] = row.smcs;
    j["mel_mae"] = row.mel_mae;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace dstts
