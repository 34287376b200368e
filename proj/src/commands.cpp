#include "dstts/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dstts/checkpoint.hpp"
#include "dstts/dataset.hpp"
#include "dstts/eval.hpp"
#include "dstts/style_encoder.hpp"
#include "dstts/tensor_file.hpp"
#include "dstts/train.hpp"
#include "dstts/vocoder.hpp"
#include "dstts/wav_io.hpp"

namespace dstts {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct UtteranceFeatures {
  MelSpectrogram mel;
  MfccSequence mfcc;
  std::vector<int> durations;          // reconciled
  std::vector<double> phoneme_pitch;   // raw Hz, voiced average
  std::vector<double> phoneme_energy;  // raw magnitude average
};

UtteranceFeatures extract_features(const ManifestEntry& entry) {
  AudioClip clip = load_audio(entry.wav);
  SpectralFrames spec = stft_magnitude(clip);
  UtteranceFeatures f;
  f.mel = mel_spectrogram(spec);
  f.mfcc = mfcc(f.mel);
  f.durations = reconcile_durations(entry.durations, f.mel.frame_count());
  std::vector<double> frame_pitch = extract_pitch(clip);
  std::vector<double> frame_energy = extract_energy(spec);
  f.phoneme_pitch = phoneme_average_voiced(frame_pitch, f.durations);
  f.phoneme_energy = phoneme_average(frame_energy, f.durations);
  return f;
}

void write_feature_files(const std::string& dir, const std::string& id,
                         const UtteranceFeatures& f) {
  const int T = f.mel.frame_count();
  std::vector<float> mel_data, mfcc_data;
  mel_data.reserve(static_cast<size_t>(T) * kMelBins);
  for (const auto& frame : f.mel.frames)
    for (double v : frame) mel_data.push_back(static_cast<float>(v));
  for (const auto& frame : f.mfcc.frames)
    for (double v : frame) mfcc_data.push_back(static_cast<float>(v));
  write_dstt(dir + "/" + id + ".mel.dstt", {T, kMelBins}, mel_data);
  write_dstt(dir + "/" + id + ".mfcc.dstt", {T, kMfccCoeffs}, mfcc_data);
  const int P = static_cast<int>(f.phoneme_pitch.size());
  write_dstt(dir + "/" + id + ".pitch.dstt", {P},
             std::vector<double>(f.phoneme_pitch.begin(), f.phoneme_pitch.end()));
  write_dstt(dir + "/" + id + ".energy.dstt", {P},
             std::vector<double>(f.phoneme_energy.begin(), f.phoneme_energy.end()));
}

void write_pgm(const std::string& path, const Tensor& mel) {
  // one pixel per (mel bin, frame), low bin at the bottom row
  const int width = mel.rows(), height = mel.cols();
  double lo = mel.data[0], hi = mel.data[0];
  for (double v : mel.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write image: " + path);
  f << "P5\n" << width << " " << height << "\n255\n";
  for (int y = 0; y < height; ++y) {
    const int bin = height - 1 - y;
    for (int x = 0; x < width; ++x) {
      const double v = (mel.at(x, bin) - lo) / span;
      f.put(static_cast<char>(std::lround(v * 255.0)));
    }
  }
}

std::string strip_wav_ext(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".wav")
    return path.substr(0, path.size() - 4);
  return path;
}

std::string wav_stem(const std::string& path) {
  return fs::path(path).stem().string();
}

MelSpectrogram tensor_to_mel(const Tensor& t) {
  MelSpectrogram mel;
  mel.frames.resize(t.rows());
  for (int i = 0; i < t.rows(); ++i) {
    mel.frames[i].resize(t.cols());
    for (int j = 0; j < t.cols(); ++j) mel.frames[i][j] = t.at(i, j);
  }
  return mel;
}

AudioClip peak_normalized(AudioClip clip, double peak_target) {
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::fabs(s));
  if (peak > 0.0)
    for (double& s : clip.samples) s *= peak_target / peak;
  return clip;
}

struct LoadedDataset {
  std::vector<TrainItem> items;
  std::vector<std::string> vocab_symbols;
  std::vector<ManifestEntry> entries;
};

LoadedDataset load_dataset(const RunConfig& cfg) {
  LoadedDataset ds;
  ds.entries = read_manifest(cfg.manifest);
  ds.vocab_symbols = read_vocab(cfg.vocab);
  CorpusStats stats = read_stats(cfg.stats);
  auto vocab = vocab_index(ds.vocab_symbols);
  for (const auto& entry : ds.entries)
    ds.items.push_back(load_train_item(entry, cfg.features_dir, stats, vocab));
  if (ds.items.empty()) throw std::runtime_error("dataset is empty");
  return ds;
}

AudioClip synthesize_clip(const DsTtsModel& model, const std::vector<int>& ids,
                          const Tensor& style, Tensor* mel_out = nullptr,
                          RoutingDecision* decision = nullptr) {
  Tape t;
  Var style_var = t.constant(style);
  ForwardOutput out = model.forward_infer(t, ids, style_var);
  Tensor mel_pred = t.value(out.mel);
  if (mel_out) *mel_out = mel_pred;
  if (decision) *decision = out.predictions.decision;
  SpectralFrames spec = invert_mel(tensor_to_mel(mel_pred));
  AudioClip clip = griffin_lim(spec);
  return peak_normalized(std::move(clip), 0.95);
}

Tensor style_of_clip(const DsTtsModel& model, const AudioClip& clip) {
  SpectralFrames spec = stft_magnitude(clip);
  MelSpectrogram mel = mel_spectrogram(spec);
  MfccSequence mf = mfcc(mel);
  return model.style_values(mel_to_tensor(mel), mfcc_to_tensor(mf));
}

}  // namespace

int cmd_preprocess(const PreprocessArgs& args) {
  std::vector<ManifestEntry> entries = read_manifest(args.manifest);
  if (entries.empty()) {
    std::cerr << "preprocess: manifest has no entries\n";
    return kExitValidation;
  }
  fs::create_directories(args.out_dir);

  std::set<std::string> symbols;
  std::vector<double> corpus_pitch, corpus_energy;
  size_t failures = 0;
  for (const auto& entry : entries) {
    try {
      UtteranceFeatures f = extract_features(entry);
      write_feature_files(args.out_dir, entry.id, f);
      for (const std::string& p : entry.phonemes) symbols.insert(p);
      for (double v : f.phoneme_pitch)
        if (v > 0.0) corpus_pitch.push_back(v);
      corpus_energy.insert(corpus_energy.end(), f.phoneme_energy.begin(),
                           f.phoneme_energy.end());
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "preprocess: skipping " << entry.id << ": " << e.what() << "\n";
    }
  }

  auto moments = [](const std::vector<double>& v, double& mean, double& stdev) {
    mean = 0.0;
    stdev = 1.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    stdev = var > 1e-12 ? std::sqrt(var) : 1.0;
  };
  CorpusStats stats;
  moments(corpus_pitch, stats.pitch_mean, stats.pitch_std);
  moments(corpus_energy, stats.energy_mean, stats.energy_std);
  write_stats(args.out_dir + "/stats.json", stats);

  std::vector<std::string> vocab = {"<pad>"};
  vocab.insert(vocab.end(), symbols.begin(), symbols.end());
  write_vocab(args.out_dir + "/vocab.json", vocab);

  std::cout << "preprocess: " << (entries.size() - failures) << "/" << entries.size()
            << " utterances processed\n";
  if (failures * 10 > entries.size()) {
    std::cerr << "preprocess: more than 10% of utterances failed\n";
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  cfg.validate();
  LoadedDataset ds = load_dataset(cfg);
  fs::create_directories(cfg.out_dir);

  DsTtsModel model(cfg, static_cast<int>(ds.vocab_symbols.size()));
  Adam optimizer;
  std::ofstream log(cfg.out_dir + "/train_log.jsonl");
  if (!log) throw std::runtime_error("cannot write training log");

  // One-step-back snapshot: an update can only poison the parameters after a
  // finite loss/gradient pass, so the state before the previous update is the
  // newest one known to be good.
  auto copy_params = [&] {
    std::map<std::string, Tensor> snap;
    for (const auto& [name, p] : model.params().all()) snap[name] = p.value;
    return snap;
  };
  std::map<std::string, Tensor> last_good = copy_params();

  const size_t n = ds.items.size();
  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<TrainItem> batch;
    for (int j = 0; j < cfg.batch; ++j)
      batch.push_back(ds.items[(static_cast<size_t>(step - 1) * cfg.batch + j) % n]);
    const auto t0 = std::chrono::steady_clock::now();
    LossBreakdown loss;
    std::map<std::string, Tensor> before = copy_params();
    try {
      loss = train_step(model, batch, optimizer, cfg.lr, step);
    } catch (const NumericalError& e) {
      std::cerr << "train: " << e.what() << "; keeping last good parameters\n";
      for (auto& [name, p] : model.params().all()) p.value = last_good.at(name);
      save_checkpoint(cfg.out_dir + "/last_good.dsck", model, ds.vocab_symbols);
      return kExitNumerical;
    }
    last_good = std::move(before);  // this state produced a finite loss
    const auto t1 = std::chrono::steady_clock::now();
    const long long wall_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    ordered_json j;
    j["step"] = step;
    j["l_rec"] = loss.l_rec;
    j["l_d"] = loss.l_d;
    j["l_e"] = loss.l_e;
    j["l_p"] = loss.l_p;
    j["total"] = loss.total;
    j["wall_ms"] = wall_ms;
    log << j.dump() << "\n";
    log.flush();
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
      save_checkpoint(cfg.out_dir + "/ck_step" + std::to_string(step) + ".dsck", model,
                      ds.vocab_symbols);
  }
  save_checkpoint(cfg.out_dir + "/final.dsck", model, ds.vocab_symbols);
  save_config_file(cfg.out_dir + "/config.json", cfg);
  std::cout << "train: finished " << cfg.steps << " steps; checkpoint at "
            << cfg.out_dir << "/final.dsck\n";
  return kExitOk;
}

int cmd_synthesize(const SynthesizeArgs& args) {
  LoadedCheckpoint ck = load_checkpoint(args.checkpoint);
  auto vocab = vocab_index(ck.vocab_symbols);

  std::istringstream ss(args.phonemes);
  std::vector<std::string> symbols;
  for (std::string tok; ss >> tok;) symbols.push_back(tok);
  if (symbols.empty()) throw std::runtime_error("no phonemes given");
  std::vector<int> ids = phonemes_to_ids(symbols, vocab);

  AudioClip reference = load_audio(args.reference_wav);
  if (static_cast<int>(reference.samples.size()) < kWindowSize)
    throw std::runtime_error("reference clip shorter than one analysis window");
  Tensor style = style_of_clip(*ck.model, reference);

  Tensor mel_pred;
  RoutingDecision decision;
  AudioClip out = synthesize_clip(*ck.model, ids, style, &mel_pred, &decision);

  const std::string base = strip_wav_ext(args.out_wav);
  write_wav(base + ".wav", out);
  std::vector<float> mel_f32(mel_pred.data.begin(), mel_pred.data.end());
  write_dstt(base + ".mel.dstt", {mel_pred.rows(), mel_pred.cols()}, mel_f32);
  write_pgm(base + ".pgm", mel_pred);

  std::cout << "routing: length=" << decision.sequence_length
            << " threshold=" << decision.threshold
            << " branch=" << branch_name(decision.branch) << "\n";
  std::cout << "synthesize: wrote " << base << ".wav (" << out.samples.size()
            << " samples, " << out.duration_s() << " s), " << base << ".mel.dstt, "
            << base << ".pgm\n";
  return kExitOk;
}

int cmd_eval(const EvalArgs& args) {
  LoadedCheckpoint ck = load_checkpoint(args.checkpoint);

  std::ifstream f(args.pairs_manifest);
  if (!f) throw std::runtime_error("cannot open pairs manifest: " + args.pairs_manifest);
  EvalReport report;
  report.threshold = ck.model->config().dva_threshold;
  report.checkpoint = args.checkpoint;

  StyleVectorEmbedder style_embedder(*ck.model);
  FileEmbedder file_embedder(args.embeddings_dir);
  const bool external = !args.embeddings_dir.empty();
  report.embedder = external ? file_embedder.name() : style_embedder.name();

  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    EvalPairResult pair;
    pair.ref = j.at("ref_wav").get<std::string>();
    pair.syn = j.at("syn_wav").get<std::string>();
    AudioClip ref = load_audio(pair.ref);
    AudioClip syn = load_audio(pair.syn);
    if (external) {
      pair.smcs = cosine_similarity(file_embedder.embed_id(wav_stem(pair.ref)),
                                    file_embedder.embed_id(wav_stem(pair.syn)));
    } else {
      pair.smcs = smcs(ref, syn, style_embedder);
    }
    MelSpectrogram ref_mel = mel_spectrogram(stft_magnitude(ref));
    MelSpectrogram syn_mel = mel_spectrogram(stft_magnitude(syn));
    if (ref_mel.frame_count() == syn_mel.frame_count())
      pair.mel_mae = mel_mae(mel_to_tensor(syn_mel), mel_to_tensor(ref_mel));
    report.pairs.push_back(std::move(pair));
  }
  report.finalize();

  std::ofstream out(args.out_path);
  if (!out) throw std::runtime_error("cannot write report: " + args.out_path);
  out << (args.format == "markdown" ? report_to_markdown(report)
                                    : report_to_json(report));
  std::cout << "eval: " << report.pairs.size() << " pairs, mean SMCS "
            << report.smcs_mean << "\n";
  return kExitOk;
}

int cmd_ablate(const AblateArgs& args) {
  if (args.thresholds.empty()) throw std::runtime_error("ablate: no thresholds given");
  LoadedDataset ds = load_dataset(args.base);
  std::vector<SweepRow> rows;
  for (int threshold : args.thresholds) {
    RunConfig cfg = args.base;
    cfg.dva_threshold = threshold;
    cfg.validate();
    DsTtsModel model(cfg, static_cast<int>(ds.vocab_symbols.size()));
    Adam optimizer;
    const size_t n = ds.items.size();
    for (int step = 1; step <= cfg.steps; ++step) {
      std::vector<TrainItem> batch;
      for (int j = 0; j < cfg.batch; ++j)
        batch.push_back(ds.items[(static_cast<size_t>(step - 1) * cfg.batch + j) % n]);
      train_step(model, batch, optimizer, cfg.lr, step);
    }
    // teacher-forced reconstruction error plus a self-reference SMCS proxy
    StyleVectorEmbedder embedder(model);
    double mae_sum = 0.0, smcs_sum = 0.0;
    for (size_t i = 0; i < ds.items.size(); ++i) {
      const TrainItem& item = ds.items[i];
      Tape t;
      Rng rng(0);
      ForwardOutput out = model.forward_teacher(t, item, false, rng);
      mae_sum += mel_mae(t.value(out.mel), item.mel);
      AudioClip reference = load_audio(ds.entries[i].wav);
      Tensor style = style_of_clip(model, reference);
      AudioClip synth = synthesize_clip(model, item.phoneme_ids, style);
      smcs_sum += smcs(reference, synth, embedder);
    }
    SweepRow row;
    row.threshold = threshold;
    row.smcs = smcs_sum / static_cast<double>(ds.items.size());
    row.mel_mae = mae_sum / static_cast<double>(ds.items.size());
    rows.push_back(row);
    std::cout << "ablate: threshold " << threshold << " smcs " << row.smcs
              << " mel_mae " << row.mel_mae << "\n";
  }
  std::ofstream md(args.out_path);
  if (!md) throw std::runtime_error("cannot write report: " + args.out_path);
  md << sweep_to_markdown(rows);
  std::ofstream js(args.out_path + ".json");
  js << sweep_to_json(rows);
  return kExitOk;
}

int cmd_gradcheck(const GradCheckArgs& args) {
  RunConfig cfg = tiny_config();
  cfg.seed = args.seed;
  const int vocab = 5;
  DsTtsModel model(cfg, vocab);
  std::vector<TrainItem> batch = synthetic_batch(vocab, 2, args.seed);
  GradCheckOptions opts;
  opts.samples_per_tensor = args.samples_per_tensor;
  GradCheckResult result = grad_check(model, batch, opts);
  std::cout << "gradcheck: max relative error " << result.max_rel_error << " ("
            << result.checked_entries << " entries, worst tensor "
            << result.worst_tensor << ")\n";
  return result.max_rel_error <= args.tolerance ? kExitOk : kExitValidation;
}

}  // namespace dstts
