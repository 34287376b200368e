#include <iostream>

#include <CLI11.hpp>

#include "dstts/adam.hpp"
#include "dstts/commands.hpp"

using namespace dstts;

int main(int argc, char** argv) {
  CLI::App app{"dual-style zero-shot text-to-speech"};
  app.require_subcommand(1);

  // preprocess
  PreprocessArgs pre;
  CLI::App* preprocess = app.add_subcommand("preprocess", "extract acoustic features");
  preprocess->add_option("--manifest", pre.manifest, "JSONL dataset manifest")->required();
  preprocess->add_option("--out-dir", pre.out_dir, "feature cache directory")->required();

  // train / ablate share the config + override flags
  RunConfig cfg;
  std::string config_path;
  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--manifest", cfg.manifest, "JSONL dataset manifest");
    cmd->add_option("--features", cfg.features_dir, "feature cache directory");
    cmd->add_option("--stats", cfg.stats, "stats JSON file");
    cmd->add_option("--vocab", cfg.vocab, "vocabulary JSON file");
    cmd->add_option("--out-dir", cfg.out_dir, "output directory");
    cmd->add_option("--steps", cfg.steps, "training steps");
    cmd->add_option("--batch", cfg.batch, "batch size");
    cmd->add_option("--lr", cfg.lr, "learning rate");
    cmd->add_option("--seed", cfg.seed, "random seed");
    cmd->add_option("--dva-threshold", cfg.dva_threshold, "routing threshold (phonemes)");
    cmd->add_option("--model-dim", cfg.model_dim, "hidden width");
    cmd->add_option("--style-width", cfg.style_width, "per-encoder style width");
    cmd->add_option("--enc-blocks", cfg.enc_blocks, "encoder block count");
    cmd->add_option("--dec-blocks", cfg.dec_blocks, "decoder block count");
    cmd->add_option("--conv-filter", cfg.conv_filter, "FFT block filter width");
    cmd->add_option("--checkpoint-every", cfg.checkpoint_every, "checkpoint interval");
    cmd->add_flag("--no-mfcc", cfg.no_mfcc, "drop the MFCC style encoder");
    cmd->add_flag("--no-dva-sp", cfg.no_dva_sp, "drop the short predictors");
    cmd->add_flag("--no-dva-lp", cfg.no_dva_lp, "drop the long predictors");
  };

  CLI::App* train = app.add_subcommand("train", "run the training loop");
  add_config_flags(train);

  CLI::App* ablate = app.add_subcommand("ablate", "threshold sweep");
  add_config_flags(ablate);
  std::vector<int> thresholds = {75, 80, 85, 90, 95};
  std::string ablate_out = "ablate_report.md";
  ablate->add_option("--thresholds", thresholds, "thresholds to sweep")->delimiter(',');
  ablate->add_option("--out", ablate_out, "markdown report path");

  // synthesize
  SynthesizeArgs syn;
  CLI::App* synthesize = app.add_subcommand("synthesize", "clone a voice onto phonemes");
  synthesize->add_option("--checkpoint", syn.checkpoint, "model checkpoint")->required();
  synthesize->add_option("--phonemes", syn.phonemes, "space-separated phoneme symbols")
      ->required();
  synthesize->add_option("--reference", syn.reference_wav, "reference speaker WAV")
      ->required();
  synthesize->add_option("--out", syn.out_wav, "output WAV path")->required();
  synthesize->add_option("--seed", syn.seed, "random seed (recorded; synthesis is deterministic)");

  // eval
  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "speaker-similarity evaluation");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--pairs", ev.pairs_manifest, "JSONL pairs manifest")->required();
  eval_cmd->add_option("--out", ev.out_path, "report path")->required();
  eval_cmd->add_option("--format", ev.format, "json or markdown")
      ->check(CLI::IsMember({"json", "markdown"}));
  eval_cmd->add_option("--embeddings", ev.embeddings_dir,
                       "directory of external DSTT embeddings keyed by clip id");

  // gradcheck
  GradCheckArgs gc;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
  gradcheck->add_option("--tolerance", gc.tolerance, "max relative error allowed");
  gradcheck->add_option("--seed", gc.seed, "random seed");
  gradcheck->add_option("--samples", gc.samples_per_tensor, "entries checked per tensor");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*preprocess) return cmd_preprocess(pre);
    if (*train || *ablate) {
      RunConfig resolved = cfg;
      if (!config_path.empty()) {
        resolved = load_config_file(config_path);
        // explicit flags override file values
        CLI::App* cmd = *train ? train : ablate;
        auto override_if = [&](const char* flag, auto member) {
          if (cmd->count(flag)) resolved.*member = cfg.*member;
        };
        override_if("--manifest", &RunConfig::manifest);
        override_if("--features", &RunConfig::features_dir);
        override_if("--stats", &RunConfig::stats);
        override_if("--vocab", &RunConfig::vocab);
        override_if("--out-dir", &RunConfig::out_dir);
        override_if("--steps", &RunConfig::steps);
        override_if("--batch", &RunConfig::batch);
        override_if("--lr", &RunConfig::lr);
        override_if("--seed", &RunConfig::seed);
        override_if("--dva-threshold", &RunConfig::dva_threshold);
        override_if("--model-dim", &RunConfig::model_dim);
        override_if("--style-width", &RunConfig::style_width);
        override_if("--enc-blocks", &RunConfig::enc_blocks);
        override_if("--dec-blocks", &RunConfig::dec_blocks);
        override_if("--conv-filter", &RunConfig::conv_filter);
        override_if("--checkpoint-every", &RunConfig::checkpoint_every);
        override_if("--no-mfcc", &RunConfig::no_mfcc);
        override_if("--no-dva-sp", &RunConfig::no_dva_sp);
        override_if("--no-dva-lp", &RunConfig::no_dva_lp);
      }
      if (*train) return cmd_train(resolved);
      AblateArgs ab;
      ab.base = resolved;
      ab.thresholds = thresholds;
      ab.out_path = ablate_out;
      return cmd_ablate(ab);
    }
    if (*synthesize) return cmd_synthesize(syn);
    if (*eval_cmd) return cmd_eval(ev);
    if (*gradcheck) return cmd_gradcheck(gc);
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
