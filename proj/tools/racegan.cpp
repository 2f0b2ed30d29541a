#include "racegan/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"racegan: track detection pipeline (synthesis, training, "
               "inference, evaluation, complexity reporting)"};
  app.require_subcommand(1);
  app.fallthrough();

  racegan::cli::GlobalOptions global;
  std::string config_path, seed_str;
  app.add_option("--config", config_path, "config file (key = value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed_str, "global seed, overrides config");
  app.add_flag("--deterministic", global.deterministic,
               "require a seed and reproducible artifacts");

  auto finalize_global = [&]() {
    if (!config_path.empty()) global.config_path = config_path;
    if (!seed_str.empty()) global.seed = std::stoull(seed_str);
  };

  racegan::cli::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--n", synth.count, "number of samples")->required();
  synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();

  racegan::cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "adversarial training run");
  train_cmd->add_option("--data", train.data_dir, "corpus root (images/, masks/)")
      ->required()
      ->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", train.out_dir, "output directory")->required();

  racegan::cli::InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "run a checkpoint over images");
  infer_cmd->add_option("--checkpoint", infer.checkpoint, "trained checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  infer_cmd->add_option("--images", infer.images_dir, "input image directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  infer_cmd->add_option("--out", infer.out_dir, "output directory")->required();
  infer_cmd->add_flag("--post,!--no-post", infer.postprocess,
                      "apply morphology postprocessing (default on)");

  racegan::cli::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against labels");
  eval_cmd->add_option("--pred", eval.pred_dir, "predicted masks")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--labels", eval.label_dir, "ground-truth masks")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--mode", eval.mode, "micro or macro (default micro)");
  std::string eval_csv;
  eval_cmd->add_option("--csv", eval_csv, "also write metrics CSV here");

  racegan::cli::OverlayOptions overlay;
  auto* overlay_cmd = app.add_subcommand("overlay", "blend a mask over an image");
  overlay_cmd->add_option("--image", overlay.image, "input image")
      ->required()
      ->check(CLI::ExistingFile);
  overlay_cmd->add_option("--mask", overlay.mask, "binary mask PNG")
      ->required()
      ->check(CLI::ExistingFile);
  overlay_cmd->add_option("--out", overlay.out_file, "output PNG")->required();
  overlay_cmd->add_option("--alpha", overlay.alpha, "blend strength [0,1]");

  racegan::cli::ComplexityOptions complexity;
  auto* cx_cmd = app.add_subcommand("complexity",
                                    "FLOPs, parameter and timing report");
  std::string cx_spec;
  cx_cmd->add_option("--spec", cx_spec, "network spec file (default built-in)")
      ->check(CLI::ExistingFile);
  cx_cmd->add_option("--height", complexity.height, "input height");
  cx_cmd->add_option("--width", complexity.width, "input width");
  cx_cmd->add_option("--trials", complexity.trials, "timing trials (>= 3)");
  std::string cx_csv;
  cx_cmd->add_option("--csv", cx_csv, "also write report CSV here");

  CLI11_PARSE(app, argc, argv);
  finalize_global();

  if (synth_cmd->parsed()) {
    synth.global = global;
    return racegan::cli::cmd_synth(synth, std::cout, std::cerr);
  }
  if (train_cmd->parsed()) {
    train.global = global;
    return racegan::cli::cmd_train(train, std::cout, std::cerr);
  }
  if (infer_cmd->parsed()) {
    infer.global = global;
    return racegan::cli::cmd_infer(infer, std::cout, std::cerr);
  }
  if (eval_cmd->parsed()) {
    eval.global = global;
    if (!eval_csv.empty()) eval.csv_out = eval_csv;
    return racegan::cli::cmd_eval(eval, std::cout, std::cerr);
  }
  if (overlay_cmd->parsed()) {
    overlay.global = global;
    return racegan::cli::cmd_overlay(overlay, std::cout, std::cerr);
  }
  if (cx_cmd->parsed()) {
    complexity.global = global;
    if (!cx_spec.empty()) complexity.spec_path = cx_spec;
    if (!cx_csv.empty()) complexity.csv_out = cx_csv;
    return racegan::cli::cmd_complexity(complexity, std::cout, std::cerr);
  }
  return 1;
}
