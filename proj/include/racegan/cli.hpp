#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace racegan::cli {

/// Shared flags; command-line values override config-file values.
struct GlobalOptions {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

struct SynthOptions {
  GlobalOptions global;
  int count = 0;
  std::filesystem::path out_dir;
};

struct TrainOptions {
  GlobalOptions global;
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
};

struct InferOptions {
  GlobalOptions global;
  std::filesystem::path checkpoint;
  std::filesystem::path images_dir;
  std::filesystem::path out_dir;
  bool postprocess = true;
};

struct EvalOptions {
  GlobalOptions global;
  std::filesystem::path pred_dir;
  std::filesystem::path label_dir;
  std::string mode = "micro";
  std::optional<std::filesystem::path> csv_out;
};

struct OverlayOptions {
  GlobalOptions global;
  std::filesystem::path image;
  std::filesystem::path mask;
  std::filesystem::path out_file;
  double alpha = 0.45;
};

struct ComplexityOptions {
  GlobalOptions global;
  std::optional<std::filesystem::path> spec_path;
  int height = 128, width = 128;
  int trials = 11;
  std::optional<std::filesystem::path> csv_out;
};

int cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);
int cmd_infer(const InferOptions& opt, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);
int cmd_overlay(const OverlayOptions& opt, std::ostream& out, std::ostream& err);
int cmd_complexity(const ComplexityOptions& opt, std::ostream& out,
                   std::ostream& err);

}  // namespace racegan::cli
