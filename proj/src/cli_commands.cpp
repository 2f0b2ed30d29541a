#include "racegan/cli.hpp"

#include "racegan/checkpoint.hpp"
#include "racegan/complexity.hpp"
#include "racegan/config.hpp"
#include "racegan/dataset.hpp"
#include "racegan/image_io.hpp"
#include "racegan/metrics.hpp"
#include "racegan/morphology.hpp"
#include "racegan/net/model.hpp"
#include "racegan/proposer.hpp"
#include "racegan/train/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

namespace racegan::cli {

namespace fs = std::filesystem;

namespace {

Config effective_config(const GlobalOptions& g) {
  Config cfg;
  if (g.config_path) cfg = Config::load(*g.config_path);
  if (g.seed) cfg.set("train.seed", std::to_string(*g.seed));
  if (g.deterministic) {
    cfg.set("run.deterministic", "1");
    if (!g.seed && !cfg.has("train.seed"))
      throw std::runtime_error("--deterministic requires a seed");
  }
  return cfg;
}

ProposerConfig proposer_config_from(const Config& cfg) {
  ProposerConfig p;
  p.kernel_small = cfg.get_int("proposer.kernel_small", p.kernel_small);
  p.kernel_large = cfg.get_int("proposer.kernel_large", p.kernel_large);
  p.variance_threshold =
      cfg.get_double("proposer.variance_threshold", p.variance_threshold);
  p.dark_quantile = cfg.get_double("proposer.dark_quantile", p.dark_quantile);
  p.blend = cfg.get_double("proposer.blend", p.blend);
  p.require_valid();
  return p;
}

PostprocessConfig post_config_from(const Config& cfg) {
  PostprocessConfig p;
  p.binarize_threshold =
      cfg.get_double("post.binarize_threshold", p.binarize_threshold);
  p.min_component_size =
      cfg.get_int("post.min_component_size", p.min_component_size);
  p.connectivity = cfg.get_int("post.connectivity", p.connectivity);
  if (cfg.has("post.element"))
    p.element = parse_element(cfg.get_str("post.element", ""));
  else
    p.element = StructuringElement::box(cfg.get_int("post.element_size", 3));
  p.require_valid();
  return p;
}

void write_text_file(const fs::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  os << text;
}

std::map<std::string, fs::path> list_pngs(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg")
      out[e.path().stem().string()] = e.path();
  }
  return out;
}

}  // namespace

int cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.count < 1) {
      err << "synth: --n must be >= 1\n";
      return 2;
    }
    const Config cfg = effective_config(opt.global);
    const SynthConfig synth_cfg = synth_config_from(cfg);
    const std::uint64_t seed = cfg.get_u64("train.seed", 42);

    fs::create_directories(opt.out_dir / "images");
    fs::create_directories(opt.out_dir / "masks");

    std::string tags_csv;
    for (int i = 0; i < opt.count; ++i) {
      const Sample s = synth_scene(seed + static_cast<std::uint64_t>(i), synth_cfg);
      save_png(opt.out_dir / "images" / (s.name + ".png"), s.image);
      save_mask_png(opt.out_dir / "masks" / (s.name + ".png"), s.mask);
      tags_csv += s.name + ".png,";
      bool first = true;
      for (ScenarioTag t : s.tags) {
        if (!first) tags_csv += ";";
        tags_csv += to_string(t);
        first = false;
      }
      tags_csv += "\n";
    }
    write_text_file(opt.out_dir / "tags.csv", tags_csv);

    std::ostringstream manifest;
    manifest << "n = " << opt.count << "\n"
             << "seed = " << seed << "\n"
             << "resolution = " << synth_cfg.resolution << "\n"
             << "config_hash = " << cfg.hash() << "\n";
    write_text_file(opt.out_dir / "manifest.txt", manifest.str());
    out << "wrote " << opt.count << " samples to " << opt.out_dir.string()
        << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "synth: " << e.what() << "\n";
    return 1;
  }
}

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const Config cfg = effective_config(opt.global);
    const train::TrainConfig tcfg = train::train_config_from(cfg);
    const ProposerConfig pcfg = proposer_config_from(cfg);
    const double ratio = cfg.get_double("train.split_ratio", 0.8);

    const LoadReport report = load_corpus(opt.data_dir);
    for (const std::string& m : report.unmatched_masks)
      err << "warning: mask without image: " << m << "\n";
    if (report.samples.empty()) {
      err << "train: no samples found under " << opt.data_dir.string() << "\n";
      return 1;
    }
    const int h = static_cast<int>(report.samples.front().image.height());
    const int w = static_cast<int>(report.samples.front().image.width());

    CorpusSplit corpus = split(report.samples, ratio, tcfg.seed);
    out << "corpus: " << corpus.train.size() << " train / "
        << corpus.test.size() << " test at " << h << "x" << w << "\n";

    const auto train_set = train::pack_train_set<float>(corpus.train, pcfg);

    fs::create_directories(opt.out_dir);
    train::TrainState<float> state(net::default_network_spec(), tcfg, h, w);

    try {
      for (int e = 0; e < tcfg.epochs; ++e) {
        train::train_epoch(state, train_set, tcfg);
        const train::EpochStats& s = state.history.back();
        char line[192];
        std::snprintf(line, sizeof(line),
                      "epoch %3d  l_total %.4f  l_domain %.4f  l_adv_g %.4f  "
                      "l_adv_d %.4f  d_acc %.3f\n",
                      e, s.l_total, s.l_domain, s.l_adv_g, s.l_adv_d,
                      s.d_accuracy);
        out << line;
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_epoch_%03d.rgck", e);
        Checkpoint::from_model(state.model, cfg.hash()).save(opt.out_dir / name);
      }
    } catch (const train::TrainAbortError& abort) {
      write_text_file(opt.out_dir / "diagnostic_snapshot.txt",
                      std::string(abort.what()) + "\n");
      Checkpoint::from_model(state.model, cfg.hash())
          .save(opt.out_dir / "checkpoint_aborted.rgck");
      err << "train: " << abort.what() << "\n";
      return 1;
    }

    Checkpoint::from_model(state.model, cfg.hash())
        .save(opt.out_dir / "checkpoint.rgck");
    write_text_file(opt.out_dir / "history.csv",
                    train::history_csv(state.history));
    const auto eq = train::equilibrium_report(state.history,
                                              tcfg.equilibrium_band);
    write_text_file(opt.out_dir / "equilibrium.txt", eq.to_text());
    out << "equilibrium: " << (eq.pass ? "PASS" : "FAIL") << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << "\n";
    return 1;
  }
}

int cmd_infer(const InferOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const Config cfg = effective_config(opt.global);
    const ProposerConfig pcfg = proposer_config_from(cfg);
    const PostprocessConfig post_cfg = post_config_from(cfg);

    const Checkpoint ckpt = Checkpoint::load(opt.checkpoint);
    net::Model<float> model = ckpt.to_model();

    const auto images = list_pngs(opt.images_dir);
    if (images.empty()) {
      err << "infer: no images under " << opt.images_dir.string() << "\n";
      return 1;
    }
    fs::create_directories(opt.out_dir);
    for (const auto& [stem, path] : images) {
      const RasterImage<float> img = load_image(path);
      const ProbMask<float> guess = initial_guess(img, pcfg);
      const ProbMask<float> prob =
          net::generator_forward(img, guess, model.generator);
      save_gray_png(opt.out_dir / ("raw_" + stem + ".png"), prob);
      BinaryMask final_mask;
      if (opt.postprocess) {
        final_mask = postprocess(prob, post_cfg);
        save_mask_png(opt.out_dir / ("post_" + stem + ".png"), final_mask);
      } else {
        final_mask = binarize(prob, post_cfg.binarize_threshold);
      }
      const RasterImage<float> shown =
          overlay(img, final_mask, {255, 0, 0}, 0.45);
      save_png(opt.out_dir / ("overlay_" + stem + ".png"), shown);
    }
    out << "infer: processed " << images.size() << " images\n";
    return 0;
  } catch (const std::exception& e) {
    err << "infer: " << e.what() << "\n";
    return 1;
  }
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.mode != "micro" && opt.mode != "macro") {
      err << "eval: mode must be micro or macro\n";
      return 2;
    }
    const auto preds = list_pngs(opt.pred_dir);
    const auto labels = list_pngs(opt.label_dir);
    if (preds.empty() || labels.empty()) {
      err << "eval: empty prediction or label directory\n";
      return 1;
    }
    std::vector<std::string> unmatched;
    for (const auto& [stem, p] : preds)
      if (!labels.count(stem)) unmatched.push_back(p.filename().string());
    for (const auto& [stem, p] : labels)
      if (!preds.count(stem)) unmatched.push_back(p.filename().string());
    if (!unmatched.empty()) {
      err << "eval: unmatched mask names:";
      for (const auto& u : unmatched) err << " " << u;
      err << "\n";
      return 1;
    }
    std::vector<std::pair<BinaryMask, BinaryMask>> pairs;
    pairs.reserve(preds.size());
    for (const auto& [stem, p] : preds)
      pairs.emplace_back(load_mask_png(p), load_mask_png(labels.at(stem)));
    const MetricsReport r = corpus_eval(
        pairs, opt.mode == "micro" ? Aggregation::micro : Aggregation::macro);
    out << metrics_table(r);
    out << metrics_csv_header() << "\n" << metrics_csv_row(r) << "\n";
    if (opt.csv_out)
      write_text_file(*opt.csv_out,
                      metrics_csv_header() + "\n" + metrics_csv_row(r) + "\n");
    return 0;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << "\n";
    return 1;
  }
}

int cmd_overlay(const OverlayOptions& opt, std::ostream& out,
                std::ostream& err) {
  try {
    const RasterImage<float> img = load_image(opt.image);
    const BinaryMask mask = load_mask_png(opt.mask);
    const RasterImage<float> shown = overlay(img, mask, {255, 0, 0}, opt.alpha);
    save_png(opt.out_file, shown);
    out << "wrote " << opt.out_file.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "overlay: " << e.what() << "\n";
    return 1;
  }
}

int cmd_complexity(const ComplexityOptions& opt, std::ostream& out,
                   std::ostream& err) {
  try {
    net::NetworkSpec spec;
    if (opt.spec_path) {
      std::ifstream is(*opt.spec_path);
      if (!is)
        throw std::runtime_error("cannot open spec: " + opt.spec_path->string());
      std::ostringstream ss;
      ss << is.rdbuf();
      spec = net::parse_network_spec(ss.str());
    } else {
      spec = net::default_network_spec();
    }
    net::validate(spec, opt.height, opt.width);

    const auto g_params = net::count_params(spec.generator);
    const auto d_params = net::count_params(spec.discriminator);
    const auto g_flops = net::count_flops(spec.generator, opt.height, opt.width);
    const auto d_flops =
        net::count_flops(spec.discriminator, opt.height, opt.width);

    net::Model<float> model(spec, /*seed=*/0);
    const InferenceTiming timing =
        measure_inference_ms(model.generator, opt.height, opt.width, opt.trials);

    char buf[256];
    out << "complexity at " << opt.height << "x" << opt.width << "\n";
    std::snprintf(buf, sizeof(buf), "%-14s %12s %12s %14s\n", "component",
                  "FLOPs (G)", "Params (M)", "Inf. Time (ms)");
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-14s %12.4f %12.4f %14.3f\n", "generator",
                  static_cast<double>(g_flops) * 1e-9,
                  static_cast<double>(g_params) * 1e-6, timing.median_ms);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%-14s %12.4f %12.4f %14s\n",
                  "discriminator", static_cast<double>(d_flops) * 1e-9,
                  static_cast<double>(d_params) * 1e-6, "-");
    out << buf;
    out << "median of " << timing.trials << " trials on " << timing.hardware
        << "\n\n";

    out << "published reference figures (RaceGAN benchmark, for context "
           "only):\n";
    std::snprintf(buf, sizeof(buf), "%-14s %12s %12s %14s\n", "method",
                  "FLOPs (G)", "Params (M)", "Inf. Time (ms)");
    out << buf;
    for (const auto& row : published_complexity_reference()) {
      std::snprintf(buf, sizeof(buf), "%-14s %12s %12s %14s\n", row.method,
                    row.flops_g, row.params_m, row.inf_ms);
      out << buf;
    }

    if (opt.csv_out) {
      std::ostringstream csv;
      csv << "component,flops_g,params_m,inf_time_ms\n";
      csv << "generator," << static_cast<double>(g_flops) * 1e-9 << ","
          << static_cast<double>(g_params) * 1e-6 << "," << timing.median_ms
          << "\n";
      csv << "discriminator," << static_cast<double>(d_flops) * 1e-9 << ","
          << static_cast<double>(d_params) * 1e-6 << ",\n";
      write_text_file(*opt.csv_out, csv.str());
    }
    return 0;
  } catch (const std::exception& e) {
    err << "complexity: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace racegan::cli
