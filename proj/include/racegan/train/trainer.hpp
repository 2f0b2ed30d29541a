#pragma once

#include "racegan/config.hpp"
#include "racegan/dataset.hpp"
#include "racegan/net/model.hpp"
#include "racegan/proposer.hpp"
#include "racegan/train/adam.hpp"
#include "racegan/train/losses.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace racegan::train {

using racegan::net::Batch;
using racegan::net::Model;
using racegan::net::NetParams;

struct TrainConfig {
  double lambda = 100.0;
  double lr_generator = 2e-4;
  double lr_discriminator = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 2;
  int epochs = 16;
  std::uint64_t seed = 42;
  double equilibrium_band = 0.15;

  void require_valid() const {
    if (lambda < 0) throw std::invalid_argument("train: lambda must be >= 0");
    // zero is allowed so one side can be frozen outright
    if (lr_generator < 0 || lr_discriminator < 0)
      throw std::invalid_argument("train: learning rates must be >= 0");
    if (batch_size < 1 || epochs < 1)
      throw std::invalid_argument("train: batch_size and epochs must be >= 1");
    if (equilibrium_band <= 0 || equilibrium_band >= 0.5)
      throw std::invalid_argument("train: equilibrium_band outside (0,0.5)");
  }
};

inline TrainConfig train_config_from(const Config& cfg) {
  TrainConfig t;
  t.lambda = cfg.get_double("train.lambda", t.lambda);
  t.lr_generator = cfg.get_double("train.lr_generator", t.lr_generator);
  t.lr_discriminator =
      cfg.get_double("train.lr_discriminator", t.lr_discriminator);
  t.beta1 = cfg.get_double("train.beta1", t.beta1);
  t.beta2 = cfg.get_double("train.beta2", t.beta2);
  t.batch_size = cfg.get_int("train.batch_size", t.batch_size);
  t.epochs = cfg.get_int("train.epochs", t.epochs);
  t.seed = cfg.get_u64("train.seed", t.seed);
  t.equilibrium_band = cfg.get_double("train.equilibrium_band", t.equilibrium_band);
  t.require_valid();
  return t;
}

struct EpochStats {
  double l_adv_g = 0, l_adv_d = 0, l_domain = 0, l_total = 0, d_accuracy = 0;
};

/// Raised when a loss stops being finite; carries a human-readable snapshot
/// of the offending batch.
struct TrainAbortError : std::runtime_error {
  explicit TrainAbortError(const std::string& what) : std::runtime_error(what) {}
};

/// Sample pre-packed for the nets: generator input channels plus target row.
template <class S>
struct TrainSample {
  Mat<S> input;   // (4, H*W): r, g, b, initial guess
  Mat<S> target;  // (1, H*W)
};

template <class S>
TrainSample<S> pack_train_sample(const Sample& sample,
                                 const ProposerConfig& proposer_cfg) {
  RasterImage<S> img;
  img.mode = sample.image.mode;
  img.r = sample.image.r.template cast<S>();
  img.g = sample.image.g.template cast<S>();
  img.b = sample.image.b.template cast<S>();
  const ProbMask<S> guess = initial_guess(img, proposer_cfg);
  const Batch<S> in = net::pack_generator_input(img, guess);
  TrainSample<S> out;
  out.input = in.data;
  const int h = static_cast<int>(sample.mask.rows());
  const int w = static_cast<int>(sample.mask.cols());
  out.target.resize(1, static_cast<Eigen::Index>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.target(0, static_cast<Eigen::Index>(y) * w + x) =
          sample.mask(y, x) ? S(1) : S(0);
  return out;
}

template <class S>
std::vector<TrainSample<S>> pack_train_set(const std::vector<Sample>& samples,
                                           const ProposerConfig& proposer_cfg) {
  std::vector<TrainSample<S>> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(pack_train_sample<S>(s, proposer_cfg));
  return out;
}

template <class S>
struct TrainState {
  Model<S> model;
  int epoch = 0;
  std::vector<EpochStats> history;
  Adam<S> opt_generator;
  Adam<S> opt_discriminator;
  Rng rng;
  int image_height = 0, image_width = 0;

  TrainState(net::NetworkSpec spec, const TrainConfig& cfg, int height,
             int width)
      : model(std::move(spec), cfg.seed), rng(cfg.seed ^ 0x5851f42d4c957f2dull) {
    net::validate(model.spec, height, width);
    image_height = height;
    image_width = width;
    opt_generator = Adam<S>(static_cast<S>(cfg.lr_generator),
                            static_cast<S>(cfg.beta1), static_cast<S>(cfg.beta2),
                            model.generator.params().flat.size());
    opt_discriminator = Adam<S>(static_cast<S>(cfg.lr_discriminator),
                                static_cast<S>(cfg.beta1),
                                static_cast<S>(cfg.beta2),
                                model.discriminator.params().flat.size());
  }
};

/// One pass over the training set: per batch, a discriminator step on the
/// adversarial loss with the generator frozen, then a generator step on
/// adv + lambda*domain with the discriminator frozen. Discriminator accuracy
/// is the fraction of pixel scores on the correct side of 0.5 in the
/// discriminator-step forward passes.
template <class S>
void train_epoch(TrainState<S>& state, const std::vector<TrainSample<S>>& set,
                 const TrainConfig& cfg) {
  cfg.require_valid();
  if (set.empty()) throw std::invalid_argument("train_epoch: empty train set");
  const int h = state.image_height, w = state.image_width;
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;

  std::vector<std::size_t> order(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  state.rng.shuffle(order);

  auto& gen = state.model.generator;
  auto& disc = state.model.discriminator;
  NetParams<S> g_grads, d_grads;
  g_grads.layout = gen.params().layout;
  d_grads.layout = disc.params().layout;

  double sum_adv_g = 0, sum_adv_d = 0, sum_domain = 0, sum_total = 0;
  std::int64_t correct_pixels = 0, scored_pixels = 0;
  std::size_t n_batches = 0, consumed = 0;

  while (consumed < order.size()) {
    const int bsz = static_cast<int>(
        std::min<std::size_t>(cfg.batch_size, order.size() - consumed));
    Batch<S> input = Batch<S>::zeros(4, h, w, bsz);
    Batch<S> target = Batch<S>::zeros(1, h, w, bsz);
    for (int b = 0; b < bsz; ++b) {
      const TrainSample<S>& ts = set[order[consumed + static_cast<std::size_t>(b)]];
      input.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw) = ts.input;
      target.data.middleCols(static_cast<Eigen::Index>(b) * hw, hw) = ts.target;
    }
    consumed += static_cast<std::size_t>(bsz);

    // generator forward once; the fake batch serves both steps
    typename net::Generator<S>::Trace g_trace;
    Batch<S> fake = gen.forward(input, true, &g_trace);

    // mask-only critic by default; the conditioned variant stacks the RGB
    // channels under the mask
    const bool conditioned = state.model.spec.discriminator.condition_on_image;
    const auto disc_input = [&](const Batch<S>& mask_batch) {
      if (!conditioned) return mask_batch;
      Batch<S> stacked = Batch<S>::zeros(4, h, w, mask_batch.count);
      stacked.data.topRows(3) = input.data.topRows(3);
      stacked.data.row(3) = mask_batch.data.row(0);
      return stacked;
    };

    // discriminator step (generator frozen; fake enters as a constant)
    net::SeqCache<S> d_real_cache, d_fake_cache;
    Batch<S> real_scores = disc.forward(disc_input(target), true, &d_real_cache);
    Batch<S> fake_scores = disc.forward(disc_input(fake), true, &d_fake_cache);
    const S l_adv_d = adv_loss_discriminator(real_scores.data, fake_scores.data);
    correct_pixels += (real_scores.data.array() > S(0.5)).count();
    correct_pixels += (fake_scores.data.array() < S(0.5)).count();
    scored_pixels += real_scores.data.size() + fake_scores.data.size();

    d_grads.flat.setZero(disc.params().flat.size());
    auto [dreal, dfake] =
        adv_loss_discriminator_grad(real_scores.data, fake_scores.data);
    Batch<S> dreal_b = real_scores;
    dreal_b.data = std::move(dreal);
    Batch<S> dfake_b = fake_scores;
    dfake_b.data = std::move(dfake);
    disc.backward(d_real_cache, dreal_b, &d_grads, false);
    disc.backward(d_fake_cache, dfake_b, &d_grads, false);
    state.opt_discriminator.step(disc.params().flat, d_grads.flat);

    // generator step against the updated critic (discriminator frozen)
    net::SeqCache<S> d_gen_cache;
    Batch<S> gen_scores = disc.forward(disc_input(fake), true, &d_gen_cache);
    const S l_adv_g = adv_loss_generator(gen_scores.data);
    const S l_domain = domain_loss(fake.data, target.data);
    const S l_total =
        total_generator_loss(l_adv_g, l_domain, static_cast<S>(cfg.lambda));

    Batch<S> dscores = gen_scores;
    dscores.data = adv_loss_generator_grad(gen_scores.data);
    Batch<S> dinput_adv = disc.backward(d_gen_cache, dscores, nullptr, true);
    Batch<S> dfake_total = fake;
    // only the mask row reaches the generator in the conditioned variant
    dfake_total.data = conditioned ? dinput_adv.data.bottomRows(1)
                                   : std::move(dinput_adv.data);
    dfake_total.data +=
        static_cast<S>(cfg.lambda) * domain_loss_grad(fake.data, target.data);

    g_grads.flat.setZero(gen.params().flat.size());
    gen.backward(g_trace, dfake_total, g_grads);
    state.opt_generator.step(gen.params().flat, g_grads.flat);

    if (!std::isfinite(static_cast<double>(l_adv_d)) ||
        !std::isfinite(static_cast<double>(l_total))) {
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "non-finite loss at epoch %d batch %zu: "
                    "l_adv_d=%g l_adv_g=%g l_domain=%g l_total=%g",
                    state.epoch, n_batches, static_cast<double>(l_adv_d),
                    static_cast<double>(l_adv_g), static_cast<double>(l_domain),
                    static_cast<double>(l_total));
      throw TrainAbortError(buf);
    }

    sum_adv_g += static_cast<double>(l_adv_g);
    sum_adv_d += static_cast<double>(l_adv_d);
    sum_domain += static_cast<double>(l_domain);
    sum_total += static_cast<double>(l_total);
    ++n_batches;
  }

  EpochStats stats;
  stats.l_adv_g = sum_adv_g / static_cast<double>(n_batches);
  stats.l_adv_d = sum_adv_d / static_cast<double>(n_batches);
  stats.l_domain = sum_domain / static_cast<double>(n_batches);
  stats.l_total = sum_total / static_cast<double>(n_batches);
  stats.d_accuracy = static_cast<double>(correct_pixels) /
                     static_cast<double>(scored_pixels);
  state.history.push_back(stats);
  ++state.epoch;
}

struct EquilibriumReport {
  std::vector<double> accuracy;   // per epoch
  std::vector<bool> in_band;      // per epoch
  double band = 0.15;
  int final_quarter_start = 0;
  bool pass = false;

  std::string to_text() const;
};

/// Pass iff every epoch accuracy in the final quarter of training (at least
/// one epoch) lies within 0.5 +/- band.
inline EquilibriumReport equilibrium_report(const std::vector<EpochStats>& history,
                                            double band) {
  if (history.empty())
    throw std::invalid_argument("equilibrium_report: no completed epochs");
  EquilibriumReport r;
  r.band = band;
  const int n = static_cast<int>(history.size());
  const int quarter = std::max(1, (n + 3) / 4);
  r.final_quarter_start = n - quarter;
  r.pass = true;
  for (int i = 0; i < n; ++i) {
    const double acc = history[static_cast<std::size_t>(i)].d_accuracy;
    const bool ok = std::abs(acc - 0.5) <= band + 1e-12;  // inclusive edges
    r.accuracy.push_back(acc);
    r.in_band.push_back(ok);
    if (i >= r.final_quarter_start && !ok) r.pass = false;
  }
  return r;
}

inline std::string EquilibriumReport::to_text() const {
  std::string out =
      "epoch,d_accuracy,in_band,in_final_quarter\n";
  char buf[96];
  for (std::size_t i = 0; i < accuracy.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%d,%d\n", i, accuracy[i],
                  in_band[i] ? 1 : 0,
                  static_cast<int>(i) >= final_quarter_start ? 1 : 0);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "final quarter (epochs %d..%zu) within 0.5 +/- %.2f: %s\n",
                final_quarter_start, accuracy.size() - 1, band,
                pass ? "PASS" : "FAIL");
  out += buf;
  return out;
}

inline std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,l_adv_g,l_adv_d,l_domain,l_total,d_accuracy\n";
  char buf[160];
  for (std::size_t i = 0; i < history.size(); ++i) {
    const EpochStats& s = history[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g\n", i,
                  s.l_adv_g, s.l_adv_d, s.l_domain, s.l_total, s.d_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace racegan::train
