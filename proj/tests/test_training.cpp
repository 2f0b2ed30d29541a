#include "racegan/train/trainer.hpp"
#include "support/gradcheck.hpp"

#include <doctest.h>

#include <cmath>

using namespace racegan;
using namespace racegan::train;
using racegan::net::Mat;
using racegan::net::Vec;

namespace {

Mat<double> random_scores(Rng& rng, int rows, int cols, double lo = 0.05,
                          double hi = 0.95) {
  Mat<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(lo, hi);
  return m;
}

// all-layer-kind miniature net shared with the network tests, rebuilt here
// small enough for epoch-level experiments
net::NetworkSpec small_spec() {
  using net::Act;
  using net::LayerKind;
  using net::LayerSpec;
  net::NetworkSpec s;
  auto conv = [](int in, int out, int k, int p, bool norm, Act act,
                 int res = -1) {
    return LayerSpec{LayerKind::conv, in, out, k, 1, p, norm, act, res};
  };
  LayerSpec up;
  up.kind = LayerKind::upsample;
  up.kernel = 2;
  LayerSpec apool;
  apool.kind = LayerKind::avg_pool;
  apool.kernel = 2;
  apool.stride = 2;
  s.generator.trunk = {conv(4, 4, 3, 1, true, Act::relu),
                       conv(4, 4, 3, 1, true, Act::relu, 0)};
  s.generator.local_branch = {conv(4, 1, 1, 0, false, Act::none)};
  s.generator.global_branch = {apool, conv(4, 6, 3, 1, true, Act::relu), up,
                               conv(6, 1, 1, 0, false, Act::none)};
  s.generator.weight_head = {conv(2, 1, 1, 0, false, Act::sigmoid)};
  s.discriminator.layers = {conv(1, 4, 3, 1, false, Act::relu),
                            conv(4, 1, 3, 1, false, Act::sigmoid)};
  return s;
}

std::vector<TrainSample<float>> toy_set(int n, int h, int w,
                                        std::uint64_t seed) {
  SynthConfig cfg;
  cfg.resolution = h;
  std::vector<Sample> samples = synth_corpus(n, seed, cfg);
  return pack_train_set<float>(samples, ProposerConfig{});
}

}  // namespace

TEST_CASE("domain_loss hand values") {
  Mat<double> gen(1, 2), target(1, 2);
  gen << 0.5, 0.0;
  target << 0.0, 1.0;
  CHECK(domain_loss(gen, target) == doctest::Approx(0.625));

  Mat<double> same = target;
  CHECK(domain_loss(same, target) == doctest::Approx(0.0));

  Mat<double> one(1, 1), zero(1, 1);
  one << 1.0;
  zero << 0.0;
  CHECK(domain_loss(one, zero) == doctest::Approx(1.0));

  Mat<double> bad(2, 2);
  CHECK_THROWS_AS(domain_loss(bad, target), std::invalid_argument);
}

TEST_CASE("adversarial loss closed forms") {
  const Mat<double> half = Mat<double>::Constant(4, 4, 0.5);
  CHECK(adv_loss_discriminator(half, half) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(adv_loss_generator(half) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const Mat<double> ones = Mat<double>::Constant(4, 4, 1.0);
  const Mat<double> zeros = Mat<double>::Constant(4, 4, 0.0);
  // a perfect critic drives the loss to (numerically) zero
  CHECK(adv_loss_discriminator(ones, zeros) ==
        doctest::Approx(0.0).epsilon(1e-6));
  CHECK(adv_loss_generator(ones) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("adversarial losses are permutation invariant and monotone") {
  Rng rng(61);
  Mat<double> fake = random_scores(rng, 1, 16);
  Mat<double> real = random_scores(rng, 1, 16);
  const double base = adv_loss_discriminator(real, fake);
  // reverse both pixel orders
  Mat<double> fake_r = fake.rowwise().reverse();
  Mat<double> real_r = real.rowwise().reverse();
  CHECK(adv_loss_discriminator(real_r, fake_r) == doctest::Approx(base));

  const double g0 = adv_loss_generator(fake);
  fake(0, 3) += 0.02;  // raising any fake score lowers the generator loss
  CHECK(adv_loss_generator(fake) < g0);
}

TEST_CASE("total_generator_loss composition") {
  CHECK(total_generator_loss(0.7, 0.01, 100.0) == doctest::Approx(1.7));
  CHECK(total_generator_loss(0.3, 5.0, 0.0) == doctest::Approx(0.3));
  // linear in lambda
  const double l1 = total_generator_loss(0.2, 0.1, 10.0);
  const double l2 = total_generator_loss(0.2, 0.1, 20.0);
  const double l3 = total_generator_loss(0.2, 0.1, 30.0);
  CHECK(l3 - l2 == doctest::Approx(l2 - l1));
  CHECK(total_generator_loss(0.4, 0.2, 3.0) >= 0.4);
}

TEST_CASE("loss gradients match central differences over 50 trials") {
  Rng rng(62);
  for (int trial = 0; trial < 50; ++trial) {
    Mat<double> gen = random_scores(rng, 4, 4);
    Mat<double> target = random_scores(rng, 4, 4, 0.0, 1.0);
    Mat<double> real = random_scores(rng, 4, 4);
    Mat<double> fake = random_scores(rng, 4, 4);

    {
      const Mat<double> analytic = domain_loss_grad(gen, target);
      Vec<double> flat = Eigen::Map<Vec<double>>(gen.data(), gen.size());
      const auto loss = [&]() {
        const Mat<double> m =
            Eigen::Map<Mat<double>>(flat.data(), 4, 4);
        return domain_loss(m, target);
      };
      const auto numeric = gradcheck::central_difference(flat, loss);
      const Vec<double> a =
          Eigen::Map<const Vec<double>>(analytic.data(), analytic.size());
      CHECK(gradcheck::max_relative_error(a, numeric) < 1e-4);
    }
    {
      const auto [dreal, dfake] = adv_loss_discriminator_grad(real, fake);
      Vec<double> flat = Eigen::Map<Vec<double>>(real.data(), real.size());
      const auto loss = [&]() {
        const Mat<double> m = Eigen::Map<Mat<double>>(flat.data(), 4, 4);
        return adv_loss_discriminator(m, fake);
      };
      const auto numeric = gradcheck::central_difference(flat, loss);
      const Vec<double> a =
          Eigen::Map<const Vec<double>>(dreal.data(), dreal.size());
      CHECK(gradcheck::max_relative_error(a, numeric) < 1e-4);

      Vec<double> flat_f = Eigen::Map<Vec<double>>(fake.data(), fake.size());
      const auto loss_f = [&]() {
        const Mat<double> m = Eigen::Map<Mat<double>>(flat_f.data(), 4, 4);
        return adv_loss_discriminator(real, m);
      };
      const auto numeric_f = gradcheck::central_difference(flat_f, loss_f);
      const Vec<double> af =
          Eigen::Map<const Vec<double>>(dfake.data(), dfake.size());
      CHECK(gradcheck::max_relative_error(af, numeric_f) < 1e-4);
    }
    {
      const Mat<double> analytic = adv_loss_generator_grad(fake);
      Vec<double> flat = Eigen::Map<Vec<double>>(fake.data(), fake.size());
      const auto loss = [&]() {
        const Mat<double> m = Eigen::Map<Mat<double>>(flat.data(), 4, 4);
        return adv_loss_generator(m);
      };
      const auto numeric = gradcheck::central_difference(flat, loss);
      const Vec<double> a =
          Eigen::Map<const Vec<double>>(analytic.data(), analytic.size());
      CHECK(gradcheck::max_relative_error(a, numeric) < 1e-4);
    }
  }
}

TEST_CASE("train_epoch runs, logs history, and is deterministic") {
  const auto set = toy_set(8, 32, 32, 900);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.epochs = 2;
  cfg.seed = 5;

  TrainState<float> a(small_spec(), cfg, 32, 32);
  TrainState<float> b(small_spec(), cfg, 32, 32);
  for (int e = 0; e < 2; ++e) {
    train_epoch(a, set, cfg);
    train_epoch(b, set, cfg);
  }
  REQUIRE(a.history.size() == 2);
  CHECK(a.epoch == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::isfinite(a.history[i].l_total));
    CHECK(a.history[i].l_adv_g == b.history[i].l_adv_g);
    CHECK(a.history[i].l_adv_d == b.history[i].l_adv_d);
    CHECK(a.history[i].l_domain == b.history[i].l_domain);
    CHECK(a.history[i].d_accuracy == b.history[i].d_accuracy);
    CHECK(a.history[i].d_accuracy >= 0.0);
    CHECK(a.history[i].d_accuracy <= 1.0);
  }
  CHECK(a.model.generator.params().flat == b.model.generator.params().flat);
  CHECK(a.model.discriminator.params().flat ==
        b.model.discriminator.params().flat);
}

TEST_CASE("zero learning rate freezes the corresponding network") {
  // the config validator wants positive rates for real runs; the frozen-side
  // contract is exercised with a rate of exactly zero
  const auto set = toy_set(4, 32, 32, 901);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.lr_generator = 0.0;
  cfg.lr_discriminator = 0.0;
  TrainState<float> state(small_spec(), cfg, 32, 32);
  const Vec<float> g0 = state.model.generator.params().flat;
  const Vec<float> d0 = state.model.discriminator.params().flat;
  train_epoch(state, set, cfg);
  CHECK(state.model.generator.params().flat == g0);
  CHECK(state.model.discriminator.params().flat == d0);
}

TEST_CASE("discriminator step leaves generator parameters alone and vice versa") {
  const auto set = toy_set(4, 32, 32, 902);
  TrainConfig cfg;
  cfg.batch_size = 4;

  cfg.lr_generator = 0.0;
  cfg.lr_discriminator = 2e-4;
  TrainState<float> s1(small_spec(), cfg, 32, 32);
  const Vec<float> g0 = s1.model.generator.params().flat;
  const Vec<float> d_init = s1.model.discriminator.params().flat;
  train_epoch(s1, set, cfg);
  CHECK(s1.model.generator.params().flat == g0);
  CHECK_FALSE(s1.model.discriminator.params().flat == d_init);

  cfg.lr_generator = 2e-4;
  cfg.lr_discriminator = 0.0;
  TrainState<float> s2(small_spec(), cfg, 32, 32);
  const Vec<float> d0 = s2.model.discriminator.params().flat;
  train_epoch(s2, set, cfg);
  CHECK(s2.model.discriminator.params().flat == d0);
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
  const auto set = toy_set(4, 32, 32, 903);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.lambda = 1e39;  // overflows float, poisoning l_total
  TrainState<float> state(small_spec(), cfg, 32, 32);
  CHECK_THROWS_AS(train_epoch(state, set, cfg), TrainAbortError);
}

TEST_CASE("equilibrium_report band logic") {
  const auto mk = [](std::vector<double> accs) {
    std::vector<EpochStats> h;
    for (double a : accs) {
      EpochStats s;
      s.d_accuracy = a;
      h.push_back(s);
    }
    return h;
  };

  CHECK(equilibrium_report(mk({0.5, 0.5, 0.5, 0.5}), 0.15).pass);
  CHECK_FALSE(equilibrium_report(mk({1.0, 1.0, 1.0, 1.0}), 0.15).pass);

  // single epoch: the final quarter is that epoch
  const auto single = equilibrium_report(mk({0.62}), 0.15);
  CHECK(single.final_quarter_start == 0);
  CHECK(single.pass);

  // early chaos is forgiven, late drift is not
  CHECK(equilibrium_report(mk({0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.5, 0.5}), 0.15)
            .pass);
  CHECK_FALSE(
      equilibrium_report(mk({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.7}), 0.15)
          .pass);

  // band edges are inclusive
  CHECK(equilibrium_report(mk({0.65, 0.35}), 0.15).pass);

  CHECK_THROWS_AS(equilibrium_report({}, 0.15), std::invalid_argument);
}

TEST_CASE("history CSV has the documented column order") {
  std::vector<EpochStats> h(1);
  h[0].l_adv_g = 1;
  h[0].l_adv_d = 2;
  h[0].l_domain = 3;
  h[0].l_total = 4;
  h[0].d_accuracy = 0.5;
  const std::string csv = history_csv(h);
  CHECK(csv.rfind("epoch,l_adv_g,l_adv_d,l_domain,l_total,d_accuracy\n", 0) ==
        0);
  CHECK(csv.find("0,1,2,3,4,0.5\n") != std::string::npos);
}

TEST_CASE("image-conditioned critic variant trains when the flag is set") {
  const auto set = toy_set(4, 32, 32, 904);
  net::NetworkSpec spec = small_spec();
  spec.discriminator.condition_on_image = true;
  spec.discriminator.layers[0].in_ch = 4;
  TrainConfig cfg;
  cfg.batch_size = 2;
  TrainState<float> state(spec, cfg, 32, 32);
  train_epoch(state, set, cfg);
  CHECK(std::isfinite(state.history.back().l_total));
  CHECK(state.history.back().d_accuracy >= 0.0);
}

TEST_CASE("TrainConfig validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.require_valid());
  cfg.lambda = -1;
  CHECK_THROWS_AS(cfg.require_valid(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.equilibrium_band = 0.5;
  CHECK_THROWS_AS(cfg.require_valid(), std::invalid_argument);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.require_valid(), std::invalid_argument);
}
