#pragma once

#include "racegan/net/params.hpp"

#include <stdexcept>

namespace racegan::train {

using racegan::net::Mat;

/// Scores are clamped to [kScoreEps, 1-kScoreEps] before any log; gradients
/// are zero where the clamp is active.
constexpr double kScoreEps = 1e-7;

/// Mean squared per-pixel difference between generated and target masks.
template <class S>
S domain_loss(const Mat<S>& generated, const Mat<S>& target) {
  if (generated.rows() != target.rows() || generated.cols() != target.cols())
    throw std::invalid_argument("domain_loss: dimension mismatch");
  return (generated - target).array().square().mean();
}

template <class S>
Mat<S> domain_loss_grad(const Mat<S>& generated, const Mat<S>& target) {
  const S n = static_cast<S>(generated.size());
  return (S(2) / n) * (generated - target);
}

namespace detail {
template <class S>
Mat<S> clamped(const Mat<S>& scores) {
  return scores.array()
      .max(S(kScoreEps))
      .min(S(1) - S(kScoreEps))
      .matrix();
}
template <class S>
Mat<S> clamp_mask(const Mat<S>& scores) {
  return ((scores.array() > S(kScoreEps)) &&
          (scores.array() < S(1) - S(kScoreEps)))
      .template cast<S>()
      .matrix();
}
}  // namespace detail

/// Critic objective: mean of -log(real) and mean of -log(1-fake), averaged
/// over the two terms.
template <class S>
S adv_loss_discriminator(const Mat<S>& real_scores, const Mat<S>& fake_scores) {
  const Mat<S> real = detail::clamped(real_scores);
  const Mat<S> fake = detail::clamped(fake_scores);
  const S real_term = -real.array().log().mean();
  const S fake_term = -(S(1) - fake.array()).log().mean();
  return S(0.5) * (real_term + fake_term);
}

template <class S>
std::pair<Mat<S>, Mat<S>> adv_loss_discriminator_grad(
    const Mat<S>& real_scores, const Mat<S>& fake_scores) {
  const Mat<S> real = detail::clamped(real_scores);
  const Mat<S> fake = detail::clamped(fake_scores);
  const S nr = static_cast<S>(real.size());
  const S nf = static_cast<S>(fake.size());
  Mat<S> dreal =
      (-S(0.5) / nr) * real.array().inverse().matrix();
  Mat<S> dfake =
      (S(0.5) / nf) * (S(1) - fake.array()).inverse().matrix();
  dreal.array() *= detail::clamp_mask(real_scores).array();
  dfake.array() *= detail::clamp_mask(fake_scores).array();
  return {std::move(dreal), std::move(dfake)};
}

/// Non-saturating generator objective: mean of -log(fake).
template <class S>
S adv_loss_generator(const Mat<S>& fake_scores) {
  return -detail::clamped(fake_scores).array().log().mean();
}

template <class S>
Mat<S> adv_loss_generator_grad(const Mat<S>& fake_scores) {
  const Mat<S> fake = detail::clamped(fake_scores);
  const S n = static_cast<S>(fake.size());
  Mat<S> g = (-S(1) / n) * fake.array().inverse().matrix();
  g.array() *= detail::clamp_mask(fake_scores).array();
  return g;
}

template <class S>
S total_generator_loss(S adv, S domain, S lambda) {
  return adv + lambda * domain;
}

}  // namespace racegan::train
