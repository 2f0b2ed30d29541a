#pragma once

#include "racegan/net/params.hpp"

#include <cmath>

namespace racegan::train {

using racegan::net::Vec;

/// Adaptive-moment gradient descent over a flat parameter vector.
template <class S>
class Adam {
 public:
  Adam() = default;

  Adam(S lr, S beta1, S beta2, Eigen::Index size, S eps = S(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_ = Vec<S>::Zero(size);
    v_ = Vec<S>::Zero(size);
  }

  void step(Vec<S>& params, const Vec<S>& grads) {
    ++t_;
    m_ = beta1_ * m_ + (S(1) - beta1_) * grads;
    v_ = beta2_ * v_ + (S(1) - beta2_) * grads.array().square().matrix();
    const S bc1 = S(1) - std::pow(beta1_, static_cast<S>(t_));
    const S bc2 = S(1) - std::pow(beta2_, static_cast<S>(t_));
    params.array() -= lr_ * (m_.array() / bc1) /
                      ((v_.array() / bc2).sqrt() + eps_);
  }

  long long steps() const { return t_; }
  S learning_rate() const { return lr_; }

 private:
  S lr_ = S(2e-4), beta1_ = S(0.5), beta2_ = S(0.999), eps_ = S(1e-8);
  long long t_ = 0;
  Vec<S> m_, v_;
};

}  // namespace racegan::train
