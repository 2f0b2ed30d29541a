#pragma once

#include "racegan/net/spec.hpp"
#include "racegan/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace racegan::net {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatMap = Eigen::Map<Mat<S>>;
template <class S>
using VecMap = Eigen::Map<Vec<S>>;
template <class S>
using CMatMap = Eigen::Map<const Mat<S>>;
template <class S>
using CVecMap = Eigen::Map<const Vec<S>>;

/// Byte offsets of one layer's tensors inside the flat parameter vector.
/// Weight layout: (out_ch, in_ch*k*k) for conv, (in_ch, out_ch*k*k) for
/// transpose conv (the reverse-direction conv weight).
struct LayerSlots {
  std::int64_t weight = -1;
  int weight_rows = 0, weight_cols = 0;
  std::int64_t bias = -1;
  std::int64_t gamma = -1, beta = -1;   // in the trainable vector
  std::int64_t run_mean = -1, run_var = -1;  // in the running-stats vector
  int norm_ch = 0;
};

/// Maps a set of layer sequences onto one flat trainable vector plus one
/// flat running-statistics vector (batch-norm inference state).
class ParamLayout {
 public:
  ParamLayout() = default;

  explicit ParamLayout(const std::vector<const LayerSeq*>& seqs) {
    std::int64_t off = 0, run_off = 0;
    for (const LayerSeq* seq : seqs) {
      std::vector<LayerSlots> slots(seq->size());
      for (std::size_t i = 0; i < seq->size(); ++i) {
        const LayerSpec& l = (*seq)[i];
        LayerSlots& s = slots[i];
        if (l.has_weights()) {
          if (l.kind == LayerKind::conv) {
            s.weight_rows = l.out_ch;
            s.weight_cols = l.in_ch * l.kernel * l.kernel;
          } else {
            s.weight_rows = l.in_ch;
            s.weight_cols = l.out_ch * l.kernel * l.kernel;
          }
          s.weight = off;
          off += static_cast<std::int64_t>(s.weight_rows) * s.weight_cols;
          s.bias = off;
          off += l.out_ch;
        }
        if (l.norm) {
          s.norm_ch = l.out_ch;
          s.gamma = off;
          off += l.out_ch;
          s.beta = off;
          off += l.out_ch;
          s.run_mean = run_off;
          run_off += l.out_ch;
          s.run_var = run_off;
          run_off += l.out_ch;
        }
      }
      slots_.push_back(std::move(slots));
    }
    trainable_size_ = off;
    running_size_ = run_off;
  }

  std::int64_t trainable_size() const { return trainable_size_; }
  std::int64_t running_size() const { return running_size_; }
  const LayerSlots& slot(std::size_t seq, std::size_t layer) const {
    return slots_[seq][layer];
  }

 private:
  std::vector<std::vector<LayerSlots>> slots_;
  std::int64_t trainable_size_ = 0;
  std::int64_t running_size_ = 0;
};

template <class S>
struct NetParams {
  ParamLayout layout;
  Vec<S> flat;     // trainable
  Vec<S> running;  // batch-norm running mean/var, not trainable

  void allocate() {
    flat = Vec<S>::Zero(layout.trainable_size());
    running = Vec<S>::Zero(layout.running_size());
  }

  MatMap<S> weight(std::size_t seq, std::size_t layer) {
    const LayerSlots& s = layout.slot(seq, layer);
    return MatMap<S>(flat.data() + s.weight, s.weight_rows, s.weight_cols);
  }
  CMatMap<S> weight(std::size_t seq, std::size_t layer) const {
    const LayerSlots& s = layout.slot(seq, layer);
    return CMatMap<S>(flat.data() + s.weight, s.weight_rows, s.weight_cols);
  }
  VecMap<S> bias(std::size_t seq, std::size_t layer, int out_ch) {
    return VecMap<S>(flat.data() + layout.slot(seq, layer).bias, out_ch);
  }
  CVecMap<S> bias(std::size_t seq, std::size_t layer, int out_ch) const {
    return CVecMap<S>(flat.data() + layout.slot(seq, layer).bias, out_ch);
  }
  VecMap<S> gamma(std::size_t seq, std::size_t layer) {
    const LayerSlots& s = layout.slot(seq, layer);
    return VecMap<S>(flat.data() + s.gamma, s.norm_ch);
  }
  CVecMap<S> gamma(std::size_t seq, std::size_t layer) const {
    const LayerSlots& s = layout.slot(seq, layer);
    return CVecMap<S>(flat.data() + s.gamma, s.norm_ch);
  }
  VecMap<S> beta(std::size_t seq, std::size_t layer) {
    const LayerSlots& s = layout.slot(seq, layer);
    return VecMap<S>(flat.data() + s.beta, s.norm_ch);
  }
  CVecMap<S> beta(std::size_t seq, std::size_t layer) const {
    const LayerSlots& s = layout.slot(seq, layer);
    return CVecMap<S>(flat.data() + s.beta, s.norm_ch);
  }
  VecMap<S> run_mean(std::size_t seq, std::size_t layer) {
    const LayerSlots& s = layout.slot(seq, layer);
    return VecMap<S>(running.data() + s.run_mean, s.norm_ch);
  }
  VecMap<S> run_var(std::size_t seq, std::size_t layer) {
    const LayerSlots& s = layout.slot(seq, layer);
    return VecMap<S>(running.data() + s.run_var, s.norm_ch);
  }
  CVecMap<S> run_mean(std::size_t seq, std::size_t layer) const {
    const LayerSlots& s = layout.slot(seq, layer);
    return CVecMap<S>(running.data() + s.run_mean, s.norm_ch);
  }
  CVecMap<S> run_var(std::size_t seq, std::size_t layer) const {
    const LayerSlots& s = layout.slot(seq, layer);
    return CVecMap<S>(running.data() + s.run_var, s.norm_ch);
  }
};

/// DCGAN-style init: zero-mean Gaussian sigma=0.02 on kernels, zero biases,
/// unit gamma, zero beta, unit running variance.
template <class S>
void init_params(NetParams<S>& p, const std::vector<const LayerSeq*>& seqs,
                 Rng& rng, double sigma = 0.02) {
  p.layout = ParamLayout(seqs);
  p.allocate();
  for (std::size_t si = 0; si < seqs.size(); ++si) {
    const LayerSeq& seq = *seqs[si];
    for (std::size_t li = 0; li < seq.size(); ++li) {
      const LayerSpec& l = seq[li];
      if (l.has_weights()) {
        auto w = p.weight(si, li);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          for (Eigen::Index i = 0; i < w.rows(); ++i)
            w(i, j) = static_cast<S>(rng.normal(0.0, sigma));
      }
      if (l.norm) {
        p.gamma(si, li).setOnes();
        p.run_var(si, li).setOnes();
      }
    }
  }
}

}  // namespace racegan::net
