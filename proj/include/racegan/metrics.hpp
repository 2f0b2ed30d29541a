#pragma once

#include "racegan/image.hpp"

#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace racegan {

/// Pixel tallies with lane as the positive class.
struct ConfusionCounts {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::int64_t total() const { return tp + tn + fp + fn; }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

enum class MaskClass { lane, background };

enum class Aggregation { micro, macro };

/// The six corpus metrics plus flags recording where a ratio was 0/0.
/// Undefined ratios are reported as 0 (and f1 as 0), except a class absent
/// from both masks, whose IoU counts as perfect vacuous agreement (1).
struct MetricsReport {
  double miou = 0, accuracy = 0, precision = 0, recall = 0, f1 = 0,
         specificity = 0;
  bool precision_defined = true, recall_defined = true, f1_defined = true,
       specificity_defined = true;
  bool lane_iou_vacuous = false, background_iou_vacuous = false;
  std::string aggregation = "single";
  int macro_exclusions = 0;  // undefined per-image values dropped from means
};

inline ConfusionCounts confusion(const BinaryMask& pred,
                                 const BinaryMask& label) {
  if (pred.rows() != label.rows() || pred.cols() != label.cols())
    throw std::invalid_argument("confusion: mask dimensions differ");
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < pred.rows(); ++i)
    for (Eigen::Index j = 0; j < pred.cols(); ++j) {
      const bool p = pred(i, j) != 0;
      const bool l = label(i, j) != 0;
      if (p && l)
        ++c.tp;
      else if (p && !l)
        ++c.fp;
      else if (!p && l)
        ++c.fn;
      else
        ++c.tn;
    }
  return c;
}

inline double iou_from_counts(const ConfusionCounts& c, MaskClass cls,
                              bool* vacuous = nullptr) {
  const std::int64_t inter = cls == MaskClass::lane ? c.tp : c.tn;
  const std::int64_t uni = inter + c.fp + c.fn;
  if (vacuous) *vacuous = (uni == 0);
  if (uni == 0) return 1.0;  // class absent from both masks
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double iou_per_class(const BinaryMask& pred, const BinaryMask& label,
                            MaskClass cls, bool* vacuous = nullptr) {
  return iou_from_counts(confusion(pred, label), cls, vacuous);
}

inline double miou_from_counts(const ConfusionCounts& c) {
  return 0.5 * (iou_from_counts(c, MaskClass::lane) +
                iou_from_counts(c, MaskClass::background));
}

inline double miou(const BinaryMask& pred, const BinaryMask& label) {
  return miou_from_counts(confusion(pred, label));
}

inline MetricsReport compute_all(const ConfusionCounts& c) {
  MetricsReport r;
  if (c.total() <= 0)
    throw std::invalid_argument("compute_all: empty confusion counts");
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0)
    r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  else
    r.precision_defined = false;
  if (c.tp + c.fn > 0)
    r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  else
    r.recall_defined = false;
  if (c.tn + c.fp > 0)
    r.specificity =
        static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  else
    r.specificity_defined = false;
  if (r.precision_defined && r.recall_defined && r.precision + r.recall > 0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  else
    r.f1_defined = false;
  r.miou = 0.5 * (iou_from_counts(c, MaskClass::lane, &r.lane_iou_vacuous) +
                  iou_from_counts(c, MaskClass::background,
                                  &r.background_iou_vacuous));
  return r;
}

inline MetricsReport compute_all(const ConfusionCounts& c,
                                 const BinaryMask& pred,
                                 const BinaryMask& label) {
  const ConfusionCounts check = confusion(pred, label);
  if (check.tp != c.tp || check.tn != c.tn || check.fp != c.fp ||
      check.fn != c.fn)
    throw std::invalid_argument("compute_all: counts inconsistent with masks");
  return compute_all(c);
}

/// micro = pool counts over the corpus, then compute once;
/// macro = compute per image, mean the defined values.
inline MetricsReport corpus_eval(
    std::span<const std::pair<BinaryMask, BinaryMask>> pairs,
    Aggregation mode) {
  if (pairs.empty())
    throw std::invalid_argument("corpus_eval: no (pred,label) pairs");
  if (mode == Aggregation::micro) {
    ConfusionCounts pooled;
    for (const auto& [pred, label] : pairs) pooled += confusion(pred, label);
    MetricsReport r = compute_all(pooled);
    r.aggregation = "micro";
    return r;
  }
  MetricsReport out;
  out.aggregation = "macro";
  double sums[6] = {0, 0, 0, 0, 0, 0};
  int counts[6] = {0, 0, 0, 0, 0, 0};
  for (const auto& [pred, label] : pairs) {
    const MetricsReport r = compute_all(confusion(pred, label));
    const bool defined[6] = {true,
                             true,
                             r.precision_defined,
                             r.recall_defined,
                             r.f1_defined,
                             r.specificity_defined};
    const double vals[6] = {r.miou, r.accuracy, r.precision,
                            r.recall, r.f1,     r.specificity};
    for (int k = 0; k < 6; ++k) {
      if (defined[k]) {
        sums[k] += vals[k];
        ++counts[k];
      } else {
        ++out.macro_exclusions;
      }
    }
  }
  out.miou = sums[0] / counts[0];
  out.accuracy = sums[1] / counts[1];
  out.precision = counts[2] ? sums[2] / counts[2] : 0.0;
  out.precision_defined = counts[2] > 0;
  out.recall = counts[3] ? sums[3] / counts[3] : 0.0;
  out.recall_defined = counts[3] > 0;
  out.f1 = counts[4] ? sums[4] / counts[4] : 0.0;
  out.f1_defined = counts[4] > 0;
  out.specificity = counts[5] ? sums[5] / counts[5] : 0.0;
  out.specificity_defined = counts[5] > 0;
  return out;
}

/// Columns in the reporting order used everywhere: mIoU, Accuracy, Precision,
/// Recall, F1 Score, Specificity.
inline std::string metrics_csv_header() {
  return "miou,accuracy,precision,recall,f1,specificity,aggregation";
}

inline std::string metrics_csv_row(const MetricsReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%s", r.miou,
                r.accuracy, r.precision, r.recall, r.f1, r.specificity,
                r.aggregation.c_str());
  return buf;
}

inline std::string metrics_table(const MetricsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%-12s %-10s %-10s %-10s %-10s %-12s\n"
                "%-12.4f %-10.4f %-10.4f %-10.4f %-10.4f %-12.4f\n",
                "mIoU", "Accuracy", "Precision", "Recall", "F1 Score",
                "Specificity", r.miou, r.accuracy, r.precision, r.recall, r.f1,
                r.specificity);
  std::string out = buf;
  out += "aggregation: " + r.aggregation;
  if (!r.precision_defined || !r.recall_defined || !r.f1_defined ||
      !r.specificity_defined)
    out += "  (contains undefined ratios reported as 0)";
  if (r.macro_exclusions > 0)
    out += "  macro exclusions: " + std::to_string(r.macro_exclusions);
  out += "\n";
  return out;
}

}  // namespace racegan
