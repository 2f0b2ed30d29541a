#pragma once

#include "racegan/net/model.hpp"
#include "racegan/net/spec.hpp"

#include <span>
#include <string>

namespace racegan {

struct InferenceTiming {
  double median_ms = 0;
  int trials = 0;
  std::string hardware;
};

std::string hardware_descriptor();

/// Median wall-clock of a full generator forward pass at the given input
/// size, after warm-up runs. trials must be >= 3.
InferenceTiming measure_inference_ms(net::Generator<float>& generator,
                                     int height, int width, int trials);

/// Published complexity figures of the RaceGAN benchmark, shipped verbatim
/// as report context. Never used in any computation.
struct PublishedComplexityRow {
  const char* method;
  const char* flops_g;
  const char* params_m;
  const char* inf_ms;
};
std::span<const PublishedComplexityRow> published_complexity_reference();

}  // namespace racegan
