#include "racegan/complexity.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace racegan {

std::string hardware_descriptor() {
  std::string model = "unknown cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        model = line.substr(colon + 1);
        while (!model.empty() && model.front() == ' ') model.erase(model.begin());
      }
      break;
    }
  }
  return model + ", " + std::to_string(std::thread::hardware_concurrency()) +
         " hardware threads";
}

InferenceTiming measure_inference_ms(net::Generator<float>& generator,
                                     int height, int width, int trials) {
  if (trials < 3)
    throw std::invalid_argument("measure_inference_ms: trials must be >= 3");
  net::Batch<float> input = net::Batch<float>::zeros(4, height, width, 1);
  input.data.setConstant(0.5f);
  for (int i = 0; i < 2; ++i) generator.forward(input, false, nullptr);

  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    generator.forward(input, false, nullptr);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(
        std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  InferenceTiming out;
  out.median_ms =
      n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  out.trials = trials;
  out.hardware = hardware_descriptor();
  return out;
}

std::span<const PublishedComplexityRow> published_complexity_reference() {
  static const PublishedComplexityRow rows[] = {
      {"WeBACNN", "7.37", "1.15", "0.58"},
      {"Ultrafast", "13.26", "36.51", "8.4"},
      {"Segnet", "64.49", "29.46", "1.54"},
      {"Reseg", "-", "-", "2"},
      {"Polylanenet", "0.039", "6.522", "8.53"},
      {"Hetnet", "-", "-", "15.8"},
      {"Deeplabv3", "3.82", "12.69", "1.36"},
      {"Samnet", "4.98", "216.53", "14.80"},
      {"Yolov8", "12.10", "3.26", "5.15"},
      {"RaceGAN", "7.47", "1.59", "1.82"},
  };
  return rows;
}

}  // namespace racegan
