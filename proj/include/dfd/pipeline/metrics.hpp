#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include <json.hpp>

#include "dfd/pipeline/corpus.hpp"

namespace dfd::pipe {

// Positive class = deepfake.
struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  void add(Label predicted, Label truth);
  std::uint64_t total() const { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

// Percentages in full precision; rounding happens only when rendering.
struct Metrics {
  std::optional<Confusion> confusion;
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing was predicted positive
  double recall = 0.0;
  double f1 = 0.0;

  static Metrics from_confusion(const Confusion& cm);
  nlohmann::json to_json() const;
  static Metrics from_json(const nlohmann::json& j);
};

// Harmonic mean of two percentages; 0 when both are 0.
double f1_from_pr(double precision, double recall);

// Order-independent reduction over prediction/label pairs, split into
// chunks handled by `threads` workers (0 = hardware concurrency).
Confusion count_confusion(std::span<const Label> predicted, std::span<const Label> truth,
                          std::size_t threads = 0);

}  // namespace dfd::pipe
