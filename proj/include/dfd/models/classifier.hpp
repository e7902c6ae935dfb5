#pragma once

#include <cstdint>

#include "dfd/models/encoder.hpp"
#include "dfd/models/rnn.hpp"

namespace dfd::models {

num::ParameterSet<float> init_classifier(const ClassifierConfig& cfg, std::uint64_t seed);

template <typename T>
num::Var<T> classifier_forward(num::Tape<T>& tape, const ClassifierConfig& cfg,
                               num::ParameterSet<T>& p, const Batch& batch,
                               const ForwardOptions& opt = {});

// Eval-mode class probabilities for a batch, one row per example.
num::Tensor<float> predict_proba(const ClassifierConfig& cfg, num::ParameterSet<float>& p,
                                 const Batch& batch);

}  // namespace dfd::models
