#include "dfd/models/classifier.hpp"

namespace dfd::models {

num::ParameterSet<float> init_classifier(const ClassifierConfig& cfg, std::uint64_t seed) {
  if (const auto* r = std::get_if<RnnConfig>(&cfg)) return init_rnn(*r, seed);
  return init_encoder(std::get<EncoderConfig>(cfg), seed);
}

template <typename T>
num::Var<T> classifier_forward(num::Tape<T>& tape, const ClassifierConfig& cfg,
                               num::ParameterSet<T>& p, const Batch& batch,
                               const ForwardOptions& opt) {
  if (const auto* r = std::get_if<RnnConfig>(&cfg)) return rnn_forward(tape, *r, p, batch, opt);
  return encoder_forward(tape, std::get<EncoderConfig>(cfg), p, batch, opt);
}

num::Tensor<float> predict_proba(const ClassifierConfig& cfg, num::ParameterSet<float>& p,
                                 const Batch& batch) {
  num::Tape<float> tape(false);
  return classifier_forward(tape, cfg, p, batch).value();
}

template num::Var<float> classifier_forward(num::Tape<float>&, const ClassifierConfig&,
                                            num::ParameterSet<float>&, const Batch&,
                                            const ForwardOptions&);
template num::Var<double> classifier_forward(num::Tape<double>&, const ClassifierConfig&,
                                             num::ParameterSet<double>&, const Batch&,
                                             const ForwardOptions&);
template num::Var<long double> classifier_forward(num::Tape<long double>&, const ClassifierConfig&,
                                                  num::ParameterSet<long double>&, const Batch&,
                                                  const ForwardOptions&);

}  // namespace dfd::models
