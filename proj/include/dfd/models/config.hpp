#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dfd::models {

enum class CellKind { lstm, gru };

struct RnnConfig {
  CellKind cell = CellKind::lstm;
  bool bidirectional = false;
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 50;
  std::size_t seq_length = 128;
  std::size_t hidden = 128;
  std::size_t dense = 400;
  double dropout = 0.4;
  std::size_t classes = 2;

  std::size_t rnn_output_dim() const { return bidirectional ? 2 * hidden : hidden; }
  void validate() const;
  nlohmann::json to_json() const;
  static RnnConfig from_json(const nlohmann::json& j);
};

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t ffn_dim = 256;
  std::size_t max_positions = 128;
  std::size_t vocab_size = 0;
  std::size_t classes = 2;
  double dropout = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

using ClassifierConfig = std::variant<RnnConfig, EncoderConfig>;

// lstm, bilstm, gru, bigru, transformer
const std::vector<std::string>& classifier_names();

// Preset for a classifier name: cell type, direction and dropout for the
// recurrent models (lstm 0.4, gru 0.5, bilstm 0.3, bigru 0.5), the toy
// encoder shape for "transformer". Throws UsageError for unknown names.
ClassifierConfig classifier_preset(const std::string& name, std::size_t vocab_size,
                                   std::size_t max_length);

std::string classifier_name(const ClassifierConfig& cfg);
bool is_transformer(const ClassifierConfig& cfg);

nlohmann::json config_to_json(const ClassifierConfig& cfg);
ClassifierConfig config_from_json(const std::string& name, const nlohmann::json& j);

// Trainable scalars implied by the architecture.
std::size_t param_count(const RnnConfig& cfg);
std::size_t param_count(const EncoderConfig& cfg);
std::size_t param_count(const ClassifierConfig& cfg);

}  // namespace dfd::models
