#include "dfd/models/config.hpp"

#include <algorithm>

#include "dfd/error.hpp"
#include "dfd/json_util.hpp"
#include "dfd/tokenizer/vocabulary.hpp"

namespace dfd::models {
namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

using jsonu::as_double;
using jsonu::as_size;

template <typename F>
void for_each_key(const json& j, const char* what, F&& f) {
  jsonu::for_each_key(j, what, std::forward<F>(f));
}

}  // namespace

void RnnConfig::validate() const {
  require(vocab_size > tok::kReservedCount, "rnn: vocab_size must exceed the reserved tokens");
  require(embedding_dim > 0 && hidden > 0 && dense > 0, "rnn: layer sizes must be positive");
  require(seq_length > 0, "rnn: seq_length must be positive");
  require(classes >= 2, "rnn: need at least two classes");
  require(dropout >= 0.0 && dropout < 1.0, "rnn: dropout must lie in [0, 1)");
}

json RnnConfig::to_json() const {
  return json{{"cell", cell == CellKind::lstm ? "lstm" : "gru"},
              {"bidirectional", bidirectional},
              {"vocab_size", vocab_size},
              {"embedding_dim", embedding_dim},
              {"seq_length", seq_length},
              {"hidden", hidden},
              {"dense", dense},
              {"dropout", dropout},
              {"classes", classes}};
}

RnnConfig RnnConfig::from_json(const json& j) {
  RnnConfig c;
  for_each_key(j, "rnn", [&](const std::string& k, const json& v) {
    if (k == "cell") {
      const auto s = v.get<std::string>();
      if (s != "lstm" && s != "gru") throw ConfigError("rnn.cell must be lstm or gru, got " + s);
      c.cell = s == "lstm" ? CellKind::lstm : CellKind::gru;
    } else if (k == "bidirectional") {
      c.bidirectional = v.get<bool>();
    } else if (k == "vocab_size") {
      c.vocab_size = as_size(v);
    } else if (k == "embedding_dim") {
      c.embedding_dim = as_size(v);
    } else if (k == "seq_length") {
      c.seq_length = as_size(v);
    } else if (k == "hidden") {
      c.hidden = as_size(v);
    } else if (k == "dense") {
      c.dense = as_size(v);
    } else if (k == "dropout") {
      c.dropout = as_double(v);
    } else if (k == "classes") {
      c.classes = as_size(v);
    } else {
      return false;
    }
    return true;
  });
  c.validate();
  return c;
}

void EncoderConfig::validate() const {
  require(vocab_size > tok::kReservedCount, "encoder: vocab_size must exceed the reserved tokens");
  require(layers > 0 && hidden > 0 && heads > 0 && ffn_dim > 0, "encoder: sizes must be positive");
  require(hidden % heads == 0, "encoder: hidden must be divisible by heads");
  require(max_positions >= 2, "encoder: max_positions must allow [CLS] and [SEP]");
  require(classes >= 2, "encoder: need at least two classes");
  require(dropout >= 0.0 && dropout < 1.0, "encoder: dropout must lie in [0, 1)");
}

json EncoderConfig::to_json() const {
  return json{{"layers", layers},       {"hidden", hidden},
              {"heads", heads},         {"ffn_dim", ffn_dim},
              {"max_positions", max_positions}, {"vocab_size", vocab_size},
              {"classes", classes},     {"dropout", dropout}};
}

EncoderConfig EncoderConfig::from_json(const json& j) {
  EncoderConfig c;
  for_each_key(j, "encoder", [&](const std::string& k, const json& v) {
    if (k == "layers") c.layers = as_size(v);
    else if (k == "hidden") c.hidden = as_size(v);
    else if (k == "heads") c.heads = as_size(v);
    else if (k == "ffn_dim") c.ffn_dim = as_size(v);
    else if (k == "max_positions") c.max_positions = as_size(v);
    else if (k == "vocab_size") c.vocab_size = as_size(v);
    else if (k == "classes") c.classes = as_size(v);
    else if (k == "dropout") c.dropout = as_double(v);
    else return false;
    return true;
  });
  c.validate();
  return c;
}

const std::vector<std::string>& classifier_names() {
  static const std::vector<std::string> names{"lstm", "bilstm", "gru", "bigru", "transformer"};
  return names;
}

ClassifierConfig classifier_preset(const std::string& name, std::size_t vocab_size,
                                   std::size_t max_length) {
  if (name == "transformer") {
    EncoderConfig c;
    c.vocab_size = vocab_size;
    c.max_positions = max_length;
    return c;
  }
  RnnConfig c;
  c.vocab_size = vocab_size;
  c.seq_length = max_length;
  if (name == "lstm") {
    c.dropout = 0.4;
  } else if (name == "bilstm") {
    c.bidirectional = true;
    c.dropout = 0.3;
  } else if (name == "gru") {
    c.cell = CellKind::gru;
    c.dropout = 0.5;
  } else if (name == "bigru") {
    c.cell = CellKind::gru;
    c.bidirectional = true;
    c.dropout = 0.5;
  } else {
    std::string valid;
    for (const auto& n : classifier_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw UsageError("unknown model '" + name + "' (valid: " + valid + ")");
  }
  return c;
}

std::string classifier_name(const ClassifierConfig& cfg) {
  if (const auto* r = std::get_if<RnnConfig>(&cfg)) {
    return std::string(r->bidirectional ? "bi" : "") + (r->cell == CellKind::lstm ? "lstm" : "gru");
  }
  return "transformer";
}

bool is_transformer(const ClassifierConfig& cfg) { return std::holds_alternative<EncoderConfig>(cfg); }

json config_to_json(const ClassifierConfig& cfg) {
  return std::visit([](const auto& c) { return c.to_json(); }, cfg);
}

ClassifierConfig config_from_json(const std::string& name, const json& j) {
  if (name == "transformer") return EncoderConfig::from_json(j);
  const auto names = classifier_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw ConfigError("unknown classifier name '" + name + "'");
  }
  RnnConfig c = RnnConfig::from_json(j);
  if (classifier_name(c) != name) {
    throw ConfigError("config describes " + classifier_name(c) + ", not " + name);
  }
  return c;
}

std::size_t param_count(const RnnConfig& c) {
  const std::size_t E = c.embedding_dim, H = c.hidden;
  const std::size_t cell = c.cell == CellKind::lstm ? 4 * (E * H + H * H + H)  // Wx, Wh, b
                                                    : 3 * (E * H + H * H + H);  // Wx, Uzr+Uh, b
  const std::size_t dirs = c.bidirectional ? 2 : 1;
  const std::size_t R = c.rnn_output_dim();
  return c.vocab_size * E + dirs * cell + (R * c.dense + c.dense) + (c.dense * c.classes + c.classes);
}

std::size_t param_count(const EncoderConfig& c) {
  const std::size_t d = c.hidden, f = c.ffn_dim;
  const std::size_t block = 4 * (d * d + d)   // q, k, v, output projections
                            + (d * f + f) + (f * d + d)
                            + 2 * 2 * d;      // two layer norms
  return c.vocab_size * d + c.max_positions * d + 2 * d + c.layers * block +
         (d * c.classes + c.classes);
}

std::size_t param_count(const ClassifierConfig& cfg) {
  return std::visit([](const auto& c) { return param_count(c); }, cfg);
}

}  // namespace dfd::models
