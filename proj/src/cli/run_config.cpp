#include "dfd/cli/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dfd/error.hpp"
#include "dfd/json_util.hpp"

namespace dfd::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kRnnOverrides = {"embedding_dim", "hidden", "dense", "dropout"};
const std::set<std::string> kEncoderOverrides = {"layers", "hidden", "heads", "ffn_dim", "dropout"};

json without(json j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) j.erase(k);
  return j;
}

void reject_keys(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (j.contains(k)) {
      throw ConfigError("config: \"" + section + "." + k + "\" is not settable here" +
                        (std::string(k) == "seed" ? " (use the global seed)" : ""));
    }
  }
}

json model_defaults() {
  return json{{"embedding_dim", 50}, {"hidden", 128}, {"dense", 400}, {"dropout", 0.0},
              {"layers", 2},         {"heads", 4},    {"ffn_dim", 256}};
}

}  // namespace

json RunConfig::to_json() const {
  return json{{"seed", seed},
              {"threads", threads},
              {"normalize", normalize.to_json()},
              {"tokenizer",
               {{"word_min_freq", tokenizer.word_min_freq},
                {"max_word_vocab", tokenizer.max_word_vocab},
                {"bpe_merges", tokenizer.bpe_merges},
                {"max_length", tokenizer.max_length}}},
              {"model", model},
              {"train", without(train.to_json(), {"seed"})},
              {"split", {{"train_fraction", train_fraction}}},
              {"lm", without(lm.to_json(), {"vocab_size"})},
              {"lm_train", without(lm_train.to_json(), {"seed"})},
              {"sampler", without(sampler.to_json(), {"seed"})}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  jsonu::for_each_key(j, "config", [&](const std::string& k, const json& v) {
    if (k == "seed") {
      c.seed = jsonu::as_u64(v);
    } else if (k == "threads") {
      c.threads = jsonu::as_size(v);
    } else if (k == "normalize") {
      c.normalize = text::NormalizerConfig::from_json(v);
    } else if (k == "tokenizer") {
      jsonu::for_each_key(v, "tokenizer", [&](const std::string& tk, const json& tv) {
        if (tk == "word_min_freq") c.tokenizer.word_min_freq = jsonu::as_size(tv);
        else if (tk == "max_word_vocab") c.tokenizer.max_word_vocab = jsonu::as_size(tv);
        else if (tk == "bpe_merges") c.tokenizer.bpe_merges = jsonu::as_size(tv);
        else if (tk == "max_length") c.tokenizer.max_length = jsonu::as_size(tv);
        else return false;
        return true;
      });
    } else if (k == "model") {
      const json defaults = model_defaults();
      jsonu::for_each_key(v, "model", [&](const std::string& mk, const json& mv) {
        if (!defaults.contains(mk)) return false;
        if (mk == "dropout") jsonu::as_double(mv);
        else jsonu::as_size(mv);
        return true;
      });
      c.model = v;
    } else if (k == "train") {
      reject_keys(v, "train", {"seed"});
      c.train = pipe::TrainSpec::from_json(v);
    } else if (k == "split") {
      jsonu::for_each_key(v, "split", [&](const std::string& sk, const json& sv) {
        if (sk != "train_fraction") return false;
        c.train_fraction = jsonu::as_double(sv);
        return true;
      });
    } else if (k == "lm") {
      reject_keys(v, "lm", {"vocab_size"});
      c.lm = gen::DecoderConfig::from_json(v);
    } else if (k == "lm_train") {
      reject_keys(v, "lm_train", {"seed"});
      c.lm_train = gen::LmTrainSpec::from_json(v);
    } else if (k == "sampler") {
      reject_keys(v, "sampler", {"seed"});
      c.sampler = gen::SamplerConfig::from_json(v);
    } else {
      return false;
    }
    return true;
  });
  c.normalize.validate();
  c.train_spec().validate();
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    throw ConfigError("config: split.train_fraction must lie in (0, 1)");
  }
  c.lm_train_spec().validate();
  return c;
}

pipe::TrainSpec RunConfig::train_spec() const {
  auto s = train;
  s.seed = seed;
  return s;
}

pipe::SplitSpec RunConfig::split_spec() const { return {train_fraction, seed}; }

gen::LmTrainSpec RunConfig::lm_train_spec() const {
  auto s = lm_train;
  s.seed = seed;
  return s;
}

gen::SamplerConfig RunConfig::sampler_config() const {
  auto s = sampler;
  s.seed = seed;
  return s;
}

models::ClassifierConfig RunConfig::classifier(const std::string& name, std::size_t vocab_size,
                                               std::size_t max_length) const {
  const auto preset = models::classifier_preset(name, vocab_size, max_length);
  const bool transformer = models::is_transformer(preset);
  const auto& allowed = transformer ? kEncoderOverrides : kRnnOverrides;
  json j = models::config_to_json(preset);
  for (const auto& [k, v] : model.items()) {
    if (!allowed.contains(k)) {
      throw ConfigError("config: model." + k + " does not apply to " + name);
    }
    j[k] = v;
  }
  auto cfg = models::config_from_json(name, j);
  std::visit([](const auto& c) { c.validate(); }, cfg);
  return cfg;
}

std::string flag_name(const std::string& dotted) {
  std::string out = dotted;
  for (char& ch : out) {
    if (ch == '.' || ch == '_') ch = '-';
  }
  return out;
}

std::vector<std::pair<std::string, json>> config_paths() {
  std::vector<std::pair<std::string, json>> out;
  json defaults = RunConfig{}.to_json();
  defaults["model"] = model_defaults();
  for (const auto& [k, v] : defaults.items()) {
    if (v.is_object()) {
      for (const auto& [sk, sv] : v.items()) out.emplace_back(k + "." + sk, sv);
    } else {
      out.emplace_back(k, v);
    }
  }
  return out;
}

json parse_flag_value(const std::string& dotted, const std::string& text) {
  const json* proto = nullptr;
  const auto paths = config_paths();
  for (const auto& [p, v] : paths) {
    if (p == dotted) proto = &v;
  }
  if (proto == nullptr) throw UsageError("unknown config path: " + dotted);
  auto fail = [&]() -> json {
    throw ConfigError("--" + flag_name(dotted) + ": cannot parse \"" + text + "\"");
  };
  if (proto->is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    return fail();
  }
  if (proto->is_string()) return text;
  std::istringstream in(text);
  if (proto->is_number_unsigned() || proto->is_number_integer()) {
    if (text.empty() || text[0] == '-') return fail();
    std::uint64_t u = 0;
    in >> u;
    if (!in || !in.eof()) return fail();
    return u;
  }
  double d = 0.0;
  in >> d;
  if (!in || !in.eof()) return fail();
  return d;
}

json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + path.string() + ": expected a JSON object");
  if (j.contains("command") && j.contains("config")) return j.at("config");
  return j;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const std::map<std::string, std::string>& flags) {
  json j = RunConfig{}.to_json();
  std::optional<std::filesystem::path> path = file;
  if (!path) {
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') path = env;
  }
  if (path) {
    const json layer = read_config_file(*path);
    // Validate the file on its own so unknown keys are reported against it.
    RunConfig::from_json(layer);
    j.merge_patch(layer);
  }
  for (const auto& [dotted, text] : flags) {
    const json value = parse_flag_value(dotted, text);
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) {
      j[dotted] = value;
    } else {
      j[dotted.substr(0, dot)][dotted.substr(dot + 1)] = value;
    }
  }
  return RunConfig::from_json(j);
}

}  // namespace dfd::cli
