#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfd/generator/decoder.hpp"
#include "dfd/generator/sampler.hpp"
#include "dfd/models/config.hpp"
#include "dfd/normalize/normalizer.hpp"
#include "dfd/pipeline/split.hpp"
#include "dfd/pipeline/training.hpp"

namespace dfd::cli {

inline constexpr const char* kConfigEnvVar = "DFD_CONFIG";

struct TokenizerSettings {
  std::size_t word_min_freq = 1;
  std::size_t max_word_vocab = 0;  // 0: no cap
  std::size_t bpe_merges = 1000;
  std::size_t max_length = 0;      // 0: longest training encoding, capped at 128
};

// Every tunable of every command in one structure. Sections carry no seeds;
// the global seed feeds the split, training, LM training and sampling.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  text::NormalizerConfig normalize;
  TokenizerSettings tokenizer;
  // Overrides applied on top of the named model's preset: embedding_dim,
  // hidden, dense, dropout for recurrent models; layers, hidden, heads,
  // ffn_dim, dropout for the transformer.
  nlohmann::json model = nlohmann::json::object();
  pipe::TrainSpec train;
  double train_fraction = 0.8;
  gen::DecoderConfig lm;
  gen::LmTrainSpec lm_train;
  gen::SamplerConfig sampler;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys and sections are
  // rejected with ConfigError.
  static RunConfig from_json(const nlohmann::json& j);

  pipe::TrainSpec train_spec() const;
  pipe::SplitSpec split_spec() const;
  gen::LmTrainSpec lm_train_spec() const;
  gen::SamplerConfig sampler_config() const;
  // Preset for `name` with the model overrides applied. ConfigError when an
  // override does not exist for that architecture.
  models::ClassifierConfig classifier(const std::string& name, std::size_t vocab_size,
                                      std::size_t max_length) const;
};

// Flag name for a config path: "seed" → "seed", "train.batch_size" →
// "train-batch-size".
std::string flag_name(const std::string& dotted);

// Every settable config path with its default value, in flag order.
std::vector<std::pair<std::string, nlohmann::json>> config_paths();

// Parses a flag's text against the type of the path's default value.
nlohmann::json parse_flag_value(const std::string& dotted, const std::string& text);

// A config file is either a plain RunConfig object or an artifact sidecar,
// whose "config" member is used.
nlohmann::json read_config_file(const std::filesystem::path& path);

// defaults ← file ← flags. `file` is the explicit path, else $DFD_CONFIG,
// else none. `flags` maps dotted paths to raw flag text.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const std::map<std::string, std::string>& flags);

}  // namespace dfd::cli
