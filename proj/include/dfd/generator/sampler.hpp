#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dfd/generator/decoder.hpp"
#include "dfd/normalize/normalizer.hpp"
#include "dfd/pipeline/corpus.hpp"

namespace dfd::gen {

// Generated texts run between these word counts, seed words included.
inline constexpr std::size_t kStandardMinLen = 15;
inline constexpr std::size_t kStandardMaxLen = 35;

struct SamplerConfig {
  std::size_t top_k = 40;
  double temperature = 1.0;  // 0 selects argmax decoding
  std::size_t min_len = kStandardMinLen;
  std::size_t max_len = kStandardMaxLen;
  std::uint64_t seed = 0;
  std::size_t seed_prefix_len = 3;

  // ConfigError unless 1 ≤ seed_prefix_len ≤ min_len ≤ max_len,
  // 1 ≤ top_k ≤ vocab_size and temperature is finite and ≥ 0.
  void validate(std::size_t vocab_size) const;
  bool within_standard_bounds() const { return kStandardMinLen <= min_len && max_len <= kStandardMaxLen; }
  nlohmann::json to_json() const;
  static SamplerConfig from_json(const nlohmann::json& j);
  bool operator==(const SamplerConfig&) const = default;
};

// Logits for the token following `context`; only the last context_length
// ids are read.
std::vector<float> next_token_logits(const LanguageModel& lm, std::span<const std::size_t> context);

// One sampling step as seen by the sampler.
struct SampleStep {
  std::vector<std::size_t> context;
  // Model distribution after temperature scaling (temperature 1 in argmax
  // mode); reserved tokens have probability 0.
  std::vector<double> distribution;
  // Kept tokens, most probable first, and their renormalized probabilities.
  std::vector<std::size_t> candidates;
  std::vector<double> candidate_probs;
  std::size_t chosen = 0;
};

// Normalizes the seed, keeps its first seed_prefix_len words as context,
// draws a target length uniformly in [min_len, max_len] and extends the
// text one token at a time by temperature, top-k truncation,
// renormalization and a categorical draw. Reserved tokens are never drawn.
// InputError when the seed normalizes to nothing.
std::string sample(const LanguageModel& lm, std::string_view seed_text, const SamplerConfig& cfg,
                   const text::NormalizerConfig& norm = {}, std::vector<SampleStep>* trace = nullptr);

struct GenerationRecord {
  std::size_t index = 0;
  std::string source_id;
  std::string seed_text;
  std::string generated;
  SamplerConfig sampler;  // seed is the per-record seed
  std::string checkpoint_hash;

  nlohmann::json to_json() const;
  static GenerationRecord from_json(const nlohmann::json& j);
  bool operator==(const GenerationRecord&) const = default;
};

void write_records(const std::vector<GenerationRecord>& records, const std::filesystem::path& path);
std::vector<GenerationRecord> read_records(const std::filesystem::path& path);

// Reruns the record's sampler. IntegrityError when the model's checkpoint
// hash differs from the record's.
std::string replay(const LanguageModel& lm, const GenerationRecord& record,
                   const text::NormalizerConfig& norm = {});

struct GeneratedCorpus {
  pipe::Corpus documents;
  std::vector<GenerationRecord> records;
};

// One generation per selected seed document; record i samples with seed
// base.seed ⊕ i. count = 0 uses every seed once; a smaller count takes a
// seeded subsample (kept in corpus order); a larger one cycles through the
// seeds. Documents that normalize to nothing are skipped as seeds. Work is
// spread over `threads` workers (0 = hardware concurrency); the result does
// not depend on the thread count.
GeneratedCorpus build_deepfake_corpus(const pipe::Corpus& seeds, const LanguageModel& lm,
                                      const SamplerConfig& base, std::size_t count = 0,
                                      const text::NormalizerConfig& norm = {}, std::size_t threads = 0);

// The corpus document for a record: id "gen-<index>", label deepfake,
// provenance generated.
pipe::Document generated_document(const GenerationRecord& record, const std::string& text,
                                  const text::NormalizerConfig& norm = {});

}  // namespace dfd::gen
