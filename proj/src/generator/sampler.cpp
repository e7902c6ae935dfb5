#include "dfd/generator/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "dfd/error.hpp"
#include "dfd/json_util.hpp"
#include "dfd/tokenizer/encode.hpp"

namespace dfd::gen {

using nlohmann::json;

void SamplerConfig::validate(std::size_t vocab_size) const {
  if (top_k == 0 || top_k > vocab_size) {
    throw ConfigError("sampler: top_k must lie in [1, " + std::to_string(vocab_size) + "], got " +
                      std::to_string(top_k));
  }
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw ConfigError("sampler: temperature must be finite and non-negative");
  }
  if (seed_prefix_len == 0 || seed_prefix_len > min_len || min_len > max_len) {
    throw ConfigError("sampler: need 1 <= seed_prefix_len <= min_len <= max_len");
  }
}

json SamplerConfig::to_json() const {
  return json{{"top_k", top_k},     {"temperature", temperature}, {"min_len", min_len},
              {"max_len", max_len}, {"seed", seed},               {"seed_prefix_len", seed_prefix_len}};
}

SamplerConfig SamplerConfig::from_json(const json& j) {
  SamplerConfig c;
  jsonu::for_each_key(j, "sampler", [&](const std::string& k, const json& v) {
    if (k == "top_k") c.top_k = jsonu::as_size(v);
    else if (k == "temperature") c.temperature = jsonu::as_double(v);
    else if (k == "min_len") c.min_len = jsonu::as_size(v);
    else if (k == "max_len") c.max_len = jsonu::as_size(v);
    else if (k == "seed") c.seed = jsonu::as_u64(v);
    else if (k == "seed_prefix_len") c.seed_prefix_len = jsonu::as_size(v);
    else return false;
    return true;
  });
  return c;
}

std::vector<float> next_token_logits(const LanguageModel& lm, std::span<const std::size_t> context) {
  if (context.empty()) throw UsageError("next_token_logits: empty context");
  const std::size_t n = std::min(context.size(), lm.config.context_length);
  models::Batch batch;
  batch.size = 1;
  batch.seq_len = n;
  batch.ids.assign(context.end() - static_cast<std::ptrdiff_t>(n), context.end());
  batch.lengths = {n};
  // The forward pass only reads parameters; the tape copies their values.
  auto& params = const_cast<num::ParameterSet<float>&>(lm.params);
  num::Tape<float> tape(false);
  auto states = decoder_states(tape, lm.config, params, batch);
  const std::size_t last = n - 1;
  auto row = num::gather_rows(states, std::span<const std::size_t>(&last, 1));
  const auto logits = num::matmul_nt(row, tape.param(params.get("tok_emb"))).value();
  return {logits.data().begin(), logits.data().end()};
}

namespace {

// Softmax of logits / temperature over the non-reserved ids.
std::vector<double> tempered_distribution(const std::vector<float>& logits, double temperature) {
  std::vector<double> p(logits.size(), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = tok::kReservedCount; i < logits.size(); ++i) {
    mx = std::max(mx, static_cast<double>(logits[i]) / temperature);
  }
  double total = 0.0;
  for (std::size_t i = tok::kReservedCount; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) / temperature - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

// Non-reserved ids by descending logit, ties to the lower id.
std::vector<std::size_t> ranked_ids(const std::vector<float>& logits) {
  std::vector<std::size_t> ids(logits.size() - tok::kReservedCount);
  std::iota(ids.begin(), ids.end(), tok::kReservedCount);
  std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) { return logits[a] > logits[b]; });
  return ids;
}

}  // namespace

std::string sample(const LanguageModel& lm, std::string_view seed_text, const SamplerConfig& cfg,
                   const text::NormalizerConfig& norm, std::vector<SampleStep>* trace) {
  cfg.validate(lm.vocab.size());
  const auto seed_words = tok::split_words(text::normalize(seed_text, norm));
  if (seed_words.empty()) throw InputError("sample: seed text is empty after normalization");

  num::Rng rng(cfg.seed);
  const std::size_t target = cfg.min_len + rng.uniform_int(cfg.max_len - cfg.min_len + 1);
  std::vector<std::string> words(seed_words.begin(),
                                 seed_words.begin() + static_cast<std::ptrdiff_t>(
                                                          std::min(cfg.seed_prefix_len, seed_words.size())));
  std::vector<std::size_t> context;
  for (const auto& w : words) context.push_back(lm.vocab.id_or_unk(w));

  const bool greedy = cfg.temperature == 0.0;
  while (words.size() < target) {
    const auto logits = next_token_logits(lm, context);
    const auto ranked = ranked_ids(logits);
    const std::size_t k = greedy ? 1 : std::min(cfg.top_k, ranked.size());
    std::vector<std::size_t> cand(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<double> probs(k);
    std::size_t chosen = cand[0];
    if (greedy) {
      probs[0] = 1.0;
    } else {
      const double top = static_cast<double>(logits[cand[0]]) / cfg.temperature;
      double total = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        probs[i] = std::exp(static_cast<double>(logits[cand[i]]) / cfg.temperature - top);
        total += probs[i];
      }
      for (double& v : probs) v /= total;
      const double u = rng.uniform();
      double cum = 0.0;
      chosen = cand[k - 1];
      for (std::size_t i = 0; i < k; ++i) {
        cum += probs[i];
        if (u < cum) {
          chosen = cand[i];
          break;
        }
      }
    }
    if (trace) {
      trace->push_back(SampleStep{context, tempered_distribution(logits, greedy ? 1.0 : cfg.temperature),
                                  cand, probs, chosen});
    }
    context.push_back(chosen);
    words.push_back(lm.vocab.token(chosen));
  }

  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

json GenerationRecord::to_json() const {
  return json{{"index", index},         {"source_id", source_id}, {"seed_text", seed_text},
              {"generated", generated}, {"sampler", sampler.to_json()}, {"checkpoint", checkpoint_hash}};
}

GenerationRecord GenerationRecord::from_json(const json& j) {
  GenerationRecord r;
  try {
    jsonu::for_each_key(j, "record", [&](const std::string& k, const json& v) {
      if (k == "index") r.index = jsonu::as_size(v);
      else if (k == "source_id") r.source_id = jsonu::as_string(v);
      else if (k == "seed_text") r.seed_text = jsonu::as_string(v);
      else if (k == "generated") r.generated = jsonu::as_string(v);
      else if (k == "sampler") r.sampler = SamplerConfig::from_json(v);
      else if (k == "checkpoint") r.checkpoint_hash = jsonu::as_string(v);
      else return false;
      return true;
    });
  } catch (const ConfigError& e) {
    throw InputError(std::string("generation record: ") + e.what());
  }
  return r;
}

void write_records(const std::vector<GenerationRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& r : records) out << r.to_json().dump() << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

std::vector<GenerationRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<GenerationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(GenerationRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string replay(const LanguageModel& lm, const GenerationRecord& record, const text::NormalizerConfig& norm) {
  if (record.checkpoint_hash != lm.checkpoint_hash) {
    throw IntegrityError("record " + std::to_string(record.index) + " was generated by checkpoint " +
                         record.checkpoint_hash + ", not " + lm.checkpoint_hash);
  }
  return sample(lm, record.seed_text, record.sampler, norm);
}

GeneratedCorpus build_deepfake_corpus(const pipe::Corpus& seeds, const LanguageModel& lm,
                                      const SamplerConfig& base, std::size_t count,
                                      const text::NormalizerConfig& norm, std::size_t threads) {
  base.validate(lm.vocab.size());
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!tok::split_words(text::normalize(seeds[i].normalized, norm)).empty()) eligible.push_back(i);
  }
  if (eligible.empty()) throw InputError("generate: no seed document survives normalization");
  if (count == 0) count = eligible.size();

  std::vector<std::size_t> chosen;
  if (count <= eligible.size()) {
    chosen = eligible;
    num::Rng rng(base.seed);
    rng.shuffle(std::span<std::size_t>(chosen));
    chosen.resize(count);
    std::sort(chosen.begin(), chosen.end());
  } else {
    for (std::size_t i = 0; i < count; ++i) chosen.push_back(eligible[i % eligible.size()]);
  }

  GeneratedCorpus out;
  out.records.resize(count);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        const pipe::Document& src = seeds[chosen[i]];
        GenerationRecord& r = out.records[i];
        r.index = i;
        r.source_id = src.id;
        r.seed_text = src.normalized;
        r.sampler = base;
        r.sampler.seed = base.seed ^ static_cast<std::uint64_t>(i);
        r.checkpoint_hash = lm.checkpoint_hash;
        r.generated = sample(lm, r.seed_text, r.sampler, norm);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (const auto& r : out.records) out.documents.push_back(generated_document(r, r.generated, norm));
  return out;
}

pipe::Document generated_document(const GenerationRecord& record, const std::string& text,
                                  const text::NormalizerConfig& norm) {
  pipe::Document doc;
  doc.id = "gen-" + std::to_string(record.index);
  doc.text = text;
  doc.normalized = text::normalize(text, norm);
  doc.label = pipe::Label::deepfake;
  doc.provenance = pipe::Provenance::generated;
  return doc;
}

}  // namespace dfd::gen
