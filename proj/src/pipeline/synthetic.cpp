#include "dfd/pipeline/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <map>
#include <numeric>
#include <set>

#include "dfd/error.hpp"
#include "dfd/normalize/utf8.hpp"
#include "dfd/numerics/rng.hpp"
#include "dfd/tokenizer/encode.hpp"

namespace dfd::pipe {

namespace {

std::vector<char32_t> letters() {
  std::vector<char32_t> out;
  for (char32_t c = 0x0628; c <= 0x063A; ++c) out.push_back(c);
  for (char32_t c = 0x0641; c <= 0x064A; ++c) out.push_back(c);
  out.push_back(0x0627);
  return out;
}

std::vector<std::string> random_words(std::size_t n, num::Rng& rng) {
  const auto alphabet = letters();
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < n) {
    std::u32string w(2 + rng.uniform_int(5), U' ');
    for (auto& c : w) c = alphabet[rng.uniform_int(alphabet.size())];
    std::string s = text::utf8_encode(w);
    if (seen.insert(s).second) words.push_back(std::move(s));
  }
  return words;
}

// Cumulative Zipf mass over the vocabulary in the given rank order.
std::vector<double> zipf(const std::vector<std::size_t>& ranking, double exponent) {
  std::vector<double> p(ranking.size());
  for (std::size_t r = 0; r < ranking.size(); ++r) p[ranking[r]] = 1.0 / std::pow(double(r + 1), exponent);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return p;
}

std::size_t draw(const std::vector<double>& cdf, num::Rng& rng) {
  const double u = rng.uniform() * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

std::vector<std::size_t> ranking(std::size_t n, num::Rng& rng) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(r));
  return r;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.size < 20) throw ConfigError("synthetic corpus: size must be at least 20");
  if (!(spec.separability >= 0.0 && spec.separability <= 1.0)) {
    throw ConfigError("synthetic corpus: separability must lie in [0, 1]");
  }
  if (spec.vocab_size < 2 || spec.min_words == 0 || spec.min_words > spec.max_words) {
    throw ConfigError("synthetic corpus: bad vocabulary size or length bounds");
  }
  num::Rng rng(spec.seed);
  const auto words = random_words(spec.vocab_size, rng);
  const auto human = zipf(ranking(spec.vocab_size, rng), spec.zipf_exponent);
  const auto shifted = zipf(ranking(spec.vocab_size, rng), spec.zipf_exponent);
  std::vector<double> human_cdf(human.size()), fake_cdf(human.size());
  double ch = 0.0, cf = 0.0;
  for (std::size_t i = 0; i < human.size(); ++i) {
    ch += human[i];
    cf += (1.0 - spec.separability) * human[i] + spec.separability * shifted[i];
    human_cdf[i] = ch;
    fake_cdf[i] = cf;
  }

  Corpus corpus;
  corpus.reserve(spec.size);
  for (std::size_t i = 0; i < spec.size; ++i) {
    const Label label = i % 2 == 0 ? Label::human : Label::deepfake;
    const auto& cdf = label == Label::human ? human_cdf : fake_cdf;
    const std::size_t n = spec.min_words + rng.uniform_int(spec.max_words - spec.min_words + 1);
    std::string text;
    for (std::size_t w = 0; w < n; ++w) {
      if (w) text += ' ';
      text += words[draw(cdf, rng)];
    }
    Document d;
    d.text = text;
    d.normalized = std::move(text);
    d.label = label;
    d.provenance = Provenance::synthetic_test;
    corpus.push_back(std::move(d));
  }
  rng.shuffle(std::span<Document>(corpus));
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].id = "syn-" + std::to_string(i);
  return corpus;
}

Corpus make_synthetic_corpus(std::uint64_t seed, std::size_t size, double separability) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.size = size;
  spec.separability = separability;
  return make_synthetic_corpus(spec);
}

double unigram_oracle_accuracy(const Corpus& train, const Corpus& test) {
  require_labels(train, "unigram oracle");
  require_labels(test, "unigram oracle");
  if (test.empty()) throw InputError("unigram oracle: empty test set");
  std::map<std::string, std::array<double, 2>> counts;
  std::array<double, 2> totals{0, 0}, docs{0, 0};
  for (const auto& d : train) {
    const std::size_t c = class_index(*d.label);
    docs[c] += 1;
    for (const auto& w : tok::split_words(d.normalized)) {
      counts[w][c] += 1;
      totals[c] += 1;
    }
  }
  const double v = static_cast<double>(counts.size()) + 1.0;  // + one unseen-word slot
  std::size_t correct = 0;
  for (const auto& d : test) {
    std::array<double, 2> score{std::log(docs[0] + 1), std::log(docs[1] + 1)};
    for (const auto& w : tok::split_words(d.normalized)) {
      const auto it = counts.find(w);
      for (std::size_t c = 0; c < 2; ++c) {
        const double n = it == counts.end() ? 0.0 : it->second[c];
        score[c] += std::log((n + 1.0) / (totals[c] + v));
      }
    }
    const std::size_t pred = score[1] > score[0] ? 1 : 0;
    if (pred == class_index(*d.label)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace dfd::pipe
