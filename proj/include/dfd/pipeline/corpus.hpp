#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfd/normalize/normalizer.hpp"

namespace dfd::pipe {

enum class Label { human, deepfake };
enum class Provenance { crawl, generated, synthetic_test };

std::string to_string(Label label);
std::string to_string(Provenance provenance);
// InputError on anything else.
Label parse_label(const std::string& s);
Provenance parse_provenance(const std::string& s);

// Class index used by the classifiers: human = 0, deepfake = 1.
inline std::size_t class_index(Label label) { return label == Label::deepfake ? 1 : 0; }
inline Label label_of_class(std::size_t c) { return c == 1 ? Label::deepfake : Label::human; }

struct Document {
  std::string id;
  std::string text;
  std::string normalized;
  std::optional<Label> label;
  Provenance provenance = Provenance::crawl;

  bool operator==(const Document&) const = default;
};

using Corpus = std::vector<Document>;

// One line of the corpus file:
//   {"id": "...", "text": "...", "normalized": "...", "label": "human", "provenance": "crawl"}
// `label` may be absent or empty (unlabeled); `normalized` is recomputed
// when absent; `provenance` defaults to "crawl". Extra fields are ignored.
nlohmann::json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j, const text::NormalizerConfig& cfg);

// InputError naming the 1-based line number for malformed lines; empty
// (whitespace-only) lines are skipped. An empty file is an InputError.
Corpus read_corpus(const std::filesystem::path& path, const text::NormalizerConfig& cfg = {});
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Throws InputError unless every document carries a label.
void require_labels(const Corpus& corpus, const std::string& what);

std::vector<std::string> normalized_texts(const Corpus& corpus);

}  // namespace dfd::pipe
