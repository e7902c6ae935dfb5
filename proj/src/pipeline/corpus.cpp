#include "dfd/pipeline/corpus.hpp"

#include <fstream>
#include <sstream>

#include "dfd/error.hpp"

namespace dfd::pipe {

std::string to_string(Label label) { return label == Label::human ? "human" : "deepfake"; }

std::string to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::crawl: return "crawl";
    case Provenance::generated: return "generated";
    case Provenance::synthetic_test: return "synthetic-test";
  }
  return "crawl";
}

Label parse_label(const std::string& s) {
  if (s == "human") return Label::human;
  if (s == "deepfake") return Label::deepfake;
  throw InputError("unknown label \"" + s + "\" (expected human or deepfake)");
}

Provenance parse_provenance(const std::string& s) {
  if (s == "crawl") return Provenance::crawl;
  if (s == "generated") return Provenance::generated;
  if (s == "synthetic-test") return Provenance::synthetic_test;
  throw InputError("unknown provenance \"" + s + "\" (expected crawl, generated or synthetic-test)");
}

nlohmann::json to_json(const Document& doc) {
  nlohmann::json j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  j["normalized"] = doc.normalized;
  if (doc.label) j["label"] = to_string(*doc.label);
  j["provenance"] = to_string(doc.provenance);
  return j;
}

namespace {

std::string string_field(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string()) throw InputError(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace

Document document_from_json(const nlohmann::json& j, const text::NormalizerConfig& cfg) {
  if (!j.is_object()) throw InputError("corpus line is not a JSON object");
  if (!j.contains("text")) throw InputError("missing field \"text\"");
  Document doc;
  doc.text = string_field(j, "text");
  if (j.contains("id")) {
    const auto& id = j.at("id");
    if (id.is_string()) {
      doc.id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      doc.id = std::to_string(id.get<long long>());
    } else {
      throw InputError("field \"id\" must be a string or integer");
    }
  }
  doc.normalized = j.contains("normalized") ? string_field(j, "normalized") : text::normalize(doc.text, cfg);
  if (j.contains("label") && !j.at("label").is_null()) {
    const std::string label = string_field(j, "label");
    if (!label.empty()) doc.label = parse_label(label);
  }
  if (j.contains("provenance")) doc.provenance = parse_provenance(string_field(j, "provenance"));
  return doc;
}

Corpus read_corpus(const std::filesystem::path& path, const text::NormalizerConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus " + path.string());
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Document doc = document_from_json(nlohmann::json::parse(line), cfg);
      if (doc.id.empty()) doc.id = std::to_string(line_no);
      corpus.push_back(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (corpus.empty()) throw InputError("corpus " + path.string() + " is empty");
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& doc : corpus) out << to_json(doc).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

void require_labels(const Corpus& corpus, const std::string& what) {
  for (const auto& doc : corpus) {
    if (!doc.label) throw InputError(what + ": document " + doc.id + " has no label");
  }
}

std::vector<std::string> normalized_texts(const Corpus& corpus) {
  std::vector<std::string> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) out.push_back(doc.normalized);
  return out;
}

}  // namespace dfd::pipe
