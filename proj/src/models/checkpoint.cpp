#include "dfd/models/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "dfd/error.hpp"
#include "dfd/hash.hpp"
#include "dfd/models/classifier.hpp"
#include "dfd/numerics/serialize.hpp"

namespace dfd::models {
namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "dfd-checkpoint";

std::string shape_field(const num::Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

num::Shape parse_shape(const std::string& text) {
  num::Shape s;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, 'x')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw IntegrityError("checkpoint: bad shape '" + text + "'");
    }
    s.push_back(std::stoull(part));
  }
  return s;
}

// "key rest-of-line"
std::string expect_field(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw IntegrityError("checkpoint: manifest ends before '" + key + "'");
  if (line.rfind(key + " ", 0) != 0) {
    throw IntegrityError("checkpoint: expected '" + key + "', found '" + line.substr(0, 40) + "'");
  }
  return line.substr(key.size() + 1);
}

json parse_json_field(const std::string& text, const std::string& key) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw IntegrityError("checkpoint: field '" + key + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::ostringstream blobs(std::ios::binary);
  std::ostringstream manifest;
  manifest << kMagic << ' ' << kCheckpointVersion << '\n'
           << "name " << json(ckpt.name).dump() << '\n'
           << "vocab_hash " << json(ckpt.vocab_hash).dump() << '\n'
           << "vocab_file " << json(ckpt.vocab_file).dump() << '\n'
           << "config " << ckpt.config.dump() << '\n'
           << "metadata " << ckpt.metadata.dump() << '\n'
           << "params " << ckpt.params.size() << '\n';
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& p = ckpt.params[i];
    manifest << p.name << ' ' << offset << ' ' << shape_field(p.value.shape()) << '\n';
    num::write_tensor(blobs, p.value);
    offset += num::tensor_blob_size(p.value);
  }
  manifest << "blobs " << offset << '\n';
  return manifest.str() + blobs.str();
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  std::string line;
  if (!std::getline(in, line) || line.rfind(std::string(kMagic) + " ", 0) != 0) {
    throw IntegrityError("not a checkpoint file");
  }
  if (line != std::string(kMagic) + " " + std::to_string(kCheckpointVersion)) {
    throw IntegrityError("unsupported checkpoint version: " + line);
  }
  Checkpoint ckpt;
  auto str_field = [&](const std::string& key) {
    const json j = parse_json_field(expect_field(in, key), key);
    if (!j.is_string()) throw IntegrityError("checkpoint: field '" + key + "' must be a string");
    return j.get<std::string>();
  };
  ckpt.name = str_field("name");
  ckpt.vocab_hash = str_field("vocab_hash");
  ckpt.vocab_file = str_field("vocab_file");
  ckpt.config = parse_json_field(expect_field(in, "config"), "config");
  ckpt.metadata = parse_json_field(expect_field(in, "metadata"), "metadata");

  struct Entry {
    std::string name;
    std::uint64_t offset;
    num::Shape shape;
  };
  const std::string count_text = expect_field(in, "params");
  std::vector<Entry> entries;
  const std::size_t count = std::stoull(count_text);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw IntegrityError("checkpoint: parameter table truncated");
    std::istringstream row(line);
    Entry e;
    std::string shape;
    if (!(row >> e.name >> e.offset >> shape)) {
      throw IntegrityError("checkpoint: malformed parameter entry '" + line + "'");
    }
    e.shape = parse_shape(shape);
    entries.push_back(std::move(e));
  }
  const std::uint64_t blob_bytes = std::stoull(expect_field(in, "blobs"));
  const auto start = static_cast<std::uint64_t>(in.tellg());
  if (bytes.size() - start != blob_bytes) {
    throw IntegrityError("checkpoint: expected " + std::to_string(blob_bytes) + " blob bytes, found " +
                         std::to_string(bytes.size() - start));
  }
  for (const auto& e : entries) {
    if (e.offset >= blob_bytes) throw IntegrityError("checkpoint: offset out of range for " + e.name);
    in.seekg(static_cast<std::streamoff>(start + e.offset));
    num::Tensor<float> t = num::read_tensor(in);
    if (t.shape() != e.shape) {
      throw IntegrityError("checkpoint: blob shape " + num::shape_str(t.shape()) + " for " + e.name +
                           " disagrees with manifest " + num::shape_str(e.shape));
    }
    try {
      ckpt.params.add(e.name, std::move(t));
    } catch (const UsageError&) {
      throw IntegrityError("checkpoint: parameter " + e.name + " appears twice");
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_checkpoint(buf.str());
  } catch (const IntegrityError& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  } catch (const std::exception& e) {
    throw IntegrityError(path.string() + ": malformed checkpoint (" + e.what() + ")");
  }
}

std::string checkpoint_hash(const Checkpoint& ckpt) { return fnv1a_hex(serialize_checkpoint(ckpt)); }

void require_vocab(const Checkpoint& ckpt, const tok::Vocabulary& vocab, const std::string& what) {
  if (ckpt.vocab_hash != vocab.hash()) {
    throw IntegrityError(what + ": vocabulary hash " + vocab.hash() +
                         " does not match the checkpoint's " + ckpt.vocab_hash);
  }
}

void require_same_layout(const num::ParameterSet<float>& expected,
                         const num::ParameterSet<float>& actual, const std::string& what) {
  if (expected.size() != actual.size()) {
    throw IntegrityError(what + ": expected " + std::to_string(expected.size()) + " parameters, found " +
                         std::to_string(actual.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].name != actual[i].name || expected[i].value.shape() != actual[i].value.shape()) {
      throw IntegrityError(what + ": parameter " + std::to_string(i) + " is " + actual[i].name + " " +
                           num::shape_str(actual[i].value.shape()) + ", expected " + expected[i].name +
                           " " + num::shape_str(expected[i].value.shape()));
    }
  }
}

LoadedClassifier as_classifier(Checkpoint ckpt) {
  ClassifierConfig cfg = [&] {
    try {
      return config_from_json(ckpt.name, ckpt.config);
    } catch (const ConfigError& e) {
      throw IntegrityError("checkpoint config: " + std::string(e.what()));
    }
  }();
  require_same_layout(init_classifier(cfg, 0), ckpt.params, "checkpoint " + ckpt.name);
  return {std::move(cfg), std::move(ckpt)};
}

std::filesystem::path resolve_vocab_path(const Checkpoint& ckpt,
                                         const std::filesystem::path& checkpoint_path) {
  std::filesystem::path v(ckpt.vocab_file);
  if (v.empty() || v.is_absolute()) return v;
  return checkpoint_path.parent_path() / v;
}

}  // namespace dfd::models
