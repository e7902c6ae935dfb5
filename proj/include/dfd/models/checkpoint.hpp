#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dfd/models/config.hpp"
#include "dfd/numerics/parameters.hpp"
#include "dfd/tokenizer/vocabulary.hpp"

namespace dfd::models {

inline constexpr int kCheckpointVersion = 1;

// A trained model: architecture, parameters, the vocabulary it was trained
// against and free-form training metadata (seed, epochs, losses).
struct Checkpoint {
  std::string name;  // classifier name, or "lm" for the generator
  nlohmann::json config;
  num::ParameterSet<float> params;
  std::string vocab_hash;
  std::string vocab_file;  // as given at save time; resolved against the checkpoint directory
  nlohmann::json metadata = nlohmann::json::object();
};

// File layout: a text manifest terminated by "blobs <bytes>\n", followed by
// the tensor blobs back to back.
//
//   dfd-checkpoint 1
//   name "lstm"
//   vocab_hash "…"
//   vocab_file "vocab.txt"
//   config {…}
//   metadata {…}
//   params 7
//   embedding 0 2000x50
//   …
//   blobs 1234
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws InputError when the file is missing, IntegrityError when corrupt.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a 64 over the serialized bytes.
std::string checkpoint_hash(const Checkpoint& ckpt);

// Throws IntegrityError naming `what` when the vocabulary differs from the
// one the checkpoint was trained with.
void require_vocab(const Checkpoint& ckpt, const tok::Vocabulary& vocab, const std::string& what);

// Throws IntegrityError unless `actual` has exactly the names and shapes
// of `expected`, in order.
void require_same_layout(const num::ParameterSet<float>& expected,
                         const num::ParameterSet<float>& actual, const std::string& what);

// Classifier view of a checkpoint; checks the parameter layout against the
// architecture its config describes.
struct LoadedClassifier {
  ClassifierConfig config;
  Checkpoint checkpoint;
};
LoadedClassifier as_classifier(Checkpoint ckpt);

// The vocabulary path stored in a checkpoint, relative to the checkpoint
// file's directory unless absolute.
std::filesystem::path resolve_vocab_path(const Checkpoint& ckpt,
                                         const std::filesystem::path& checkpoint_path);

}  // namespace dfd::models
