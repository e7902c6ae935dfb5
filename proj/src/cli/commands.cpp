#include "dfd/cli/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "dfd/cli/run_config.hpp"
#include "dfd/error.hpp"
#include "dfd/generator/decoder.hpp"
#include "dfd/generator/sampler.hpp"
#include "dfd/models/checkpoint.hpp"
#include "dfd/pipeline/corpus.hpp"
#include "dfd/pipeline/report.hpp"
#include "dfd/pipeline/split.hpp"
#include "dfd/pipeline/synthetic.hpp"
#include "dfd/pipeline/training.hpp"
#include "dfd/tokenizer/bpe.hpp"
#include "dfd/tokenizer/encode.hpp"

namespace dfd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  std::vector<std::string> args;
  RunConfig config;
  std::ostream& out;
  std::ostream& err;
};

fs::path sidecar_path(const fs::path& artifact) { return fs::path(artifact.string() + ".config.json"); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
  if (!f) throw InputError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// The resolved config, seed and command line that produced `artifact`.
void write_sidecar(const Context& ctx, const std::string& command, const fs::path& artifact) {
  json args = json::array();
  for (const auto& a : ctx.args) args.push_back(a);
  write_json(sidecar_path(artifact), json{{"command", command},
                                          {"argv", args},
                                          {"seed", ctx.config.seed},
                                          {"config", ctx.config.to_json()}});
}

void require_distinct(const fs::path& output, const std::vector<fs::path>& inputs) {
  for (const auto& in : inputs) {
    if (!in.empty() && fs::exists(in) && fs::exists(output) && fs::equivalent(in, output)) {
      throw UsageError("output " + output.string() + " would overwrite input " + in.string());
    }
  }
}

// Path of `target` as stored in an artifact written to `artifact`: relative
// to the artifact's directory.
std::string relative_to_artifact(const fs::path& target, const fs::path& artifact) {
  const fs::path dir = fs::absolute(artifact).parent_path();
  return fs::relative(fs::absolute(target), dir).generic_string();
}

tok::Vocabulary vocab_for_checkpoint(const models::Checkpoint& ckpt, const fs::path& ckpt_path,
                                     const std::vector<fs::path>& candidates) {
  const std::string what = "checkpoint " + ckpt_path.string();
  if (!candidates.empty()) {
    for (const auto& c : candidates) {
      auto v = tok::Vocabulary::load(c);
      if (v.hash() == ckpt.vocab_hash) return v;
    }
    throw IntegrityError(what + ": none of the given vocabularies matches its vocabulary hash " +
                         ckpt.vocab_hash);
  }
  if (ckpt.vocab_file.empty()) {
    throw InputError(what + " does not name its vocabulary file; pass --vocab");
  }
  auto v = tok::Vocabulary::load(models::resolve_vocab_path(ckpt, ckpt_path));
  models::require_vocab(ckpt, v, what);
  return v;
}

std::size_t resolve_max_length(const RunConfig& cfg, const pipe::Corpus& corpus, const tok::Vocabulary& vocab) {
  if (cfg.tokenizer.max_length != 0) return cfg.tokenizer.max_length;
  return tok::max_length_for(pipe::normalized_texts(corpus), vocab);
}

// ---- corpus ----

json corpus_stats(const pipe::Corpus& corpus) {
  std::size_t human = 0, fake = 0, unlabeled = 0, empty = 0, longest = 0;
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& d : corpus) {
    if (!d.label) ++unlabeled;
    else if (*d.label == pipe::Label::human) ++human;
    else ++fake;
    const std::size_t n = tok::split_words(d.normalized).size();
    if (n == 0) ++empty;
    longest = std::max(longest, n);
    ++histogram[n];
  }
  json hist = json::array();
  for (const auto& [len, count] : histogram) hist.push_back({len, count});
  return json{{"documents", corpus.size()},
              {"labels", {{"human", human}, {"deepfake", fake}, {"unlabeled", unlabeled}}},
              {"empty_after_normalization", empty},
              {"token_length_histogram", hist},
              {"max_tokens", longest},
              {"max_length_candidate", std::min(longest, tok::kMaxLengthCap)}};
}

struct PrepareArgs {
  fs::path input, output, stats, split_train, split_test;
  std::string assume_label;
};

int cmd_corpus_prepare(Context& ctx, const PrepareArgs& a) {
  require_distinct(a.output, {a.input});
  auto corpus = pipe::read_corpus(a.input, ctx.config.normalize);
  if (!a.assume_label.empty()) {
    const auto label = pipe::parse_label(a.assume_label);
    for (auto& d : corpus) {
      if (!d.label) d.label = label;
    }
  }
  pipe::write_corpus(corpus, a.output);
  write_sidecar(ctx, "corpus prepare", a.output);
  const json stats = corpus_stats(corpus);
  const fs::path stats_path = a.stats.empty() ? fs::path(a.output.string() + ".stats.json") : a.stats;
  write_json(stats_path, stats);
  ctx.out << "documents " << stats["documents"] << " (human " << stats["labels"]["human"] << ", deepfake "
          << stats["labels"]["deepfake"] << ", unlabeled " << stats["labels"]["unlabeled"] << ")\n"
          << "empty after normalization " << stats["empty_after_normalization"] << "\n"
          << "max tokens " << stats["max_tokens"] << ", max_length candidate " << stats["max_length_candidate"]
          << "\n";
  if (a.split_train.empty() != a.split_test.empty()) {
    throw UsageError("--split-train and --split-test go together");
  }
  if (!a.split_train.empty()) {
    const auto split = pipe::split_corpus(corpus, ctx.config.split_spec());
    pipe::write_corpus(split.train, a.split_train);
    pipe::write_corpus(split.test, a.split_test);
    write_sidecar(ctx, "corpus prepare", a.split_train);
    write_sidecar(ctx, "corpus prepare", a.split_test);
    ctx.out << "split " << split.train.size() << " train / " << split.test.size() << " test (seed "
            << split.indices.seed_used << ")\n";
  }
  return kExitOk;
}

struct SyntheticArgs {
  fs::path output;
  std::size_t size = 2000;
  double separability = 1.0;
  std::size_t vocab_size = 500;
};

int cmd_corpus_synthetic(Context& ctx, const SyntheticArgs& a) {
  pipe::SyntheticSpec spec;
  spec.seed = ctx.config.seed;
  spec.size = a.size;
  spec.separability = a.separability;
  spec.vocab_size = a.vocab_size;
  const auto corpus = pipe::make_synthetic_corpus(spec);
  pipe::write_corpus(corpus, a.output);
  write_sidecar(ctx, "corpus synthetic", a.output);
  ctx.out << "wrote " << corpus.size() << " documents to " << a.output.string() << "\n";
  return kExitOk;
}

// ---- vocab ----

struct VocabArgs {
  fs::path corpus, output;
  std::string kind = "word";
};

int cmd_vocab_build(Context& ctx, const VocabArgs& a) {
  const auto corpus = pipe::read_corpus(a.corpus, ctx.config.normalize);
  const auto texts = pipe::normalized_texts(corpus);
  const auto& t = ctx.config.tokenizer;
  std::optional<tok::Vocabulary> vocab;
  if (a.kind == "word") vocab = tok::build_word_vocab(texts, t.word_min_freq, t.max_word_vocab);
  else if (a.kind == "subword") vocab = tok::train_bpe(texts, t.bpe_merges);
  else throw UsageError("--kind must be word or subword");
  vocab->save(a.output);
  write_sidecar(ctx, "vocab build", a.output);
  ctx.out << a.kind << " vocabulary: " << vocab->size() << " entries, hash " << vocab->hash() << "\n";
  return kExitOk;
}

// ---- lm ----

struct LmArgs {
  fs::path corpus, vocab, output;
};

int cmd_lm_train(Context& ctx, const LmArgs& a) {
  require_distinct(a.output, {a.corpus, a.vocab});
  const auto corpus = pipe::read_corpus(a.corpus, ctx.config.normalize);
  std::vector<std::string> texts;
  for (const auto& d : corpus) {
    if (d.label != pipe::Label::deepfake) texts.push_back(d.normalized);
  }
  const auto vocab = tok::Vocabulary::load(a.vocab);
  auto cfg = ctx.config.lm;
  cfg.vocab_size = vocab.size();
  const auto ckpt = gen::train_lm(texts, vocab, cfg, ctx.config.lm_train_spec(), relative_to_artifact(a.vocab, a.output));
  models::save_checkpoint(ckpt, a.output);
  write_sidecar(ctx, "lm train", a.output);
  ctx.out << "lm trained on " << texts.size() << " texts, " << ckpt.metadata.at("steps") << " steps, perplexity "
          << ckpt.metadata.at("perplexity").get<double>() << "\n";
  return kExitOk;
}

// ---- generate ----

struct GenerateArgs {
  fs::path corpus, lm, output, records, combined;
  std::vector<fs::path> vocab;
  std::size_t count = 0;
};

gen::LanguageModel load_lm(const fs::path& path, const std::vector<fs::path>& vocab) {
  auto ckpt = models::load_checkpoint(path);
  auto v = vocab_for_checkpoint(ckpt, path, vocab);
  return gen::as_language_model(ckpt, std::move(v));
}

int cmd_generate(Context& ctx, const GenerateArgs& a) {
  require_distinct(a.output, {a.corpus, a.lm});
  const auto seeds = pipe::read_corpus(a.corpus, ctx.config.normalize);
  const auto lm = load_lm(a.lm, a.vocab);
  const auto sampler = ctx.config.sampler_config();
  const auto result =
      gen::build_deepfake_corpus(seeds, lm, sampler, a.count, ctx.config.normalize, ctx.config.threads);
  pipe::write_corpus(result.documents, a.output);
  write_sidecar(ctx, "generate", a.output);
  const fs::path records = a.records.empty() ? fs::path(a.output.string() + ".records.jsonl") : a.records;
  gen::write_records(result.records, records);
  write_sidecar(ctx, "generate", records);
  ctx.out << "generated " << result.documents.size() << " deepfake documents\n";
  if (!sampler.within_standard_bounds()) {
    ctx.err << "warning: sampler length bounds [" << sampler.min_len << ", " << sampler.max_len
            << "] fall outside [" << gen::kStandardMinLen << ", " << gen::kStandardMaxLen << "]\n";
  }
  if (!a.combined.empty()) {
    pipe::Corpus all;
    for (auto d : seeds) {
      if (!d.label) d.label = pipe::Label::human;
      all.push_back(std::move(d));
    }
    all.insert(all.end(), result.documents.begin(), result.documents.end());
    num::Rng rng(ctx.config.seed);
    rng.shuffle(std::span<pipe::Document>(all));
    pipe::write_corpus(all, a.combined);
    write_sidecar(ctx, "generate", a.combined);
    ctx.out << "combined corpus: " << all.size() << " documents\n";
  }
  return kExitOk;
}

struct ReplayArgs {
  fs::path records, lm, output;
  std::vector<fs::path> vocab;
};

int cmd_replay(Context& ctx, const ReplayArgs& a) {
  require_distinct(a.output, {a.records, a.lm});
  const auto records = gen::read_records(a.records);
  const auto lm = load_lm(a.lm, a.vocab);
  pipe::Corpus docs;
  std::size_t changed = 0;
  for (const auto& r : records) {
    const std::string text = gen::replay(lm, r, ctx.config.normalize);
    if (text != r.generated) ++changed;
    docs.push_back(gen::generated_document(r, text, ctx.config.normalize));
  }
  pipe::write_corpus(docs, a.output);
  write_sidecar(ctx, "generate replay", a.output);
  ctx.out << "replayed " << records.size() << " records, " << changed << " differ from the recorded text\n";
  if (changed != 0) throw IntegrityError("replay diverged from the records on " + std::to_string(changed) + " texts");
  return kExitOk;
}

// ---- train ----

struct TrainArgs {
  std::string model;
  fs::path corpus, vocab, output, history;
};

int cmd_train(Context& ctx, const TrainArgs& a) {
  require_distinct(a.output, {a.corpus, a.vocab});
  const auto corpus = pipe::read_corpus(a.corpus, ctx.config.normalize);
  const auto vocab = tok::Vocabulary::load(a.vocab);
  const std::size_t max_length = resolve_max_length(ctx.config, corpus, vocab);
  const auto cfg = ctx.config.classifier(a.model, vocab.size(), max_length);
  const auto data = pipe::encode_dataset(corpus, vocab, max_length);
  const auto start = std::chrono::steady_clock::now();
  const auto result =
      pipe::train_classifier(cfg, data, ctx.config.train_spec(), vocab, relative_to_artifact(a.vocab, a.output));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  models::save_checkpoint(result.checkpoint, a.output);
  write_sidecar(ctx, "train", a.output);
  const fs::path history = a.history.empty() ? fs::path(a.output.string() + ".history.json") : a.history;
  write_json(history, json{{"model", a.model},
                           {"epochs", result.epochs_run},
                           {"best_epoch", result.best_epoch},
                           {"history", pipe::history_to_json(result.history)}});
  ctx.out << a.model << ": " << result.epochs_run << " epochs";
  if (result.best_epoch != 0) ctx.out << " (best " << result.best_epoch << ")";
  ctx.out << ", final train loss " << result.history.back().train_loss << ", " << seconds << " s\n";
  return kExitOk;
}

// ---- evaluate / report ----

struct EvaluateArgs {
  std::vector<fs::path> checkpoints, vocab;
  fs::path corpus, output;
  std::string reference;
};

int cmd_evaluate(Context& ctx, const EvaluateArgs& a) {
  const auto test = pipe::read_corpus(a.corpus, ctx.config.normalize);
  std::vector<pipe::ModelResult> rows;
  std::map<std::string, int> seen;
  for (const auto& path : a.checkpoints) {
    auto ckpt = models::load_checkpoint(path);
    const auto vocab = vocab_for_checkpoint(ckpt, path, a.vocab);
    const auto model = models::as_classifier(std::move(ckpt));
    std::string name = model.checkpoint.name;
    if (++seen[name] > 1) name += "#" + std::to_string(seen[name]);
    rows.push_back({name, pipe::evaluate(model, vocab, test, ctx.config.threads)});
  }
  pipe::ComparisonReport report;
  if (!a.reference.empty()) {
    report = pipe::compare(std::move(rows), a.reference);
  } else {
    report.rows = std::move(rows);
  }
  ctx.out << pipe::render_table(report);
  if (!a.output.empty()) {
    write_json(a.output, pipe::report_to_json(report));
    write_sidecar(ctx, "evaluate", a.output);
  }
  return kExitOk;
}

struct ReportArgs {
  fs::path input, output;
  std::string format = "table";
  std::string reference;
};

int cmd_report(Context& ctx, const ReportArgs& a) {
  std::ifstream in(a.input);
  if (!in) throw InputError("report not found: " + a.input.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(a.input.string() + ": " + e.what());
  }
  auto report = pipe::report_from_json(j);
  if (!a.reference.empty()) report = pipe::compare(std::move(report.rows), a.reference);
  std::string text;
  if (a.format == "table") text = pipe::render_table(report);
  else if (a.format == "json") text = pipe::report_to_json(report).dump(2) + "\n";
  else throw UsageError("--format must be table or json");
  if (a.output.empty()) {
    ctx.out << text;
  } else {
    require_distinct(a.output, {a.input});
    write_text(a.output, text);
    write_sidecar(ctx, "report", a.output);
  }
  return kExitOk;
}

// ---- detect ----

struct DetectArgs {
  fs::path checkpoint, input, output;
  std::vector<fs::path> vocab;
  std::vector<std::string> texts;
};

int cmd_detect(Context& ctx, const DetectArgs& a) {
  if (a.texts.empty() == a.input.empty()) throw UsageError("give either --text or --input");
  auto ckpt = models::load_checkpoint(a.checkpoint);
  const auto vocab = vocab_for_checkpoint(ckpt, a.checkpoint, a.vocab);
  const auto model = models::as_classifier(std::move(ckpt));
  const std::size_t max_length = pipe::model_max_length(model.config);

  std::vector<std::string> inputs = a.texts;
  if (!a.input.empty()) {
    std::ifstream in(a.input);
    if (!in) throw InputError("input not found: " + a.input.string());
    std::string line;
    while (std::getline(in, line)) {
      // A line is raw text, or a corpus-style JSON object with "text".
      if (!line.empty() && line.front() == '{') {
        const json j = json::parse(line, nullptr, false);
        if (j.is_object() && j.contains("text") && j["text"].is_string()) line = j["text"].get<std::string>();
      }
      inputs.push_back(line);
    }
  }

  std::vector<std::string> normalized;
  std::vector<tok::TokenSequence> seqs;
  std::vector<std::size_t> slot(inputs.size(), SIZE_MAX);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    normalized.push_back(text::normalize(inputs[i], ctx.config.normalize));
    if (normalized.back().empty()) {
      ctx.err << "warning: input " << i + 1 << " is empty after normalization; label indeterminate\n";
      continue;
    }
    slot[i] = seqs.size();
    seqs.push_back(tok::encode(normalized.back(), vocab, max_length));
  }
  const auto probs = pipe::predict(model, seqs, 256, ctx.config.threads);

  std::ostringstream lines;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    json r{{"input", inputs[i]}, {"normalized", normalized[i]}};
    if (slot[i] == SIZE_MAX) {
      r["label"] = "indeterminate";
      r["probabilities"] = nullptr;
    } else {
      const auto& p = probs[slot[i]];
      r["label"] = pipe::to_string(p[1] > p[0] ? pipe::Label::deepfake : pipe::Label::human);
      r["probabilities"] = {{"human", p[0]}, {"deepfake", p[1]}};
    }
    lines << r.dump(-1, ' ', false, json::error_handler_t::replace) << "\n";
  }
  if (a.output.empty()) {
    ctx.out << lines.str();
  } else {
    require_distinct(a.output, {a.input, a.checkpoint});
    write_text(a.output, lines.str());
    write_sidecar(ctx, "detect", a.output);
  }
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return kExitUsage;
  return kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detects machine-generated Arabic short texts with recurrent and transformer classifiers.", "dfd"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every command and config flag");

  std::optional<std::string> config_file;
  app.add_option("--config", config_file, "Config file (JSON) or artifact sidecar; default $" +
                                              std::string(kConfigEnvVar));
  std::map<std::string, std::string> flag_text;
  for (const auto& [dotted, value] : config_paths()) {
    const std::string shown = dotted.rfind("model.", 0) == 0 ? "model preset" : value.dump();
    app.add_option("--" + flag_name(dotted), flag_text[dotted], "config " + dotted + " (default " + shown + ")")
        ->group("Config");
  }

  PrepareArgs prepare;
  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus preparation")->require_subcommand(1);
  auto* prep = corpus_cmd->add_subcommand("prepare", "Normalize a line-delimited JSON corpus and report stats");
  prep->add_option("--input", prepare.input, "Input corpus (JSONL)")->required();
  prep->add_option("--output", prepare.output, "Normalized corpus (JSONL)")->required();
  prep->add_option("--stats", prepare.stats, "Stats JSON (default <output>.stats.json)");
  prep->add_option("--assume-label", prepare.assume_label, "Label given to unlabeled documents")
      ->check(CLI::IsMember({"human", "deepfake"}));
  prep->add_option("--split-train", prepare.split_train, "Also write the train side of the split");
  prep->add_option("--split-test", prepare.split_test, "Also write the test side of the split");

  SyntheticArgs synthetic;
  auto* syn = corpus_cmd->add_subcommand("synthetic", "Write a seeded two-source toy corpus");
  syn->add_option("--output", synthetic.output, "Corpus (JSONL)")->required();
  syn->add_option("--size", synthetic.size, "Documents")->capture_default_str();
  syn->add_option("--separability", synthetic.separability, "Distance between the sources, 0..1")
      ->capture_default_str();
  syn->add_option("--vocab-size", synthetic.vocab_size, "Distinct words")->capture_default_str();

  VocabArgs vocab;
  auto* vocab_cmd = app.add_subcommand("vocab", "Vocabularies")->require_subcommand(1);
  auto* vb = vocab_cmd->add_subcommand("build", "Build a word or subword vocabulary");
  vb->add_option("--corpus", vocab.corpus, "Training corpus (JSONL)")->required();
  vb->add_option("--kind", vocab.kind, "word or subword")->check(CLI::IsMember({"word", "subword"}))
      ->capture_default_str();
  vb->add_option("--output", vocab.output, "Vocabulary file")->required();

  LmArgs lm;
  auto* lm_cmd = app.add_subcommand("lm", "Generator language model")->require_subcommand(1);
  auto* lt = lm_cmd->add_subcommand("train", "Train the decoder language model");
  lt->add_option("--corpus", lm.corpus, "Human corpus (JSONL)")->required();
  lt->add_option("--vocab", lm.vocab, "Word vocabulary")->required();
  lt->add_option("--output", lm.output, "Checkpoint")->required();

  GenerateArgs generate;
  auto* gen_cmd = app.add_subcommand("generate", "Sample deepfake texts from seed documents");
  gen_cmd->add_option("--corpus", generate.corpus, "Seed corpus (JSONL)");
  gen_cmd->add_option("--lm", generate.lm, "Language model checkpoint");
  gen_cmd->add_option("--vocab", generate.vocab, "Vocabulary (default: from the checkpoint)");
  gen_cmd->add_option("--count", generate.count, "Documents to generate (0: one per seed)");
  gen_cmd->add_option("--output", generate.output, "Deepfake corpus (JSONL)");
  gen_cmd->add_option("--records", generate.records, "Generation records (default <output>.records.jsonl)");
  gen_cmd->add_option("--combined", generate.combined, "Also write seeds + generated, shuffled");

  ReplayArgs replay;
  auto* rp = gen_cmd->add_subcommand("replay", "Regenerate a corpus from its generation records");
  rp->add_option("--records", replay.records, "Generation records")->required();
  rp->add_option("--lm", replay.lm, "Language model checkpoint")->required();
  rp->add_option("--vocab", replay.vocab, "Vocabulary (default: from the checkpoint)");
  rp->add_option("--output", replay.output, "Corpus (JSONL)")->required();

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Train a detector");
  tr->add_option("--model", train.model, "lstm, bilstm, gru, bigru or transformer")->required();
  tr->add_option("--corpus", train.corpus, "Labeled training corpus (JSONL)")->required();
  tr->add_option("--vocab", train.vocab, "Vocabulary (subword for the transformer)")->required();
  tr->add_option("--output", train.output, "Checkpoint")->required();
  tr->add_option("--history", train.history, "Per-epoch history (default <output>.history.json)");

  EvaluateArgs evaluate;
  auto* ev = app.add_subcommand("evaluate", "Score checkpoints on a labeled corpus");
  ev->add_option("--checkpoint", evaluate.checkpoints, "Checkpoint (repeatable)")->required();
  ev->add_option("--corpus", evaluate.corpus, "Labeled test corpus (JSONL)")->required();
  ev->add_option("--vocab", evaluate.vocab, "Vocabularies (default: from each checkpoint)");
  ev->add_option("--reference", evaluate.reference, "Model the accuracy deltas are taken against");
  ev->add_option("--output", evaluate.output, "Report JSON");

  DetectArgs detect;
  auto* dt = app.add_subcommand("detect", "Label single texts or a file of texts");
  dt->add_option("--checkpoint", detect.checkpoint, "Checkpoint")->required();
  dt->add_option("--vocab", detect.vocab, "Vocabulary (default: from the checkpoint)");
  dt->add_option("--text", detect.texts, "Text to label (repeatable)");
  dt->add_option("--input", detect.input, "File with one text or JSON object per line");
  dt->add_option("--output", detect.output, "Results (JSONL; default stdout)");

  ReportArgs report;
  auto* rep = app.add_subcommand("report", "Render a saved report");
  rep->add_option("--input", report.input, "Report JSON")->required();
  rep->add_option("--format", report.format, "table or json")->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();
  rep->add_option("--reference", report.reference, "Recompute deltas against this model");
  rep->add_option("--output", report.output, "Output file (default stdout)");

  std::string rerun_path;
  auto* rr = app.add_subcommand("rerun", "Re-execute the command recorded in an artifact sidecar");
  rr->add_option("sidecar", rerun_path, "<artifact>.config.json")->required();

  for (auto* sub : {corpus_cmd, prep, syn, vocab_cmd, vb, lm_cmd, lt, gen_cmd, rp, tr, ev, dt, rep, rr}) {
    sub->fallthrough();
  }

  std::vector<std::string> argv_store{"dfd"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (rr->parsed()) {
      const json sidecar = [&] {
        std::ifstream in(rerun_path);
        if (!in) throw InputError("sidecar not found: " + rerun_path);
        return json::parse(in);
      }();
      if (!sidecar.contains("argv") || !sidecar.contains("config")) {
        throw InputError(rerun_path + " is not an artifact sidecar");
      }
      std::vector<std::string> again;
      const auto recorded = sidecar.at("argv").get<std::vector<std::string>>();
      for (std::size_t i = 0; i < recorded.size(); ++i) {
        if (recorded[i] == "--config") {
          ++i;
          continue;
        }
        if (recorded[i].rfind("--config=", 0) == 0) continue;
        again.push_back(recorded[i]);
      }
      again.push_back("--config");
      again.push_back(rerun_path);
      return run(again, out, err);
    }

    std::map<std::string, std::string> flags;
    for (const auto& [dotted, value] : config_paths()) {
      if (app.count("--" + flag_name(dotted)) > 0) flags[dotted] = flag_text[dotted];
    }
    std::optional<fs::path> file;
    if (config_file) file = *config_file;
    Context ctx{args, resolve_config(file, flags), out, err};

    if (prep->parsed()) return cmd_corpus_prepare(ctx, prepare);
    if (syn->parsed()) return cmd_corpus_synthetic(ctx, synthetic);
    if (vb->parsed()) return cmd_vocab_build(ctx, vocab);
    if (lt->parsed()) return cmd_lm_train(ctx, lm);
    if (rp->parsed()) return cmd_replay(ctx, replay);
    if (gen_cmd->parsed()) {
      if (generate.corpus.empty() || generate.lm.empty() || generate.output.empty()) {
        throw UsageError("generate needs --corpus, --lm and --output");
      }
      return cmd_generate(ctx, generate);
    }
    if (tr->parsed()) return cmd_train(ctx, train);
    if (ev->parsed()) return cmd_evaluate(ctx, evaluate);
    if (dt->parsed()) return cmd_detect(ctx, detect);
    if (rep->parsed()) return cmd_report(ctx, report);
    throw UsageError("no command given");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace dfd::cli
