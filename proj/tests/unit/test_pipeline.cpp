#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "dfd/error.hpp"
#include "dfd/models/checkpoint.hpp"
#include "dfd/numerics/rng.hpp"
#include "dfd/pipeline/corpus.hpp"
#include "dfd/pipeline/experiment.hpp"
#include "dfd/pipeline/metrics.hpp"
#include "dfd/pipeline/report.hpp"
#include "dfd/pipeline/split.hpp"
#include "dfd/pipeline/synthetic.hpp"
#include "dfd/pipeline/training.hpp"
#include "dfd/tokenizer/bpe.hpp"

namespace dfd::pipe {
namespace {

namespace fs = std::filesystem;

std::vector<Label> alternating(std::size_t n) {
  std::vector<Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(i % 2 ? Label::deepfake : Label::human);
  return out;
}

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dfd_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---- corpus ----

TEST(Corpus, ReadNormalizesAndKeepsUnlabeled) {
  const auto dir = temp_dir("read");
  std::ofstream(dir / "c.jsonl") << R"({"id":"a","text":"مُحَمَّد 123","label":"human"})" "\n\n"
                                 << R"({"text":"كتاب","label":"","extra":1})" "\n";
  const auto c = read_corpus(dir / "c.jsonl");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].normalized, "محمد");
  EXPECT_EQ(c[0].label, Label::human);
  EXPECT_EQ(c[1].id, "3");
  EXPECT_FALSE(c[1].label.has_value());
  EXPECT_EQ(c[1].provenance, Provenance::crawl);
}

TEST(Corpus, MalformedLineNamesTheLine) {
  const auto dir = temp_dir("bad");
  std::ofstream(dir / "c.jsonl") << R"({"text":"ا"})" "\n" << "{oops\n";
  try {
    read_corpus(dir / "c.jsonl");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "empty.jsonl");
  EXPECT_THROW(read_corpus(dir / "empty.jsonl"), InputError);
  std::ofstream(dir / "label.jsonl") << R"({"text":"ا","label":"robot"})" "\n";
  EXPECT_THROW(read_corpus(dir / "label.jsonl"), InputError);
}

TEST(Corpus, WriteReadRoundTrip) {
  const auto dir = temp_dir("rt");
  const auto c = make_synthetic_corpus(3, 40, 0.5);
  write_corpus(c, dir / "c.jsonl");
  EXPECT_EQ(read_corpus(dir / "c.jsonl"), c);
}

// ---- split ----

TEST(Split, FullCorpusSizes) {
  EXPECT_EQ(train_size(10, 0.8), 8u);
  EXPECT_EQ(train_size(7708, 0.8), 6166u);
  const auto s = split_indices(alternating(10), {0.8, 1});
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(Split, PartitionAndDeterminismFuzz) {
  num::Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(9999);
    std::vector<Label> labels(n);
    for (auto& l : labels) l = rng.bernoulli(0.3) ? Label::deepfake : Label::human;
    labels[0] = Label::human;
    labels[1] = Label::deepfake;
    const SplitSpec spec{0.8, rng.next_u64()};
    const auto a = split_indices(labels, spec);
    ASSERT_EQ(a.train.size(), static_cast<std::size_t>(std::floor(0.8 * double(n) + 1e-9)));
    ASSERT_EQ(a.train.size() + a.test.size(), n);
    std::vector<std::size_t> all = a.train;
    all.insert(all.end(), a.test.begin(), a.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(all[i], i);
    const auto b = split_indices(labels, spec);
    ASSERT_EQ(a.train, b.train);
    ASSERT_EQ(a.test, b.test);
  }
}

TEST(Split, RetryPutsBothLabelsOnBothSides) {
  // One deepfake among 10: most shuffles leave it in train.
  std::vector<Label> labels(10, Label::human);
  labels[4] = Label::deepfake;
  labels[7] = Label::deepfake;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = split_indices(labels, {0.8, seed});
    std::set<Label> train, test;
    for (auto i : s.train) train.insert(labels[i]);
    for (auto i : s.test) test.insert(labels[i]);
    EXPECT_EQ(train.size(), 2u);
    EXPECT_EQ(test.size(), 2u);
    EXPECT_GE(s.seed_used, seed);
  }
}

TEST(Split, Errors) {
  EXPECT_THROW(split_indices({Label::human}, {}), InputError);
  EXPECT_THROW(split_indices(std::vector<Label>(5, Label::human), {}), InputError);
  EXPECT_THROW(split_indices(alternating(10), {1.5, 0}), ConfigError);
}

// ---- early stopping ----

TEST(EarlyStopping, HandDerivedSequence) {
  const std::vector<double> val{1.0, 0.9, 0.95, 0.96, 0.97, 0.98};
  num::ParameterSet<float> p;
  p.add("w", num::Tensor<float>({1}));
  std::size_t i = 0;
  const auto run = run_with_early_stopping(
      p, 50, 4,
      [&](std::size_t epoch) {
        p.get("w").value.data()[0] = static_cast<float>(epoch);
        return 0.0;
      },
      [&] { return val[i++]; });
  EXPECT_EQ(run.history.size(), 6u);
  EXPECT_TRUE(run.stopped_early);
  EXPECT_EQ(run.best_epoch, 2u);
  EXPECT_EQ(p.get("w").value.data()[0], 2.0f);
}

TEST(EarlyStopping, MonotoneRunsToTheCap) {
  num::ParameterSet<float> p;
  p.add("w", num::Tensor<float>({1}));
  double loss = 1.0;
  const auto run = run_with_early_stopping(
      p, 7, 4, [&](std::size_t e) { p.get("w").value.data()[0] = float(e); return 0.0; },
      [&] { return loss *= 0.5; });
  EXPECT_EQ(run.history.size(), 7u);
  EXPECT_FALSE(run.stopped_early);
  EXPECT_EQ(run.best_epoch, 7u);
  EXPECT_EQ(p.get("w").value.data()[0], 7.0f);
}

TEST(EarlyStopping, ContractFuzz) {
  num::Rng rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t patience = 1 + rng.uniform_int(6);
    EarlyStopping rule(patience);
    std::size_t epoch = 0;
    while (!rule.should_stop() && epoch < 60) rule.update(++epoch, rng.uniform());
    ASSERT_LE(epoch, rule.best_epoch() + patience);
    if (rule.should_stop()) {
      ASSERT_EQ(epoch, rule.best_epoch() + patience);
    }
  }
  EXPECT_THROW(EarlyStopping(0), ConfigError);
}

// ---- metrics ----

TEST(Metrics, PerfectPredictions) {
  const auto truth = alternating(20);
  const auto m = Metrics::from_confusion(count_confusion(truth, truth));
  EXPECT_EQ(m.accuracy, 100.0);
  EXPECT_EQ(m.precision, 100.0);
  EXPECT_EQ(m.recall, 100.0);
  EXPECT_EQ(m.f1, 100.0);
}

TEST(Metrics, AllHumanOnBalancedSet) {
  const auto truth = alternating(20);
  const std::vector<Label> pred(20, Label::human);
  const auto m = Metrics::from_confusion(count_confusion(pred, truth));
  EXPECT_EQ(m.accuracy, 50.0);
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Metrics, ParallelCountEqualsBruteForce) {
  num::Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng.uniform_int(3000);
    std::vector<Label> pred(n), truth(n);
    Confusion brute;
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng.bernoulli(0.5) ? Label::deepfake : Label::human;
      truth[i] = rng.bernoulli(0.5) ? Label::deepfake : Label::human;
      const bool p = pred[i] == Label::deepfake, t = truth[i] == Label::deepfake;
      brute.tp += p && t;
      brute.fp += p && !t;
      brute.fn += !p && t;
      brute.tn += !p && !t;
    }
    ASSERT_EQ(count_confusion(pred, truth, 1 + rng.uniform_int(8)), brute);
  }
  const std::vector<Label> one{Label::human};
  EXPECT_THROW(count_confusion(one, std::vector<Label>{}), ShapeError);
}

TEST(Metrics, IdentitiesFromConfusion) {
  const Confusion cm{30, 5, 7, 58};
  const auto m = Metrics::from_confusion(cm);
  EXPECT_DOUBLE_EQ(m.accuracy, 100.0 * 88 / 100);
  EXPECT_DOUBLE_EQ(m.precision, 100.0 * 30 / 35);
  EXPECT_DOUBLE_EQ(m.recall, 100.0 * 30 / 37);
  EXPECT_DOUBLE_EQ(m.f1, f1_from_pr(m.precision, m.recall));
  const auto back = Metrics::from_json(m.to_json());
  EXPECT_EQ(back.confusion, cm);
  EXPECT_EQ(back.accuracy, m.accuracy);
}

TEST(F1, TableRows) {
  EXPECT_EQ(format_percent(f1_from_pr(92.8, 96.8)), "94.8");
  EXPECT_EQ(format_percent(f1_from_pr(96.9, 95.2)), "96.0");
  EXPECT_EQ(format_percent(f1_from_pr(91.2, 98.2)), "94.6");
  EXPECT_EQ(format_percent(f1_from_pr(93.7, 97.8)), "95.7");
  EXPECT_EQ(format_percent(f1_from_pr(98.9, 98.5)), "98.7");
  EXPECT_EQ(f1_from_pr(0.0, 0.0), 0.0);
  for (double x : {0.5, 12.25, 50.0, 99.9}) EXPECT_NEAR(f1_from_pr(x, x), x, 1e-12);
}

// ---- report ----

Metrics with_accuracy(double acc) {
  Metrics m;
  m.accuracy = acc;
  return m;
}

TEST(Report, DeltasAgainstReference) {
  const auto r = compare({{"lstm", with_accuracy(95.0)},
                          {"bilstm", with_accuracy(96.3)},
                          {"gru", with_accuracy(94.7)},
                          {"bigru", with_accuracy(95.9)},
                          {"transformer", with_accuracy(98.7)}},
                         "transformer");
  std::vector<std::string> shown;
  for (double d : r.deltas) shown.push_back(format_delta(d));
  EXPECT_EQ(shown, (std::vector<std::string>{"+3.7", "+2.4", "+4.0", "+2.8", "0.0"}));
  EXPECT_THROW(compare({{"lstm", with_accuracy(1)}}, "transformer"), InputError);
}

TEST(Report, RenderRowAndRounding) {
  Metrics m;
  m.accuracy = 95.0;
  m.precision = 92.8;
  m.recall = 96.8;
  m.f1 = 94.8;
  EXPECT_EQ(render_row(m), "95.0 | 92.8 | 96.8 | 94.8");
  EXPECT_EQ(format_percent(94.75), "94.8");
  EXPECT_EQ(format_delta(-0.01), "0.0");
  EXPECT_EQ(format_delta(-1.25), "-1.3");
}

TEST(Report, JsonAgreesWithTable) {
  const auto r = compare({{"a", Metrics::from_confusion({3, 1, 2, 4})}, {"b", Metrics::from_confusion({5, 0, 0, 5})}},
                         "b");
  const auto j = report_to_json(r);
  EXPECT_EQ(j.at("positive_class"), "deepfake");
  const std::string table = render_table(r);
  for (const auto& row : j.at("rows")) {
    EXPECT_NE(table.find(row.at("rendered").at("accuracy").get<std::string>()), std::string::npos);
  }
  EXPECT_EQ(report_from_json(j), r);
}

// ---- synthetic ----

TEST(Synthetic, DeterministicBalancedAndNormalized) {
  const auto a = make_synthetic_corpus(5, 200, 0.7);
  EXPECT_EQ(a, make_synthetic_corpus(5, 200, 0.7));
  EXPECT_NE(a, make_synthetic_corpus(6, 200, 0.7));
  std::size_t fake = 0;
  const text::NormalizerConfig cfg;
  for (const auto& d : a) {
    fake += *d.label == Label::deepfake;
    EXPECT_EQ(text::normalize(d.normalized, cfg), d.normalized);
    EXPECT_EQ(d.provenance, Provenance::synthetic_test);
    const auto n = tok::split_words(d.normalized).size();
    EXPECT_GE(n, 15u);
    EXPECT_LE(n, 35u);
  }
  EXPECT_EQ(fake, 100u);
  EXPECT_THROW(make_synthetic_corpus(1, 19, 1.0), ConfigError);
  EXPECT_THROW(make_synthetic_corpus(1, 100, 1.5), ConfigError);
}

TEST(Synthetic, OracleTracksSeparability) {
  const auto full = split_corpus(make_synthetic_corpus(1, 2000, 1.0), {});
  EXPECT_GE(unigram_oracle_accuracy(full.train, full.test), 90.0);
  const auto none = split_corpus(make_synthetic_corpus(1, 2000, 0.0), {});
  const double chance = unigram_oracle_accuracy(none.train, none.test);
  EXPECT_GE(chance, 40.0);
  EXPECT_LE(chance, 60.0);
}

// ---- training ----

struct Tiny {
  Corpus corpus;
  tok::Vocabulary vocab;
  Dataset data;
};

Tiny tiny_word_set(std::size_t n) {
  auto corpus = make_synthetic_corpus(2, std::max<std::size_t>(n, 20), 1.0);
  corpus.resize(n);
  auto vocab = tok::build_word_vocab(normalized_texts(corpus), 1);
  auto data = encode_dataset(corpus, vocab, 36);
  return {std::move(corpus), std::move(vocab), std::move(data)};
}

models::RnnConfig small_rnn(std::size_t vocab) {
  models::RnnConfig c;
  c.vocab_size = vocab;
  c.embedding_dim = 16;
  c.hidden = 16;
  c.dense = 16;
  c.seq_length = 36;
  c.dropout = 0.0;
  return c;
}

TEST(Training, BatchLargerThanCorpusIsInputError) {
  const auto t = tiny_word_set(20);
  TrainSpec spec;  // batch 100
  EXPECT_THROW(train_with_early_stopping(small_rnn(t.vocab.size()), t.data, spec), InputError);
}

TEST(Training, EarlyStoppingHistoryAndDeterminism) {
  const auto t = tiny_word_set(60);
  TrainSpec spec;
  spec.batch_size = 10;
  spec.max_epochs = 12;
  spec.seed = 3;
  const auto cfg = small_rnn(t.vocab.size());
  const auto a = train_classifier(cfg, t.data, spec, t.vocab);
  const auto b = train_classifier(cfg, t.data, spec, t.vocab);
  EXPECT_EQ(models::serialize_checkpoint(a.checkpoint), models::serialize_checkpoint(b.checkpoint));
  EXPECT_LE(a.epochs_run, a.best_epoch + spec.patience);
  EXPECT_EQ(a.checkpoint.metadata.at("history").size(), a.epochs_run);
  EXPECT_EQ(a.checkpoint.vocab_hash, t.vocab.hash());
  for (const auto& e : a.history) EXPECT_TRUE(e.val_loss.has_value());
}

TEST(Training, TransformerFineTuneMemorizesEightDocuments) {
  auto corpus = make_synthetic_corpus(4, 20, 1.0);
  corpus.resize(8);
  const auto texts = normalized_texts(corpus);
  const auto vocab = tok::train_bpe(texts, 200);
  const std::size_t len = tok::max_length_for(texts, vocab);
  const auto data = encode_dataset(corpus, vocab, len);
  models::EncoderConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 32;
  cfg.heads = 2;
  cfg.ffn_dim = 64;
  cfg.max_positions = len;
  cfg.vocab_size = vocab.size();
  cfg.dropout = 0.0;
  TrainSpec spec;
  spec.batch_size = 8;
  spec.fine_tune_epochs = 60;
  spec.seed = 1;
  const auto r = train_classifier(cfg, data, spec, vocab);
  EXPECT_EQ(r.epochs_run, 60u);
  EXPECT_EQ(r.checkpoint.metadata.at("epochs"), 60);
  EXPECT_LT(mean_loss(cfg, const_cast<num::ParameterSet<float>&>(r.checkpoint.params), data, 8), 0.05);

  spec.fine_tune_epochs = 4;
  EXPECT_EQ(train_classifier(cfg, data, spec, vocab).checkpoint.metadata.at("epochs"), 4);
}

TEST(Training, VocabularyKindMustMatchArchitecture) {
  const auto t = tiny_word_set(20);
  models::EncoderConfig enc;
  enc.vocab_size = t.vocab.size();
  TrainSpec spec;
  spec.batch_size = 10;
  EXPECT_THROW(train_classifier(enc, t.data, spec, t.vocab), UsageError);
}

TEST(Evaluate, VocabularyMismatchIsIntegrityError) {
  const auto t = tiny_word_set(40);
  TrainSpec spec;
  spec.batch_size = 10;
  spec.max_epochs = 2;
  const auto r = train_classifier(small_rnn(t.vocab.size()), t.data, spec, t.vocab);
  const auto model = models::as_classifier(r.checkpoint);
  const auto other = tok::build_word_vocab({"كلمة اخرى"}, 1);
  EXPECT_THROW(evaluate(model, other, t.corpus), IntegrityError);
  EXPECT_NO_THROW(evaluate(model, t.vocab, t.corpus));
}

TEST(Evaluate, CheckpointRoundTripKeepsMetrics) {
  const auto t = tiny_word_set(40);
  TrainSpec spec;
  spec.batch_size = 10;
  spec.max_epochs = 3;
  const auto r = train_classifier(small_rnn(t.vocab.size()), t.data, spec, t.vocab);
  const auto dir = temp_dir("ckpt");
  models::save_checkpoint(r.checkpoint, dir / "m.ckpt");
  const auto before = evaluate(models::as_classifier(r.checkpoint), t.vocab, t.corpus);
  const auto after = evaluate(models::as_classifier(models::load_checkpoint(dir / "m.ckpt")), t.vocab, t.corpus);
  EXPECT_EQ(before.confusion, after.confusion);
}

TEST(Predict, ThreadCountDoesNotChangeOutput) {
  const auto t = tiny_word_set(60);
  TrainSpec spec;
  spec.batch_size = 10;
  spec.max_epochs = 1;
  const auto r = train_classifier(small_rnn(t.vocab.size()), t.data, spec, t.vocab);
  const auto model = models::as_classifier(r.checkpoint);
  const auto one = predict(model, t.data.sequences, 7, 1);
  const auto four = predict(model, t.data.sequences, 7, 4);
  EXPECT_EQ(one, four);
  for (const auto& p : one) EXPECT_NEAR(p[0] + p[1], 1.0, 1e-6);
}

}  // namespace
}  // namespace dfd::pipe
