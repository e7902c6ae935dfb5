#include "dfd/pipeline/metrics.hpp"

#include <algorithm>
#include <thread>
#include <vector>

#include "dfd/error.hpp"
#include "dfd/json_util.hpp"

namespace dfd::pipe {

void Confusion::add(Label predicted, Label truth) {
  const bool p = predicted == Label::deepfake, t = truth == Label::deepfake;
  if (p && t) ++tp;
  else if (p) ++fp;
  else if (t) ++fn;
  else ++tn;
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

double f1_from_pr(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Metrics Metrics::from_confusion(const Confusion& cm) {
  Metrics m;
  m.confusion = cm;
  auto pct = [](std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = pct(cm.tp + cm.tn, cm.total());
  m.precision = pct(cm.tp, cm.tp + cm.fp);
  m.recall = pct(cm.tp, cm.tp + cm.fn);
  m.f1 = f1_from_pr(m.precision, m.recall);
  return m;
}

nlohmann::json Metrics::to_json() const {
  nlohmann::json j{{"accuracy", accuracy}, {"precision", precision}, {"recall", recall}, {"f1", f1}};
  if (confusion) {
    j["confusion"] = {{"tp", confusion->tp}, {"fp", confusion->fp}, {"fn", confusion->fn}, {"tn", confusion->tn}};
  }
  return j;
}

Metrics Metrics::from_json(const nlohmann::json& j) {
  Metrics m;
  jsonu::for_each_key(j, "metrics", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "accuracy") m.accuracy = jsonu::as_double(v);
    else if (k == "precision") m.precision = jsonu::as_double(v);
    else if (k == "recall") m.recall = jsonu::as_double(v);
    else if (k == "f1") m.f1 = jsonu::as_double(v);
    else if (k == "confusion") {
      Confusion c;
      c.tp = jsonu::as_u64(v.at("tp"));
      c.fp = jsonu::as_u64(v.at("fp"));
      c.fn = jsonu::as_u64(v.at("fn"));
      c.tn = jsonu::as_u64(v.at("tn"));
      m.confusion = c;
    } else {
      return false;
    }
    return true;
  });
  return m;
}

Confusion count_confusion(std::span<const Label> predicted, std::span<const Label> truth, std::size_t threads) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("count_confusion: " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  }
  const std::size_t n = predicted.size();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::max<std::size_t>(1, std::min(threads, n));
  std::vector<Confusion> partial(threads);
  auto work = [&](std::size_t t) {
    const std::size_t lo = n * t / threads, hi = n * (t + 1) / threads;
    for (std::size_t i = lo; i < hi; ++i) partial[t].add(predicted[i], truth[i]);
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  Confusion total;
  for (const auto& c : partial) total += c;
  return total;
}

}  // namespace dfd::pipe
