#include "halprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace halprobe {
namespace {

// n-grams keyed as joined strings; ids are rendered to text so one counting
// path serves both views.
std::vector<std::string> as_strings(const TokenSeq& seq) {
  if (!seq.ids.empty()) {
    std::vector<std::string> out;
    out.reserve(seq.ids.size());
    for (int id : seq.ids) out.push_back(std::to_string(id));
    return out;
  }
  return seq.words;
}

std::map<std::string, int> ngram_counts(const std::vector<std::string>& toks, int n) {
  std::map<std::string, int> counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j) key += '\x1f';
      key += toks[i + j];
    }
    ++counts[key];
  }
  return counts;
}

double sample_stdev(const std::vector<double>& xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0));
}

}  // namespace

double sentence_bleu(const TokenSeq& hyp, const TokenSeq& ref, int max_n) {
  if (hyp.empty() || ref.empty()) throw DataError("empty input");
  if (max_n < 1) throw UsageError("max_n must be >= 1");
  const std::vector<std::string> h = as_strings(hyp);
  const std::vector<std::string> r = as_strings(ref);

  const int orders = std::min<int>(max_n, static_cast<int>(h.size()));
  double log_precision = 0.0;
  for (int n = 1; n <= orders; ++n) {
    const auto hc = ngram_counts(h, n);
    const auto rc = ngram_counts(r, n);
    int match = 0;
    int total = 0;
    for (const auto& [g, c] : hc) {
      total += c;
      auto it = rc.find(g);
      if (it != rc.end()) match += std::min(c, it->second);
    }
    const double smooth = (n >= 2) ? 1.0 : 0.0;
    const double p = (match + smooth) / (total + smooth);
    if (p == 0.0) return 0.0;
    log_precision += std::log(p);
  }
  log_precision /= orders;

  double bp = 1.0;
  if (h.size() < r.size()) {
    bp = std::exp(1.0 - static_cast<double>(r.size()) / static_cast<double>(h.size()));
  }
  return bp * std::exp(log_precision);
}

int repetition_count(const TokenSeq& seq, int n_min, int n_max) {
  if (n_min > n_max) throw UsageError("n_min must be <= n_max");
  const std::vector<std::string> toks = as_strings(seq);
  int repeats = 0;
  for (int n = n_min; n <= n_max; ++n) {
    for (const auto& [g, c] : ngram_counts(toks, n)) {
      repeats += std::max(0, c - 1);
    }
  }
  return repeats;
}

bool is_degenerated(const TokenSeq& src, const TokenSeq& out, int k) {
  if (k < 1) throw UsageError("degeneration threshold k must be >= 1");
  return repetition_count(out) - repetition_count(src) >= k;
}

PrfResult binary_prf(const std::vector<ScoredPrediction>& preds) {
  if (preds.empty()) throw DataError("empty input");
  int tp = 0, fp = 0, fn = 0, pos_labels = 0;
  for (const auto& p : preds) {
    pos_labels += p.label ? 1 : 0;
    if (p.decision && p.label) ++tp;
    if (p.decision && !p.label) ++fp;
    if (!p.decision && p.label) ++fn;
  }
  PrfResult r;
  if (tp + fp == 0) {
    r.no_predicted_positives = true;
  } else {
    r.precision = static_cast<double>(tp) / (tp + fp);
  }
  if (pos_labels == 0) {
    r.no_positive_labels = true;
  } else {
    r.recall = static_cast<double>(tp) / (tp + fn);
  }
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

double auc(const std::vector<ScoredPrediction>& preds) {
  std::vector<double> pos, neg;
  for (const auto& p : preds) (p.label ? pos : neg).push_back(p.score);
  if (pos.empty() || neg.empty()) throw DataError("degenerate labels");
  double u = 0.0;
  for (double s : pos) {
    for (double t : neg) {
      if (s > t) {
        u += 1.0;
      } else if (s == t) {
        u += 0.5;
      }
    }
  }
  return u / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double standardized_mean_difference(const std::vector<double>& h,
                                    const std::vector<double>& o, bool paired) {
  if (h.size() < 2 || o.size() < 2) throw DataError("need at least 2 elements");
  if (paired) {
    if (h.size() != o.size()) throw DataError("paired mode requires equal lengths");
    std::vector<double> d(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) d[i] = h[i] - o[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
    const double sd = sample_stdev(d, mean);
    if (sd == 0.0) throw DataError("degenerate variance");
    return mean / sd;
  }
  const double mh = std::accumulate(h.begin(), h.end(), 0.0) / h.size();
  const double mo = std::accumulate(o.begin(), o.end(), 0.0) / o.size();
  const double sh = sample_stdev(h, mh);
  const double so = sample_stdev(o, mo);
  const double pooled = std::sqrt(((h.size() - 1.0) * sh * sh + (o.size() - 1.0) * so * so) /
                                  (h.size() + o.size() - 2.0));
  if (pooled == 0.0) throw DataError("degenerate variance");
  return (mh - mo) / pooled;
}

double precision_at_k(const std::vector<ScoredPrediction>& preds, int k) {
  if (k <= 0) throw UsageError("k must be positive");
  if (k > static_cast<int>(preds.size())) throw UsageError("k exceeds prediction count");
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  int hits = 0;
  for (int i = 0; i < k; ++i) hits += preds[order[i]].label ? 1 : 0;
  return static_cast<double>(hits) / k;
}

}  // namespace halprobe
