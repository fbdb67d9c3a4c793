#pragma once

#include <string>
#include <vector>

#include "halprobe/common.hpp"

namespace halprobe {

// A token sequence as consumed by the text metrics. `ids` and `words` are
// alternative views: metrics run on whichever is non-empty (ids win when both
// are present). Model code fills ids; labeling code works on surface words.
struct TokenSeq {
  std::vector<int> ids;
  std::vector<std::string> words;

  bool empty() const { return ids.empty() && words.empty(); }
  std::size_t length() const { return ids.empty() ? words.size() : ids.size(); }
};

struct ScoredPrediction {
  double score = 0.0;  // higher = more hallucination-like
  bool label = false;
  bool decision = false;
};

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool no_predicted_positives = false;  // precision forced to 0
  bool no_positive_labels = false;      // recall forced to 0
};

// Sentence-level BLEU, geometric mean of modified n-gram precisions times the
// brevity penalty. Smoothing: add-one on numerator and denominator for orders
// n >= 2; order-1 precision is unsmoothed so fully disjoint sequences score 0.
// Orders above the hypothesis length are skipped.
double sentence_bleu(const TokenSeq& hyp, const TokenSeq& ref, int max_n = 4);

// Sum over n in [n_min, n_max] and over distinct n-grams g of
// max(0, count(g) - 1). Empty input yields 0.
int repetition_count(const TokenSeq& seq, int n_min = 2, int n_max = 4);

// True iff the output has at least k more repeated n-grams than the source.
bool is_degenerated(const TokenSeq& src, const TokenSeq& out, int k = 3);

PrfResult binary_prf(const std::vector<ScoredPrediction>& preds);

// Mann-Whitney U normalized by (#pos * #neg); ties count 1/2.
// Throws DataError("degenerate labels") when only one class is present.
double auc(const std::vector<ScoredPrediction>& preds);

// Paired mode: mean(h-o) / sample stdev(h-o). Unpaired: difference of means
// over the pooled sample stdev. Throws DataError("degenerate variance") when
// the relevant variance is zero.
double standardized_mean_difference(const std::vector<double>& h,
                                    const std::vector<double>& o, bool paired);

// Fraction of true labels among the k highest-scoring predictions. Ties are
// broken by stable input order.
double precision_at_k(const std::vector<ScoredPrediction>& preds, int k);

}  // namespace halprobe
