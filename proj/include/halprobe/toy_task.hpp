#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "halprobe/common.hpp"
#include "halprobe/vocab.hpp"

namespace halprobe {

// Synthetic deterministic translation task: a token-substitution language
// where every source content/function word has a fixed target counterpart,
// function-word translations are followed by an inserted particle, and
// punctuation maps to itself. Content words are sampled Zipf-style so the
// vocabulary has genuinely frequent / rare tokens for the insertion classes.
struct ToyTaskConfig {
  int content_words = 40;
  int function_words = 6;
  int min_len = 6;   // content slots per sentence
  int max_len = 12;
  double function_word_prob = 0.25;
  double comma_prob = 0.3;
  int corpus_size = 3000;
  std::uint64_t seed = 1;
};

struct ToyCorpus {
  Vocabulary vocab;
  std::vector<std::pair<std::string, std::string>> pairs;  // (source, target)
};

// Deterministic word tables plus the rule-based reference translator.
class ToyLanguage {
 public:
  explicit ToyLanguage(const ToyTaskConfig& cfg);

  const std::vector<std::string>& source_content() const { return src_content_; }
  const std::vector<std::string>& source_function() const { return src_function_; }

  std::string sample_source(Rng& rng) const;
  std::string translate(const std::string& source) const;

 private:
  ToyTaskConfig cfg_;
  std::vector<std::string> src_content_, tgt_content_;
  std::vector<std::string> src_function_, tgt_function_;
  std::string particle_;
  std::vector<double> zipf_cdf_;
};

// Generates the corpus and builds the joint vocabulary. Token frequencies are
// counted on the source side, which is what the insertion perturbations draw
// from.
ToyCorpus generate_toy_corpus(const ToyTaskConfig& cfg);

// One pair per line, source and target separated by a single tab.
void save_corpus(const std::string& path,
                 const std::vector<std::pair<std::string, std::string>>& pairs);
std::vector<std::pair<std::string, std::string>> load_corpus(const std::string& path);

}  // namespace halprobe
