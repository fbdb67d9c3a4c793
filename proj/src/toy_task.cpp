#include "halprobe/toy_task.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace halprobe {
namespace {

constexpr const char* kSrcConsonants = "kmtrsnpl";
constexpr const char* kTgtConsonants = "bdfgvzjh";
constexpr const char* kSrcVowels = "aiou";
constexpr const char* kTgtVowels = "eouy";

std::string make_word(const char* consonants, const char* vowels, std::uint64_t key,
                      int syllables) {
  std::string w;
  for (int s = 0; s < syllables; ++s) {
    std::uint64_t h = splitmix64(key + 31 * s);
    w += consonants[h % 8];
    w += vowels[(h >> 8) % 4];
  }
  return w;
}

// Deterministic unique word: bump the key until no collision.
std::string unique_word(const char* consonants, const char* vowels, std::uint64_t key,
                        int syllables, std::set<std::string>& used) {
  for (std::uint64_t bump = 0;; ++bump) {
    std::string w = make_word(consonants, vowels, splitmix64(key + bump * 977), syllables);
    if (used.insert(w).second) return w;
  }
}

}  // namespace

ToyLanguage::ToyLanguage(const ToyTaskConfig& cfg) : cfg_(cfg) {
  if (cfg.content_words < 1 || cfg.function_words < 1) {
    throw UsageError("toy task needs at least one content and one function word");
  }
  if (cfg.min_len < 1 || cfg.min_len > cfg.max_len) {
    throw UsageError("invalid toy sentence length bounds");
  }
  std::set<std::string> used;
  for (int i = 0; i < cfg.content_words; ++i) {
    const int syll = 2 + (i % 2);
    src_content_.push_back(unique_word(kSrcConsonants, kSrcVowels, 1000 + i, syll, used));
    tgt_content_.push_back(unique_word(kTgtConsonants, kTgtVowels, 2000 + i, syll, used));
  }
  for (int k = 0; k < cfg.function_words; ++k) {
    src_function_.push_back(std::string(1, kSrcConsonants[k % 8]) + "e");
    tgt_function_.push_back(std::string(1, kTgtConsonants[k % 8]) + "a");
    if (!used.insert(src_function_.back()).second || !used.insert(tgt_function_.back()).second) {
      throw NumericError("toy word table collision");
    }
  }
  particle_ = "wix";
  used.insert(particle_);

  // Zipf-like sampling weights over content words.
  double total = 0.0;
  for (int i = 0; i < cfg.content_words; ++i) total += 1.0 / (i + 3.0);
  double acc = 0.0;
  for (int i = 0; i < cfg.content_words; ++i) {
    acc += (1.0 / (i + 3.0)) / total;
    zipf_cdf_.push_back(acc);
  }
  zipf_cdf_.back() = 1.0;
}

std::string ToyLanguage::sample_source(Rng& rng) const {
  const int len = cfg_.min_len + rng.uniform_int(cfg_.max_len - cfg_.min_len + 1);
  std::vector<std::string> words;
  for (int i = 0; i < len; ++i) {
    if (rng.bernoulli(cfg_.function_word_prob)) {
      words.push_back(src_function_[rng.uniform_int(static_cast<int>(src_function_.size()))]);
    } else {
      const double u = rng.uniform();
      int idx = 0;
      while (idx + 1 < static_cast<int>(zipf_cdf_.size()) && u > zipf_cdf_[idx]) ++idx;
      words.push_back(src_content_[idx]);
    }
  }
  if (len >= 8 && rng.bernoulli(cfg_.comma_prob)) {
    words.insert(words.begin() + len / 2, ",");
  }
  const double u = rng.uniform();
  words.push_back(u < 0.8 ? "." : (u < 0.9 ? "!" : "?"));
  return join_words(words);
}

std::string ToyLanguage::translate(const std::string& source) const {
  std::vector<std::string> out;
  for (const auto& w : split_words(source)) {
    bool mapped = false;
    for (std::size_t i = 0; i < src_content_.size(); ++i) {
      if (w == src_content_[i]) {
        out.push_back(tgt_content_[i]);
        mapped = true;
        break;
      }
    }
    if (!mapped) {
      for (std::size_t k = 0; k < src_function_.size(); ++k) {
        if (w == src_function_[k]) {
          out.push_back(tgt_function_[k]);
          out.push_back(particle_);
          mapped = true;
          break;
        }
      }
    }
    if (!mapped) out.push_back(w);  // punctuation and anything else maps to itself
  }
  return join_words(out);
}

ToyCorpus generate_toy_corpus(const ToyTaskConfig& cfg) {
  ToyLanguage lang(cfg);
  ToyCorpus corpus;
  Rng rng(derive_seed(cfg.seed, "toy-corpus"));
  for (int i = 0; i < cfg.corpus_size; ++i) {
    std::string src = lang.sample_source(rng);
    corpus.pairs.emplace_back(src, lang.translate(src));
  }
  // Joint vocabulary; frequencies counted on the source side.
  for (const auto& [src, tgt] : corpus.pairs) {
    for (const auto& w : split_words(src)) corpus.vocab.count(corpus.vocab.add(w));
    for (const auto& w : split_words(tgt)) corpus.vocab.add(w);
  }
  return corpus;
}

void save_corpus(const std::string& path,
                 const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus: " + path);
  for (const auto& [src, tgt] : pairs) out << src << '\t' << tgt << '\n';
}

std::vector<std::pair<std::string, std::string>> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corpus: " + path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("corpus line missing tab separator");
    pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return pairs;
}

}  // namespace halprobe
