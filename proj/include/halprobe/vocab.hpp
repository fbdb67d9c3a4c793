#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "halprobe/metrics.hpp"

namespace halprobe {

// Joint source/target vocabulary with dense stable ids and per-token corpus
// frequencies. Ids 0..3 are reserved.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary();

  // Returns the id, inserting the token if unseen.
  int add(const std::string& token);

  // Lookup with UNK fallback.
  int id(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;

  void count(int id, long n = 1);
  long frequency(int id) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  static bool is_special(int id) { return id <= kUnk; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::vector<long> freq_;
  std::unordered_map<std::string, int> index_;
};

// Whitespace split then vocabulary lookup with UNK fallback. Keeps the
// original words as the surface view.
TokenSeq tokenize(const std::string& text, const Vocabulary& vocab);

// Inverse of tokenize on in-vocabulary text; special tokens are dropped.
std::string detokenize(const TokenSeq& seq, const Vocabulary& vocab);

std::vector<std::string> split_words(const std::string& text);
std::string join_words(const std::vector<std::string>& words);

}  // namespace halprobe
