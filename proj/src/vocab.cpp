#include "halprobe/vocab.hpp"

#include <fstream>
#include <sstream>

namespace halprobe {

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) add(t);
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  freq_.push_back(0);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw DataError("token id out of range: " + std::to_string(id));
  return tokens_[id];
}

bool Vocabulary::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

void Vocabulary::count(int id, long n) {
  if (id < 0 || id >= size()) throw DataError("token id out of range: " + std::to_string(id));
  freq_[id] += n;
}

long Vocabulary::frequency(int id) const {
  if (id < 0 || id >= size()) throw DataError("token id out of range: " + std::to_string(id));
  return freq_[id];
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary: " + path);
  for (int i = 0; i < size(); ++i) {
    out << tokens_[i] << '\t' << freq_[i] << '\n';
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary: " + path);
  Vocabulary v;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("malformed vocabulary line: " + line);
    const std::string tok = line.substr(0, tab);
    const long f = std::stol(line.substr(tab + 1));
    if (row < 4) {
      if (tok != v.tokens_[row]) throw DataError("vocabulary special tokens out of order");
    } else {
      v.add(tok);
    }
    v.freq_[row] = f;
    ++row;
  }
  return v;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream iss(text);
  std::string w;
  while (iss >> w) words.push_back(w);
  return words;
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

TokenSeq tokenize(const std::string& text, const Vocabulary& vocab) {
  TokenSeq seq;
  seq.words = split_words(text);
  seq.ids.reserve(seq.words.size());
  for (const auto& w : seq.words) seq.ids.push_back(vocab.id(w));
  return seq;
}

std::string detokenize(const TokenSeq& seq, const Vocabulary& vocab) {
  std::vector<std::string> words;
  for (int id : seq.ids) {
    if (Vocabulary::is_special(id)) continue;
    words.push_back(vocab.token(id));
  }
  return join_words(words);
}

}  // namespace halprobe
