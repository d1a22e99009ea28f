#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace shaped {

constexpr int kPad = 0;
constexpr int kBos = 1;
constexpr int kEos = 2;
constexpr int kUnk = 3;

inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

class Vocabulary {
 public:
  Vocabulary() {
    for (const char* t : {"<pad>", "<bos>", "<eos>", "<unk>"}) push(t);
  }

  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary v;
    for (const auto& t : tokens) v.push(t);
    return v;
  }

  int id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw std::invalid_argument("vocabulary: id " + std::to_string(id) + " out of range");
    return tokens_[id];
  }

  std::size_t size() const { return tokens_.size(); }

  // Non-reserved tokens in id order (what a checkpoint stores).
  std::vector<std::string> payload() const {
    return std::vector<std::string>(tokens_.begin() + 4, tokens_.end());
  }

  std::vector<int> encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

  std::string decode(const std::vector<int>& ids) const {
    std::ostringstream os;
    bool first = true;
    for (int i : ids) {
      if (i == kEos || i == kPad || i == kBos) continue;
      os << (first ? "" : " ") << token(i);
      first = false;
    }
    return os.str();
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;

  void push(const std::string& t) {
    if (!index_.emplace(t, static_cast<int>(tokens_.size())).second)
      throw std::invalid_argument("vocabulary: duplicate token '" + t + "'");
    tokens_.push_back(t);
  }

  friend Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs, std::size_t cap);
};

// Keeps the most frequent tokens up to cap (cap counts the 4 reserved
// ids); ties break lexicographically.
inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& docs, std::size_t cap) {
  if (cap < 5) throw std::invalid_argument("build_vocab: cap must be at least 5");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& d : docs)
    for (const auto& t : d) ++counts[t], ++total;
  if (total == 0) throw std::invalid_argument("build_vocab: empty corpus");

  std::vector<std::pair<std::string, std::size_t>> by_freq(counts.begin(), counts.end());
  std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (const auto& [tok, cnt] : by_freq) {
    if (v.tokens_.size() >= cap) break;
    v.push(tok);
  }
  return v;
}

}  // namespace shaped
