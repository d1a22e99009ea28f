// Line-delimited corpus records and encoding of raw text pairs.
#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shaped/vocab.hpp"

namespace shaped {

constexpr int kNoStyle = -1;

struct RawExample {
  std::string source;
  std::string target;
  std::optional<std::string> style;
};

struct StyledExample {
  std::vector<int> source;  // <= max_src ids
  std::vector<int> target;  // ends with kEos, <= max_tgt ids
  int style = kNoStyle;
};

inline std::vector<RawExample> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file " + path);
  std::vector<RawExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad record: " + e.what());
    }
    if (!j.contains("source") || !j["source"].is_string())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing source field");
    if (!j.contains("target") || !j["target"].is_string())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing target field");
    RawExample ex;
    ex.source = j["source"].get<std::string>();
    ex.target = j["target"].get<std::string>();
    if (j.contains("style") && !j["style"].is_null()) {
      if (!j["style"].is_string())
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": style must be string or null");
      ex.style = j["style"].get<std::string>();
    }
    out.push_back(std::move(ex));
  }
  return out;
}

inline void write_corpus(const std::vector<RawExample>& examples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file " + path);
  for (const auto& ex : examples) {
    nlohmann::json j;
    j["source"] = ex.source;
    j["target"] = ex.target;
    if (ex.style)
      j["style"] = *ex.style;
    else
      j["style"] = nullptr;
    out << j.dump() << "\n";
  }
}

// Whitespace tokenization, lowercasing, OOV -> UNK, truncation, EOS.
inline StyledExample encode_example(const std::string& source, const std::string& target,
                                    const Vocabulary& vocab, std::size_t max_src, std::size_t max_tgt,
                                    int style = kNoStyle) {
  auto src_tokens = tokenize(source);
  if (src_tokens.empty()) throw std::invalid_argument("encode_example: source has no tokens");
  if (src_tokens.size() > max_src) src_tokens.resize(max_src);
  auto tgt_tokens = tokenize(target);
  if (tgt_tokens.size() > max_tgt - 1) tgt_tokens.resize(max_tgt - 1);

  StyledExample ex;
  ex.source = vocab.encode(src_tokens);
  ex.target = vocab.encode(tgt_tokens);
  ex.target.push_back(kEos);
  ex.style = style;
  return ex;
}

}  // namespace shaped
