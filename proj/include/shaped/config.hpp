// key=value configuration: file parsing, CLI overrides, and the canonical
// serialization embedded in checkpoints.
#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace shaped {

enum class Variant { shared, private_style, shaped };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::shared: return "shared";
    case Variant::private_style: return "private";
    case Variant::shaped: return "shaped";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "shared" || s == "S") return Variant::shared;
  if (s == "private" || s == "P") return Variant::private_style;
  if (s == "shaped" || s == "SP") return Variant::shaped;
  throw std::invalid_argument("unknown variant '" + s + "' (expected shared|private|shaped)");
}

struct Config {
  Variant variant = Variant::shaped;
  std::string style;  // private variant: which style this model owns

  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t attn_dim = 32;
  std::size_t gru_layers = 1;

  std::size_t vocab_cap = 500;
  std::size_t max_src = 40;
  std::size_t max_tgt = 20;

  double lr = 0.01;
  double adagrad_eps = 1e-8;
  std::size_t batch = 16;
  std::size_t steps = 1000;
  std::uint64_t seed = 1;

  double classifier_weight = 1.0;
  bool classifier_backprop_full = false;  // default: classifier loss stops at the pooled encodings

  std::size_t log_every = 20;
  double init_scale = 0.08;
  std::size_t max_len = 20;
};

using KvMap = std::map<std::string, std::string>;

inline KvMap parse_kv_text(const std::string& text, const std::string& origin) {
  KvMap out;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      std::size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline KvMap parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_kv_text(text, path);
}

inline void apply_override(KvMap& kv, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::runtime_error("override '" + assignment + "' is not key=value");
  kv[assignment.substr(0, eq)] = assignment.substr(eq + 1);
}

inline Config config_from_kv(const KvMap& kv) {
  Config c;
  auto get_u = [](const std::string& v, const std::string& k) -> std::uint64_t {
    std::size_t used = 0;
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::runtime_error("config: bad integer for " + k + ": '" + v + "'");
    return x;
  };
  auto get_d = [](const std::string& v, const std::string& k) -> double {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::runtime_error("config: bad number for " + k + ": '" + v + "'");
    return x;
  };
  for (const auto& [k, v] : kv) {
    if (k == "variant") c.variant = parse_variant(v);
    else if (k == "style") c.style = v;
    else if (k == "embed_dim") c.embed_dim = get_u(v, k);
    else if (k == "hidden_dim") c.hidden_dim = get_u(v, k);
    else if (k == "attn_dim") c.attn_dim = get_u(v, k);
    else if (k == "gru_layers") c.gru_layers = get_u(v, k);
    else if (k == "vocab_cap") c.vocab_cap = get_u(v, k);
    else if (k == "max_src") c.max_src = get_u(v, k);
    else if (k == "max_tgt") c.max_tgt = get_u(v, k);
    else if (k == "lr") c.lr = get_d(v, k);
    else if (k == "adagrad_eps") c.adagrad_eps = get_d(v, k);
    else if (k == "batch") c.batch = get_u(v, k);
    else if (k == "steps") c.steps = get_u(v, k);
    else if (k == "seed") c.seed = get_u(v, k);
    else if (k == "classifier_weight") c.classifier_weight = get_d(v, k);
    else if (k == "classifier_backprop") {
      if (v == "full") c.classifier_backprop_full = true;
      else if (v == "stop") c.classifier_backprop_full = false;
      else throw std::runtime_error("config: classifier_backprop must be stop or full, got '" + v + "'");
    }
    else if (k == "log_every") c.log_every = get_u(v, k);
    else if (k == "init_scale") c.init_scale = get_d(v, k);
    else if (k == "max_len") c.max_len = get_u(v, k);
    else throw std::runtime_error("config: unknown key '" + k + "'");
  }
  if (c.lr <= 0) throw std::runtime_error("config: lr must be positive");
  if (c.batch < 1) throw std::runtime_error("config: batch must be at least 1");
  if (c.steps < 1) throw std::runtime_error("config: steps must be at least 1");
  if (c.max_tgt < 2) throw std::runtime_error("config: max_tgt must be at least 2");
  if (c.variant == Variant::private_style && c.style.empty())
    throw std::runtime_error("config: private variant needs style=<name>");
  return c;
}

inline std::string config_to_text(const Config& c) {
  auto fmt_d = [](double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  std::string s;
  s += "variant=" + variant_name(c.variant) + "\n";
  if (!c.style.empty()) s += "style=" + c.style + "\n";
  s += "embed_dim=" + std::to_string(c.embed_dim) + "\n";
  s += "hidden_dim=" + std::to_string(c.hidden_dim) + "\n";
  s += "attn_dim=" + std::to_string(c.attn_dim) + "\n";
  s += "gru_layers=" + std::to_string(c.gru_layers) + "\n";
  s += "vocab_cap=" + std::to_string(c.vocab_cap) + "\n";
  s += "max_src=" + std::to_string(c.max_src) + "\n";
  s += "max_tgt=" + std::to_string(c.max_tgt) + "\n";
  s += "lr=" + fmt_d(c.lr) + "\n";
  s += "adagrad_eps=" + fmt_d(c.adagrad_eps) + "\n";
  s += "batch=" + std::to_string(c.batch) + "\n";
  s += "steps=" + std::to_string(c.steps) + "\n";
  s += "seed=" + std::to_string(c.seed) + "\n";
  s += "classifier_weight=" + fmt_d(c.classifier_weight) + "\n";
  s += std::string("classifier_backprop=") + (c.classifier_backprop_full ? "full" : "stop") + "\n";
  s += "log_every=" + std::to_string(c.log_every) + "\n";
  s += "init_scale=" + fmt_d(c.init_scale) + "\n";
  s += "max_len=" + std::to_string(c.max_len) + "\n";
  return s;
}

}  // namespace shaped
