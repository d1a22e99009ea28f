// Versioned binary checkpoints: config text, style set, vocabulary,
// parameter tensors and (optionally) Adagrad accumulators. Fixed
// little-endian layout; round-trips are bit-exact.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shaped/model.hpp"

namespace shaped {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes little-endian host");

constexpr char kCkptMagic[8] = {'S', 'H', 'P', 'D', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

struct Checkpoint {
  Config cfg;
  StyleSet styles;
  std::vector<std::string> vocab_payload;
  std::uint64_t step = 0;
  std::uint64_t skipped_steps = 0;
  std::vector<std::pair<std::string, Tensor>> params;
  std::optional<std::vector<std::vector<double>>> adagrad;  // parallel to params

  Model build_model() const {
    Model m(cfg, styles, Vocabulary::from_tokens(vocab_payload));
    if (params.size() != m.params.size())
      throw std::runtime_error("checkpoint: has " + std::to_string(params.size()) + " tensors, model expects " +
                               std::to_string(m.params.size()));
    for (const auto& [name, t] : params) {
      Param* p = m.params.find(name);
      if (!p) throw std::runtime_error("checkpoint: unexpected tensor " + name);
      if (p->value.shape != t.shape)
        throw std::runtime_error("checkpoint: tensor " + name + " has shape " + shape_str(t.shape) +
                                 ", model expects " + shape_str(p->value.shape));
      p->value = t;
    }
    return m;
  }
};

namespace ckpt_detail {

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write checkpoint " + path);
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t x) { bytes(&x, 4); }
  void u64(std::uint64_t x) { bytes(&x, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void doubles(const std::vector<double>& v) { bytes(v.data(), v.size() * sizeof(double)); }
  bool ok() const { return static_cast<bool>(out_); }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw std::runtime_error("cannot open checkpoint " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw std::runtime_error("checkpoint " + path_ + ": truncated at byte offset " + std::to_string(off_));
    off_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t x;
    bytes(&x, 4);
    return x;
  }
  std::uint64_t u64() {
    std::uint64_t x;
    bytes(&x, 8);
    return x;
  }
  std::string str(std::size_t cap = 1u << 20) {
    std::uint32_t n = u32();
    if (n > cap) throw std::runtime_error("checkpoint " + path_ + ": corrupt string length at byte offset " + std::to_string(off_ - 4));
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }
  std::size_t offset() const { return off_; }
  const std::string& path() const { return path_; }

 private:
  std::ifstream in_;
  std::string path_;
  std::size_t off_ = 0;
};

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string& path, const Model& m,
                            const std::vector<std::vector<double>>* adagrad = nullptr,
                            std::uint64_t step = 0, std::uint64_t skipped_steps = 0) {
  ckpt_detail::Writer w(path);
  w.bytes(kCkptMagic, 8);
  w.u32(kCkptVersion);
  w.u64(step);
  w.u64(skipped_steps);
  w.str(config_to_text(m.cfg));
  w.u32(static_cast<std::uint32_t>(m.styles.size()));
  for (const auto& s : m.styles.names) w.str(s);
  auto payload = m.vocab.payload();
  w.u32(static_cast<std::uint32_t>(payload.size()));
  for (const auto& t : payload) w.str(t);
  w.u32(static_cast<std::uint32_t>(m.params.size()));
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const Param& p = m.params.at(i);
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.shape.size()));
    for (std::size_t d : p.value.shape) w.u64(d);
    w.doubles(p.value.v);
  }
  if (adagrad) {
    if (adagrad->size() != m.params.size())
      throw std::runtime_error("checkpoint: adagrad state does not match parameter count");
    w.u32(1);
    for (std::size_t i = 0; i < m.params.size(); ++i) w.doubles((*adagrad)[i]);
  } else {
    w.u32(0);
  }
  if (!w.ok()) throw std::runtime_error("checkpoint: write to " + path + " failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  ckpt_detail::Reader r(path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("checkpoint " + path + ": bad magic at byte offset 0");
  std::uint32_t version = r.u32();
  if (version != kCkptVersion)
    throw std::runtime_error("checkpoint " + path + ": version " + std::to_string(version) + " unsupported (want " +
                             std::to_string(kCkptVersion) + ")");
  Checkpoint c;
  c.step = r.u64();
  c.skipped_steps = r.u64();
  c.cfg = config_from_kv(parse_kv_text(r.str(), path + "(config)"));
  std::uint32_t n_styles = r.u32();
  if (n_styles == 0 || n_styles > 4096)
    throw std::runtime_error("checkpoint " + path + ": corrupt style count at byte offset " + std::to_string(r.offset() - 4));
  std::vector<std::string> names;
  for (std::uint32_t i = 0; i < n_styles; ++i) names.push_back(r.str());
  c.styles = StyleSet(std::move(names));
  std::uint32_t n_vocab = r.u32();
  for (std::uint32_t i = 0; i < n_vocab; ++i) c.vocab_payload.push_back(r.str());
  std::uint32_t n_params = r.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    std::string name = r.str();
    std::uint32_t ndims = r.u32();
    if (ndims == 0 || ndims > 4)
      throw std::runtime_error("checkpoint " + path + ": corrupt rank for " + name + " at byte offset " +
                               std::to_string(r.offset() - 4));
    Shape shape(ndims);
    for (auto& d : shape) d = r.u64();
    const std::size_t n = numel(shape);
    if (n == 0 || n > (1u << 28))
      throw std::runtime_error("checkpoint " + path + ": corrupt shape for " + name + " at byte offset " +
                               std::to_string(r.offset()));
    c.params.emplace_back(name, Tensor(shape, r.doubles(n)));
  }
  std::uint32_t has_acc = r.u32();
  if (has_acc == 1) {
    std::vector<std::vector<double>> acc;
    for (std::uint32_t i = 0; i < n_params; ++i) acc.push_back(r.doubles(c.params[i].second.size()));
    c.adagrad = std::move(acc);
  } else if (has_acc != 0) {
    throw std::runtime_error("checkpoint " + path + ": corrupt optimizer flag at byte offset " +
                             std::to_string(r.offset() - 4));
  }
  return c;
}

}  // namespace shaped
