// The shared-private encoder-decoder family: a shared stack updated by all
// styles, per-style private stacks, a style classifier over the private
// encodings, and the two decoding rules (single style path; classifier-
// weighted mixture over all style paths).
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shaped/config.hpp"
#include "shaped/corpus.hpp"
#include "shaped/nn.hpp"
#include "shaped/rng.hpp"
#include "shaped/tensor.hpp"
#include "shaped/vocab.hpp"

namespace shaped {

struct StyleSet {
  std::vector<std::string> names;

  StyleSet() = default;
  explicit StyleSet(std::vector<std::string> n) : names(std::move(n)) {
    if (names.empty()) throw std::invalid_argument("style set: must be non-empty");
    for (std::size_t i = 0; i < names.size(); ++i)
      for (std::size_t j = i + 1; j < names.size(); ++j)
        if (names[i] == names[j]) throw std::invalid_argument("style set: duplicate name " + names[i]);
  }

  std::size_t size() const { return names.size(); }

  int index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }

  int require(const std::string& name) const {
    int z = index(name);
    if (z < 0) throw std::invalid_argument("unknown style '" + name + "'");
    return z;
  }

  bool operator==(const StyleSet& o) const { return names == o.names; }
};

using StylePosterior = std::vector<double>;

// One encoder-decoder pair plus the map from final bidirectional encoder
// states to the decoder's initial state.
struct EncDecStack {
  GruStack enc_fwd, enc_bwd, dec;
  Param* init_w;
  Param* init_b;
};

struct EncodedInput {
  std::optional<Encoding> shared;
  std::vector<std::optional<Encoding>> priv;  // indexed by style id
  std::vector<Var> concat_states;             // rows [private_j, shared_j], per style
  std::vector<Var> premix;                    // attention premix per style path
  Var single_premix;                          // single-stack variants
  std::size_t length = 0;

  bool has_style(std::size_t z) const { return z < priv.size() && priv[z].has_value(); }
  bool has_all(std::size_t d) const {
    for (std::size_t z = 0; z < d; ++z)
      if (!has_style(z)) return false;
    return true;
  }
};

struct DecoderState {
  std::vector<Var> shared_layers;
  std::vector<std::vector<Var>> private_layers;  // [style][layer]
  std::vector<Var> single_layers;                // single-stack variants
};

class Model {
 public:
  Config cfg;
  StyleSet styles;
  Vocabulary vocab;
  ParamStore params;

  Model(Config c, StyleSet s, Vocabulary v) : cfg(std::move(c)), styles(std::move(s)), vocab(std::move(v)) {
    const std::size_t e = cfg.embed_dim, h = cfg.hidden_dim, a = cfg.attn_dim;
    const std::size_t vsz = vocab.size();
    embedding_ = params.create("embedding", {vsz, e});
    if (cfg.variant == Variant::shaped) {
      shared_ = make_stack("shared", e, h);
      for (const auto& name : styles.names) private_.push_back(make_stack("private." + name, e, h));
      attn_ = make_attention(params, "attention", 4 * h, 2 * h, a);
      out_net_ = make_output_net(params, "output", e, 4 * h + 2 * h, vsz);
      const std::size_t feat = styles.size() * 2 * h;
      cls_w_hidden_ = params.create("classifier.w_hidden", {h, feat});
      cls_b_hidden_ = params.create("classifier.b_hidden", {h});
      cls_w_out_ = params.create("classifier.w_out", {styles.size(), h});
      cls_b_out_ = params.create("classifier.b_out", {styles.size()});
    } else {
      if (cfg.variant == Variant::private_style) styles.require(cfg.style);
      single_ = make_stack("stack", e, h);
      attn_ = make_attention(params, "attention", 2 * h, h, a);
      out_net_ = make_output_net(params, "output", e, 2 * h + h, vsz);
    }
  }

  void init_params(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : params) init_uniform(*p, rng, cfg.init_scale);
  }

  Param& embedding() { return *embedding_; }
  const AttentionParams& attention() const { return attn_; }
  const OutputNetParams& output_net() const { return out_net_; }

  // ---- encoding ----------------------------------------------------------

  // style < 0 requests all private encoders (and, for single-stack
  // variants, just the one stack).
  EncodedInput encode_all(Graph& g, const std::vector<int>& ids, int style = -1) const {
    check_ids(ids);
    EncodedInput enc;
    enc.length = ids.size();
    if (cfg.variant != Variant::shaped) {
      Encoding e = encode_bidir(g, ids, single_->enc_fwd, single_->enc_bwd, *embedding_);
      enc.single_premix = attention_premix(g, e.states, attn_);
      enc.shared = std::nullopt;
      enc.priv.assign(1, std::move(e));
      return enc;
    }
    if (style >= static_cast<int>(styles.size()))
      throw std::invalid_argument("encode_all: unknown style id " + std::to_string(style));
    enc.shared = encode_bidir(g, ids, shared_.enc_fwd, shared_.enc_bwd, *embedding_);
    enc.priv.assign(styles.size(), std::nullopt);
    enc.concat_states.assign(styles.size(), Var{});
    enc.premix.assign(styles.size(), Var{});
    for (std::size_t z = 0; z < styles.size(); ++z) {
      if (style >= 0 && static_cast<std::size_t>(style) != z) continue;
      enc.priv[z] = encode_bidir(g, ids, private_[z].enc_fwd, private_[z].enc_bwd, *embedding_);
      enc.concat_states[z] = g.concat(enc.priv[z]->states, enc.shared->states);
      enc.premix[z] = attention_premix(g, enc.concat_states[z], attn_);
    }
    return enc;
  }

  // ---- decoder state -----------------------------------------------------

  DecoderState init_decoder(Graph& g, const EncodedInput& enc, int style = -1) const {
    DecoderState st;
    if (cfg.variant != Variant::shaped) {
      st.single_layers.assign(cfg.gru_layers, init_vec(g, *single_, *enc.priv[0]));
      return st;
    }
    st.shared_layers.assign(cfg.gru_layers, init_vec(g, shared_, *enc.shared));
    st.private_layers.assign(styles.size(), {});
    for (std::size_t z = 0; z < styles.size(); ++z) {
      if (style >= 0 && static_cast<std::size_t>(style) != z) continue;
      if (!enc.has_style(z)) {
        if (style < 0) throw std::invalid_argument("init_decoder: missing private encoding for style " + styles.names[z]);
        continue;
      }
      st.private_layers[z].assign(cfg.gru_layers, init_vec(g, private_[z], *enc.priv[z]));
    }
    return st;
  }

  // ---- one decode step ---------------------------------------------------

  // Advances the private decoder of `z` and the shared decoder and returns
  // the output distribution over the vocabulary.
  Var shaped_step(Graph& g, std::size_t z, const EncodedInput& enc, DecoderState& st, int y_prev) const {
    require_shaped("shaped_step");
    if (z >= styles.size()) throw std::invalid_argument("shaped_step: style id out of range");
    if (!enc.has_style(z))
      throw std::invalid_argument("shaped_step: no private encoding for style " + styles.names[z]);
    Var emb = g.embedding(g.param(*embedding_), y_prev);
    Var s_shared = shared_.dec.step(g, emb, st.shared_layers);
    Var dist;
    step_path(g, z, enc, st, emb, s_shared, dist);
    return dist;
  }

  // Mixture step: every private decoder and the shared decoder advance (the
  // shared decoder exactly once); the returned distribution is the
  // posterior-weighted mixture of the per-style distributions, computed in
  // plain arithmetic since the mixture is a run-time rule only.
  std::vector<double> mixture_step(Graph& g, const EncodedInput& enc, DecoderState& st, int y_prev,
                                   const StylePosterior& posterior) const {
    require_shaped("mixture_step");
    if (posterior.size() != styles.size())
      throw std::invalid_argument("mixture_step: posterior has " + std::to_string(posterior.size()) +
                                  " entries for " + std::to_string(styles.size()) + " styles");
    if (!enc.has_all(styles.size()))
      throw std::invalid_argument("mixture_step: all private encodings required");
    Var emb = g.embedding(g.param(*embedding_), y_prev);
    Var s_shared = shared_.dec.step(g, emb, st.shared_layers);
    std::vector<const std::vector<double>*> dists(styles.size());
    std::vector<Var> dist_vars(styles.size());
    for (std::size_t z = 0; z < styles.size(); ++z) {
      step_path(g, z, enc, st, emb, s_shared, dist_vars[z]);
      dists[z] = &g.value(dist_vars[z]).v;
    }
    std::vector<double> out(vocab.size(), 0.0);
    for (std::size_t z = 0; z < styles.size(); ++z)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += posterior[z] * (*dists[z])[i];
    return out;
  }

  // Single-stack step for the shared (S) and private (P) baselines.
  Var single_step(Graph& g, const EncodedInput& enc, DecoderState& st, int y_prev) const {
    if (cfg.variant == Variant::shaped) throw std::invalid_argument("single_step: not a single-stack model");
    Var emb = g.embedding(g.param(*embedding_), y_prev);
    Var s = single_->dec.step(g, emb, st.single_layers);
    Attended att = attend(g, enc.priv[0]->states, enc.single_premix, s, attn_);
    return g.softmax(output_logits(g, att.context, s, out_net_, *embedding_));
  }

  // ---- style classifier --------------------------------------------------

  // Mean-pool each private encoder's states over time, concatenate, one
  // tanh hidden layer, softmax over styles. With detach=true the features
  // enter as constants, so no gradient reaches the encoders.
  Var classify(Graph& g, const EncodedInput& enc, bool detach) const {
    require_shaped("classify_style");
    if (!enc.has_all(styles.size()))
      throw std::invalid_argument("classify_style: all private encodings required");
    std::vector<Var> pooled(styles.size());
    const double inv_t = 1.0 / static_cast<double>(enc.length);
    for (std::size_t z = 0; z < styles.size(); ++z) {
      Var ones = g.constant({enc.length}, inv_t);
      pooled[z] = g.matmul(ones, enc.priv[z]->states);
    }
    Var feat = g.concat(std::span<const Var>(pooled.data(), pooled.size()));
    if (detach) feat = g.input(g.value(feat));
    Var hidden = g.tanh(g.add(g.matmul(g.param(*cls_w_hidden_), feat), g.param(*cls_b_hidden_)));
    return g.softmax(g.add(g.matmul(g.param(*cls_w_out_), hidden), g.param(*cls_b_out_)));
  }

  StylePosterior classify_values(Graph& g, const EncodedInput& enc) const {
    return g.value(classify(g, enc, true)).v;
  }

  // ---- likelihood --------------------------------------------------------

  // Teacher-forced negative log-likelihood of `target` given `enc`.
  // For shaped models `style` selects the private path; single-stack
  // models ignore it.
  Var sequence_nll_given(Graph& g, const EncodedInput& enc, DecoderState& st,
                         const std::vector<int>& target, int style) const {
    if (target.empty() || target.back() != kEos)
      throw std::invalid_argument("sequence_nll: target must be non-empty and end with EOS");
    check_ids(target);
    std::vector<Var> step_nll;
    int prev = kBos;
    for (int y : target) {
      Var dist = cfg.variant == Variant::shaped
                     ? shaped_step(g, static_cast<std::size_t>(style), enc, st, prev)
                     : single_step(g, enc, st, prev);
      step_nll.push_back(g.negate(g.log(g.slice(dist, static_cast<std::size_t>(y), 1))));
      prev = y;
    }
    return g.sum(g.concat(std::span<const Var>(step_nll.data(), step_nll.size())));
  }

  Var sequence_nll(Graph& g, const std::vector<int>& source, const std::vector<int>& target, int style) const {
    if (cfg.variant == Variant::shaped && (style < 0 || style >= static_cast<int>(styles.size())))
      throw std::invalid_argument("sequence_nll: shaped model needs a valid style id");
    EncodedInput enc = encode_all(g, source, cfg.variant == Variant::shaped ? style : -1);
    DecoderState st = init_decoder(g, enc, cfg.variant == Variant::shaped ? style : -1);
    return sequence_nll_given(g, enc, st, target, style);
  }

  struct LossParts {
    Var total;
    Var classifier;
    Var sequence;
    std::size_t target_tokens = 0;
  };

  // Joint objective: sum_i [ w * -log p(z_i|x_i) + -log p(y_i|x_i,z_i) ].
  LossParts joint_loss(Graph& g, std::span<const StyledExample> batch) const {
    require_shaped("joint_loss");
    if (batch.empty()) throw std::invalid_argument("joint_loss: empty batch");
    std::vector<Var> cls_terms, seq_terms;
    std::size_t tokens = 0;
    for (const auto& ex : batch) {
      if (ex.style < 0 || ex.style >= static_cast<int>(styles.size()))
        throw std::invalid_argument("joint_loss: example without a known style label");
      EncodedInput enc = encode_all(g, ex.source, -1);
      Var posterior = classify(g, enc, !cfg.classifier_backprop_full);
      cls_terms.push_back(g.negate(g.log(g.slice(posterior, static_cast<std::size_t>(ex.style), 1))));
      DecoderState st = init_decoder(g, enc, ex.style);
      seq_terms.push_back(sequence_nll_given(g, enc, st, ex.target, ex.style));
      tokens += ex.target.size();
    }
    LossParts out;
    out.classifier = g.sum(g.concat(std::span<const Var>(cls_terms.data(), cls_terms.size())));
    out.sequence = g.sum(g.concat(std::span<const Var>(seq_terms.data(), seq_terms.size())));
    Var weighted = cfg.classifier_weight == 1.0
                       ? out.classifier
                       : g.mul(out.classifier, g.constant({1}, cfg.classifier_weight));
    out.total = g.add(weighted, out.sequence);
    out.target_tokens = tokens;
    return out;
  }

  // Per-example loss for the single-stack baselines.
  LossParts single_loss(Graph& g, std::span<const StyledExample> batch) const {
    if (cfg.variant == Variant::shaped) throw std::invalid_argument("single_loss: shaped model");
    if (batch.empty()) throw std::invalid_argument("single_loss: empty batch");
    std::vector<Var> seq_terms;
    std::size_t tokens = 0;
    for (const auto& ex : batch) {
      EncodedInput enc = encode_all(g, ex.source);
      DecoderState st = init_decoder(g, enc);
      seq_terms.push_back(sequence_nll_given(g, enc, st, ex.target, -1));
      tokens += ex.target.size();
    }
    LossParts out;
    out.sequence = g.sum(g.concat(std::span<const Var>(seq_terms.data(), seq_terms.size())));
    out.classifier = g.constant({1}, 0.0);
    out.total = out.sequence;
    out.target_tokens = tokens;
    return out;
  }

  const EncDecStack& shared_stack() const { return shared_; }
  const EncDecStack& private_stack(std::size_t z) const { return private_[z]; }
  const EncDecStack& single_stack() const { return *single_; }

 private:
  Param* embedding_ = nullptr;
  EncDecStack shared_;                 // shaped only
  std::vector<EncDecStack> private_;   // shaped only
  std::optional<EncDecStack> single_;  // shared / private variants
  AttentionParams attn_{};
  OutputNetParams out_net_{};
  Param *cls_w_hidden_ = nullptr, *cls_b_hidden_ = nullptr;
  Param *cls_w_out_ = nullptr, *cls_b_out_ = nullptr;

  EncDecStack make_stack(const std::string& prefix, std::size_t e, std::size_t h) {
    EncDecStack s;
    s.enc_fwd = make_gru_stack(params, prefix + ".enc_fwd", cfg.gru_layers, h, e);
    s.enc_bwd = make_gru_stack(params, prefix + ".enc_bwd", cfg.gru_layers, h, e);
    s.dec = make_gru_stack(params, prefix + ".dec", cfg.gru_layers, h, e);
    s.init_w = params.create(prefix + ".init_w", {h, 2 * h});
    s.init_b = params.create(prefix + ".init_b", {h});
    return s;
  }

  Var init_vec(Graph& g, const EncDecStack& s, const Encoding& e) const {
    Var finals = g.concat(e.final_fwd, e.final_bwd);
    return g.add(g.matmul(g.param(*s.init_w), finals), g.param(*s.init_b));
  }

  // The common tail of a style path: advance private decoder z, concat
  // with the (already advanced) shared state, attend, project, softmax.
  void step_path(Graph& g, std::size_t z, const EncodedInput& enc, DecoderState& st, Var emb,
                 Var s_shared, Var& dist_out) const {
    if (st.private_layers[z].empty())
      throw std::invalid_argument("decode: decoder state missing for style " + styles.names[z]);
    Var s_priv = private_[z].dec.step(g, emb, st.private_layers[z]);
    Var s_cat = g.concat(s_priv, s_shared);
    Attended att = attend(g, enc.concat_states[z], enc.premix[z], s_cat, attn_);
    dist_out = g.softmax(output_logits(g, att.context, s_cat, out_net_, *embedding_));
  }

  void require_shaped(const char* what) const {
    if (cfg.variant != Variant::shaped)
      throw std::invalid_argument(std::string(what) + ": model variant is " + variant_name(cfg.variant));
  }

  void check_ids(const std::vector<int>& ids) const {
    for (int i : ids)
      if (i < 0 || static_cast<std::size_t>(i) >= vocab.size())
        throw std::invalid_argument("token id " + std::to_string(i) + " out of vocabulary (size " +
                                    std::to_string(vocab.size()) + ")");
  }
};

// Convex mixture of distributions under the style posterior.
inline std::vector<double> mix_distributions(const StylePosterior& posterior,
                                             const std::vector<std::vector<double>>& dists) {
  if (posterior.size() != dists.size())
    throw std::invalid_argument("mix_distributions: posterior/distribution count mismatch");
  std::vector<double> out(dists.at(0).size(), 0.0);
  for (std::size_t z = 0; z < dists.size(); ++z)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += posterior[z] * dists[z][i];
  return out;
}

enum class DecodeMode { shaped_style, mixture, uniform_mixture, shared_only, private_only };

struct GenerateOptions {
  DecodeMode mode = DecodeMode::shaped_style;
  int style = -1;  // shaped_style / private_only
  std::size_t max_len = 20;
  bool sample = false;
  std::uint64_t seed = 0;
};

inline int pick_token(const std::vector<double>& dist, bool sample, Rng& rng) {
  if (!sample) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i)
      if (dist[i] > dist[best]) best = i;
    return static_cast<int>(best);
  }
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(dist.size() - 1);
}

// Free-running decode. In mixture modes the classifier runs once on the
// source (the posterior depends on x only) and the chosen token feeds
// every decoder path.
inline std::vector<int> generate(const Model& m, const std::vector<int>& source, const GenerateOptions& opt) {
  if (opt.max_len < 1) throw std::invalid_argument("generate: max_len must be at least 1");
  const bool shaped_model = m.cfg.variant == Variant::shaped;
  switch (opt.mode) {
    case DecodeMode::shared_only:
      if (m.cfg.variant != Variant::shared) throw std::invalid_argument("generate: shared mode needs a shared-variant model");
      break;
    case DecodeMode::private_only:
      if (m.cfg.variant != Variant::private_style)
        throw std::invalid_argument("generate: private mode needs a private-variant model");
      break;
    default:
      if (!shaped_model) throw std::invalid_argument("generate: mode requires a shaped model");
  }

  Graph g;
  Rng rng(opt.seed);
  std::vector<int> out;
  if (!shaped_model) {
    EncodedInput enc = m.encode_all(g, source);
    DecoderState st = m.init_decoder(g, enc);
    int prev = kBos;
    for (std::size_t t = 0; t < opt.max_len; ++t) {
      Var dist = m.single_step(g, enc, st, prev);
      int tok = pick_token(g.value(dist).v, opt.sample, rng);
      if (tok == kEos) break;
      out.push_back(tok);
      prev = tok;
    }
    return out;
  }

  if (opt.mode == DecodeMode::shaped_style) {
    if (opt.style < 0 || opt.style >= static_cast<int>(m.styles.size()))
      throw std::invalid_argument("generate: shaped mode needs a valid style");
    EncodedInput enc = m.encode_all(g, source, opt.style);
    DecoderState st = m.init_decoder(g, enc, opt.style);
    int prev = kBos;
    for (std::size_t t = 0; t < opt.max_len; ++t) {
      Var dist = m.shaped_step(g, static_cast<std::size_t>(opt.style), enc, st, prev);
      int tok = pick_token(g.value(dist).v, opt.sample, rng);
      if (tok == kEos) break;
      out.push_back(tok);
      prev = tok;
    }
    return out;
  }

  EncodedInput enc = m.encode_all(g, source, -1);
  StylePosterior posterior;
  if (opt.mode == DecodeMode::mixture) {
    posterior = m.classify_values(g, enc);
  } else {
    posterior.assign(m.styles.size(), 1.0 / static_cast<double>(m.styles.size()));
  }
  DecoderState st = m.init_decoder(g, enc, -1);
  int prev = kBos;
  for (std::size_t t = 0; t < opt.max_len; ++t) {
    std::vector<double> dist = m.mixture_step(g, enc, st, prev, posterior);
    int tok = pick_token(dist, opt.sample, rng);
    if (tok == kEos) break;
    out.push_back(tok);
    prev = tok;
  }
  return out;
}

}  // namespace shaped
