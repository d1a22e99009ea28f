// GRU cells, bidirectional encoding, additive attention and the output
// network. All functions build onto a caller-owned Graph; parameters are
// plain Param pointers owned by a ParamStore.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "shaped/rng.hpp"
#include "shaped/tensor.hpp"

namespace shaped {

inline void init_uniform(Param& p, Rng& rng, double scale) {
  for (double& x : p.value.v) x = rng.uniform(-scale, scale);
}

struct GruLayer {
  // input-to-hidden (hidden x input), hidden-to-hidden (hidden x hidden), biases
  Param *w_update, *w_reset, *w_cand;
  Param *u_update, *u_reset, *u_cand;
  Param *b_update, *b_reset, *b_cand;
};

inline GruLayer make_gru_layer(ParamStore& ps, const std::string& prefix, std::size_t hidden,
                               std::size_t input) {
  GruLayer l;
  l.w_update = ps.create(prefix + ".w_update", {hidden, input});
  l.w_reset = ps.create(prefix + ".w_reset", {hidden, input});
  l.w_cand = ps.create(prefix + ".w_cand", {hidden, input});
  l.u_update = ps.create(prefix + ".u_update", {hidden, hidden});
  l.u_reset = ps.create(prefix + ".u_reset", {hidden, hidden});
  l.u_cand = ps.create(prefix + ".u_cand", {hidden, hidden});
  l.b_update = ps.create(prefix + ".b_update", {hidden});
  l.b_reset = ps.create(prefix + ".b_reset", {hidden});
  l.b_cand = ps.create(prefix + ".b_cand", {hidden});
  return l;
}

// One GRU step:
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   hc = tanh(W_c x + U_c (r .* h) + b_c)
//   h' = (1 - z) .* h + z .* hc
inline Var gru_cell(Graph& g, Var x, Var h_prev, const GruLayer& p) {
  const std::size_t hidden = p.u_update->value.shape[0];
  const std::size_t input = p.w_update->value.shape[1];
  if (g.value(x).shape != Shape{input} || g.value(h_prev).shape != Shape{hidden})
    throw std::invalid_argument("gru_cell: got x " + shape_str(g.value(x).shape) + ", h " +
                                shape_str(g.value(h_prev).shape) + " for cell (" +
                                std::to_string(hidden) + "," + std::to_string(input) + ")");
  Var z = g.sigmoid(g.add(g.add(g.matmul(g.param(*p.w_update), x), g.matmul(g.param(*p.u_update), h_prev)),
                          g.param(*p.b_update)));
  Var r = g.sigmoid(g.add(g.add(g.matmul(g.param(*p.w_reset), x), g.matmul(g.param(*p.u_reset), h_prev)),
                          g.param(*p.b_reset)));
  Var hc = g.tanh(g.add(g.add(g.matmul(g.param(*p.w_cand), x), g.matmul(g.param(*p.u_cand), g.mul(r, h_prev))),
                        g.param(*p.b_cand)));
  Var ones = g.constant({hidden}, 1.0);
  Var keep = g.add(ones, g.negate(z));
  return g.add(g.mul(keep, h_prev), g.mul(z, hc));
}

// A stack of GRU layers stepped together; layer l feeds layer l+1.
struct GruStack {
  std::vector<GruLayer> layers;

  std::size_t hidden() const { return layers.front().u_update->value.shape[0]; }

  Var step(Graph& g, Var x, std::vector<Var>& states) const {
    Var in = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      states[l] = gru_cell(g, in, states[l], layers[l]);
      in = states[l];
    }
    return in;
  }

  std::vector<Var> zero_state(Graph& g) const {
    return std::vector<Var>(layers.size(), g.constant({hidden()}, 0.0));
  }
};

inline GruStack make_gru_stack(ParamStore& ps, const std::string& prefix, std::size_t layers,
                               std::size_t hidden, std::size_t input) {
  GruStack s;
  for (std::size_t l = 0; l < layers; ++l)
    s.layers.push_back(make_gru_layer(ps, prefix + ".l" + std::to_string(l), hidden,
                                      l == 0 ? input : hidden));
  return s;
}

struct Encoding {
  Var states;     // {T, 2*hidden}: row j = [forward_j, backward_j]
  Var final_fwd;  // top-layer forward state at T-1
  Var final_bwd;  // top-layer backward state at 0 (i.e. after reading all)
  std::size_t length = 0;
};

// Bidirectional pass over embedded tokens. The same embedding nodes are
// shared between both directions.
inline Encoding encode_bidir(Graph& g, const std::vector<int>& ids, const GruStack& fwd,
                             const GruStack& bwd, Param& embedding) {
  if (ids.empty()) throw std::invalid_argument("encode_bidir: empty input sequence");
  const std::size_t t_len = ids.size();
  Var etab = g.param(embedding);
  std::vector<Var> emb(t_len);
  for (std::size_t j = 0; j < t_len; ++j) emb[j] = g.embedding(etab, ids[j]);

  std::vector<Var> f_states = fwd.zero_state(g);
  std::vector<Var> b_states = bwd.zero_state(g);
  std::vector<Var> f_out(t_len), b_out(t_len);
  for (std::size_t j = 0; j < t_len; ++j) f_out[j] = fwd.step(g, emb[j], f_states);
  for (std::size_t j = 0; j < t_len; ++j) b_out[t_len - 1 - j] = bwd.step(g, emb[t_len - 1 - j], b_states);

  std::vector<Var> rows(t_len);
  for (std::size_t j = 0; j < t_len; ++j) rows[j] = g.concat(f_out[j], b_out[j]);
  Encoding enc;
  enc.states = g.stack_rows(rows);
  enc.final_fwd = f_out[t_len - 1];
  enc.final_bwd = b_out[0];
  enc.length = t_len;
  return enc;
}

struct AttentionParams {
  Param* w_enc;   // {enc_width, attn}
  Param* u_dec;   // {dec_width, attn}
  Param* score_v; // {attn}
};

inline AttentionParams make_attention(ParamStore& ps, const std::string& prefix,
                                      std::size_t enc_width, std::size_t dec_width, std::size_t attn) {
  return AttentionParams{ps.create(prefix + ".w_enc", {enc_width, attn}),
                         ps.create(prefix + ".u_dec", {dec_width, attn}),
                         ps.create(prefix + ".score_v", {attn})};
}

struct Attended {
  Var weights;  // {T}, softmax-normalized
  Var context;  // {enc_width}
};

// Projection of the encoder states, computable once per sequence.
inline Var attention_premix(Graph& g, Var enc_states, const AttentionParams& a) {
  return g.matmul(enc_states, g.param(*a.w_enc));
}

// scores_j = v . tanh(W_enc h_j + U_dec s); weights = softmax(scores);
// context = sum_j weights_j h_j.
inline Attended attend(Graph& g, Var enc_states, Var premix, Var dec_state, const AttentionParams& a) {
  const Tensor& h = g.value(enc_states);
  if (!h.is_matrix() || h.shape[0] == 0)
    throw std::invalid_argument("attend: encoder states must be a non-empty {T,w} matrix, got " +
                                shape_str(h.shape));
  Var mixed = g.tanh(g.add(premix, g.matmul(dec_state, g.param(*a.u_dec))));
  Var scores = g.matmul(mixed, g.param(*a.score_v));
  Attended out;
  out.weights = g.softmax(scores);
  out.context = g.matmul(out.weights, enc_states);
  return out;
}

inline Attended attend(Graph& g, Var enc_states, Var dec_state, const AttentionParams& a) {
  return attend(g, enc_states, attention_premix(g, enc_states, a), dec_state, a);
}

// Output network g([context, state]) -> vocab logits. One tanh hidden
// layer into embedding space, then the tied transpose-free projection
// through the embedding table plus a free output bias.
struct OutputNetParams {
  Param* w_hidden;  // {embed, context_width + state_width}
  Param* b_hidden;  // {embed}
  Param* b_out;     // {vocab}
};

inline OutputNetParams make_output_net(ParamStore& ps, const std::string& prefix,
                                       std::size_t embed, std::size_t in_width, std::size_t vocab) {
  return OutputNetParams{ps.create(prefix + ".w_hidden", {embed, in_width}),
                         ps.create(prefix + ".b_hidden", {embed}),
                         ps.create(prefix + ".b_out", {vocab})};
}

inline Var output_logits(Graph& g, Var context, Var state, const OutputNetParams& net, Param& embedding) {
  Var x = g.concat(context, state);
  const std::size_t want = net.w_hidden->value.shape[1];
  if (g.value(x).shape != Shape{want})
    throw std::invalid_argument("output_logits: [context,state] is " + shape_str(g.value(x).shape) +
                                ", expected [" + std::to_string(want) + "]");
  Var hidden = g.tanh(g.add(g.matmul(g.param(*net.w_hidden), x), g.param(*net.b_hidden)));
  return g.add(g.matmul(g.param(embedding), hidden), g.param(*net.b_out));
}

}  // namespace shaped
