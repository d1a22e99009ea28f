#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "reference_model.hpp"
#include "shaped/checkpoint.hpp"
#include "shaped/gradcheck.hpp"
#include "shaped/model.hpp"

using namespace shaped;

namespace {

Model tiny_shaped(std::size_t n_styles = 2, std::uint64_t seed = 7, std::size_t vocab_extra = 8) {
  Config cfg;
  cfg.variant = Variant::shaped;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 5;
  cfg.attn_dim = 4;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n_styles; ++i) names.push_back("style" + std::to_string(i));
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < vocab_extra; ++i) tokens.push_back("t" + std::to_string(i + 4));
  Model m(cfg, StyleSet(names), Vocabulary::from_tokens(tokens));
  m.init_params(seed);
  return m;
}

void zero_params_with_prefix(Model& m, const std::string& prefix) {
  for (auto& p : m.params)
    if (p->name.rfind(prefix, 0) == 0) std::fill(p->value.v.begin(), p->value.v.end(), 0.0);
}

}  // namespace

TEST_CASE("style set validates names") {
  CHECK_THROWS_AS(StyleSet(std::vector<std::string>{}), std::invalid_argument);
  CHECK_THROWS_AS(StyleSet({"a", "a"}), std::invalid_argument);
  StyleSet s({"b", "a"});
  CHECK(s.index("a") == 1);
  CHECK(s.index("zz") == -1);
  CHECK_THROWS_AS(s.require("zz"), std::invalid_argument);
}

TEST_CASE("shaped model owns one private stack per style and single shared instances") {
  Model m = tiny_shaped(3);
  CHECK(m.params.find("private.style0.dec.l0.w_update") != nullptr);
  CHECK(m.params.find("private.style2.dec.l0.w_update") != nullptr);
  CHECK(m.params.find("private.style3.dec.l0.w_update") == nullptr);
  CHECK(m.params.find("attention.w_enc") != nullptr);
  // exactly one attention/embedding/output instance: creating a duplicate
  // name would have thrown in the ParamStore
  int attn_count = 0;
  for (auto& p : m.params) attn_count += p->name.rfind("attention.", 0) == 0 ? 1 : 0;
  CHECK(attn_count == 3);
}

TEST_CASE("encode_all with a single style computes one private and one shared sequence") {
  Model m = tiny_shaped(1);
  Graph g;
  EncodedInput enc = m.encode_all(g, {4, 5, 6}, -1);
  CHECK(enc.shared.has_value());
  CHECK(enc.priv.size() == 1);
  CHECK(enc.has_style(0));
  CHECK(g.value(enc.concat_states[0]).shape == Shape{3, 4 * m.cfg.hidden_dim});
}

TEST_CASE("identical shared and private parameters duplicate the halves") {
  Model m = tiny_shaped(2);
  for (auto& p : m.params) {
    const std::string target = "private.style1.";
    if (p->name.rfind(target, 0) == 0) {
      Param* src = m.params.find("shared." + p->name.substr(target.size()));
      REQUIRE(src != nullptr);
      p->value = src->value;
    }
  }
  Graph g;
  EncodedInput enc = m.encode_all(g, {4, 6, 5}, 1);
  const Tensor& cat = g.value(enc.concat_states[1]);
  const std::size_t w = 2 * m.cfg.hidden_dim;
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < w; ++i)
      CHECK(cat.v[j * 2 * w + i] == doctest::Approx(cat.v[j * 2 * w + w + i]).epsilon(1e-14));
}

TEST_CASE("encode_all matches the per-style reference recurrence") {
  Model m = tiny_shaped(2, 31);
  const std::vector<int> ids = {5, 4, 7, 6};
  Graph g;
  EncodedInput enc = m.encode_all(g, ids, -1);
  for (std::size_t z = 0; z < 2; ++z) {
    refmodel::RefEncoding ref = refmodel::encode_bidir(m, "private." + m.styles.names[z], ids);
    const Tensor& got = g.value(enc.priv[z]->states);
    for (std::size_t j = 0; j < ids.size(); ++j)
      for (std::size_t i = 0; i < 2 * m.cfg.hidden_dim; ++i)
        CHECK(got.v[j * 2 * m.cfg.hidden_dim + i] == doctest::Approx(ref.rows[j][i]).epsilon(1e-12));
  }
}

TEST_CASE("encode_all rejects unknown style ids and empty input") {
  Model m = tiny_shaped(2);
  Graph g;
  CHECK_THROWS_AS(m.encode_all(g, {4, 5}, 7), std::invalid_argument);
  CHECK_THROWS_AS(m.encode_all(g, {}, -1), std::invalid_argument);
  CHECK_THROWS_AS(m.encode_all(g, {4, 999}, -1), std::invalid_argument);
}

TEST_CASE("shaped_step with zero output parameters is uniform") {
  Model m = tiny_shaped(2);
  zero_params_with_prefix(m, "output.");
  Graph g;
  EncodedInput enc = m.encode_all(g, {4, 5}, 0);
  DecoderState st = m.init_decoder(g, enc, 0);
  Var dist = m.shaped_step(g, 0, enc, st, kBos);
  for (double v : g.value(dist).v) CHECK(v == doctest::Approx(1.0 / m.vocab.size()).epsilon(1e-14));
}

TEST_CASE("shaped_step distributions sum to one") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
    Model m = tiny_shaped(2, seed);
    Graph g;
    EncodedInput enc = m.encode_all(g, {4, 6}, 1);
    DecoderState st = m.init_decoder(g, enc, 1);
    int prev = kBos;
    for (int t = 0; t < 4; ++t) {
      Var dist = m.shaped_step(g, 1, enc, st, prev);
      double sum = 0;
      for (double v : g.value(dist).v) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::fabs(sum - 1.0) <= 1e-12);
      prev = 4 + t % 3;
    }
  }
}

TEST_CASE("shaped_step matches the reference single-step evaluation") {
  Model m = tiny_shaped(2, 13);
  const std::vector<int> ids = {6, 4, 5};
  Graph g;
  EncodedInput enc = m.encode_all(g, ids, 1);
  DecoderState st = m.init_decoder(g, enc, 1);
  Var dist = m.shaped_step(g, 1, enc, st, kBos);
  refmodel::RefShapedRun run = refmodel::start_shaped(m, 1, ids);
  refmodel::Vec ref = refmodel::shaped_step(m, 1, run, kBos);
  for (std::size_t i = 0; i < ref.size(); ++i)
    CHECK(g.value(dist).v[i] == doctest::Approx(ref[i]).epsilon(1e-12));

  // second step agrees too (state threading)
  Var dist2 = m.shaped_step(g, 1, enc, st, 5);
  refmodel::Vec ref2 = refmodel::shaped_step(m, 1, run, 5);
  for (std::size_t i = 0; i < ref2.size(); ++i)
    CHECK(g.value(dist2).v[i] == doctest::Approx(ref2[i]).epsilon(1e-12));
}

TEST_CASE("shaped_step without the private encoding is rejected") {
  Model m = tiny_shaped(2);
  Graph g;
  EncodedInput enc = m.encode_all(g, {4, 5}, 0);
  DecoderState st = m.init_decoder(g, enc, 0);
  CHECK_THROWS_AS(m.shaped_step(g, 1, enc, st, kBos), std::invalid_argument);
}

TEST_CASE("classifier posterior for a single style is certain") {
  Model m = tiny_shaped(1);
  Graph g;
  EncodedInput enc = m.encode_all(g, {4, 5}, -1);
  StylePosterior p = m.classify_values(g, enc);
  REQUIRE(p.size() == 1);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("zero classifier weights give a uniform posterior") {
  Model m = tiny_shaped(3);
  zero_params_with_prefix(m, "classifier.");
  Graph g;
  EncodedInput enc = m.encode_all(g, {4, 5, 6}, -1);
  StylePosterior p = m.classify_values(g, enc);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("classifier requires every private encoding") {
  Model m = tiny_shaped(2);
  Graph g;
  EncodedInput enc = m.encode_all(g, {4, 5}, 0);
  CHECK_THROWS_AS(m.classify(g, enc, true), std::invalid_argument);
}

TEST_CASE("mixture collapse: one-hot posterior equals the shaped path") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    Model m = tiny_shaped(3, seed);
    const std::vector<int> ids = {4, 7, 5};
    const std::vector<int> fed = {kBos, 6, 9, 5};
    for (std::size_t hot = 0; hot < 3; ++hot) {
      StylePosterior onehot(3, 0.0);
      onehot[hot] = 1.0;
      Graph g1;
      EncodedInput e1 = m.encode_all(g1, ids, -1);
      DecoderState st1 = m.init_decoder(g1, e1, -1);
      Graph g2;
      EncodedInput e2 = m.encode_all(g2, ids, static_cast<int>(hot));
      DecoderState st2 = m.init_decoder(g2, e2, static_cast<int>(hot));
      for (int y : fed) {
        std::vector<double> mix = m.mixture_step(g1, e1, st1, y, onehot);
        Var sp = m.shaped_step(g2, hot, e2, st2, y);
        for (std::size_t i = 0; i < mix.size(); ++i)
          CHECK(std::fabs(mix[i] - g2.value(sp).v[i]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("mixture of hand-set distributions is the weighted sum") {
  std::vector<std::vector<double>> dists = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};
  std::vector<double> mixed = mix_distributions({0.6, 0.4}, dists);
  CHECK(mixed[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(mixed[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mixed[2] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(mix_distributions({1.0}, dists), std::invalid_argument);
}

TEST_CASE("uniform posterior over identical styles returns the common distribution") {
  Model m = tiny_shaped(2, 19);
  // make style1 a copy of style0 so the two paths emit the same distribution
  for (auto& p : m.params) {
    const std::string target = "private.style1.";
    if (p->name.rfind(target, 0) == 0)
      p->value = m.params.find("private.style0." + p->name.substr(target.size()))->value;
  }
  Graph g;
  EncodedInput enc = m.encode_all(g, {4, 5}, -1);
  DecoderState st = m.init_decoder(g, enc, -1);
  std::vector<double> mix = m.mixture_step(g, enc, st, kBos, {0.5, 0.5});

  Graph g2;
  EncodedInput e2 = m.encode_all(g2, {4, 5}, 0);
  DecoderState st2 = m.init_decoder(g2, e2, 0);
  Var sp = m.shaped_step(g2, 0, e2, st2, kBos);
  for (std::size_t i = 0; i < mix.size(); ++i) CHECK(mix[i] == doctest::Approx(g2.value(sp).v[i]).epsilon(1e-12));
}

TEST_CASE("mixture probabilities interpolate between the style paths") {
  Model m = tiny_shaped(3, 23);
  Graph g;
  const std::vector<int> ids = {5, 6};
  EncodedInput enc = m.encode_all(g, ids, -1);
  // gather per-style dists with fresh states, then compare to the mixture
  std::vector<std::vector<double>> dists;
  for (std::size_t z = 0; z < 3; ++z) {
    Graph gz;
    EncodedInput ez = m.encode_all(gz, ids, static_cast<int>(z));
    DecoderState stz = m.init_decoder(gz, ez, static_cast<int>(z));
    dists.push_back(gz.value(m.shaped_step(gz, z, ez, stz, kBos)).v);
  }
  DecoderState st = m.init_decoder(g, enc, -1);
  StylePosterior post = {0.2, 0.5, 0.3};
  std::vector<double> mix = m.mixture_step(g, enc, st, kBos, post);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    double lo = 1e9, hi = -1e9;
    for (const auto& d : dists) {
      lo = std::min(lo, d[i]);
      hi = std::max(hi, d[i]);
    }
    CHECK(mix[i] >= lo - 1e-12);
    CHECK(mix[i] <= hi + 1e-12);
  }
}

TEST_CASE("mixture_step validates the posterior length") {
  Model m = tiny_shaped(2);
  Graph g;
  EncodedInput enc = m.encode_all(g, {4}, -1);
  DecoderState st = m.init_decoder(g, enc, -1);
  CHECK_THROWS_AS(m.mixture_step(g, enc, st, kBos, {1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("forced-uniform sequence likelihood is length times log vocab") {
  Config cfg;
  cfg.variant = Variant::shaped;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 3;
  cfg.attn_dim = 3;
  Model m(cfg, StyleSet({"a", "b"}), Vocabulary());  // |V| = 4 reserved ids only
  m.init_params(3);
  zero_params_with_prefix(m, "output.");
  Graph g;
  Var nll = m.sequence_nll(g, {3, 3}, {3, kEos}, 0);
  CHECK(g.scalar(nll) == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("sequence likelihood is non-negative and matches the stepwise oracle") {
  Model m = tiny_shaped(2, 29);
  const std::vector<int> x = {4, 8, 6};
  const std::vector<int> y = {5, 7, kEos};
  Graph g;
  Var nll = m.sequence_nll(g, x, y, 1);
  CHECK(g.scalar(nll) >= 0.0);
  CHECK(g.scalar(nll) == doctest::Approx(refmodel::sequence_nll(m, 1, x, y)).epsilon(1e-12));
}

TEST_CASE("sequence likelihood validates its target") {
  Model m = tiny_shaped(2);
  Graph g;
  CHECK_THROWS_AS(m.sequence_nll(g, {4}, {5, 6}, 0), std::invalid_argument);       // no EOS
  CHECK_THROWS_AS(m.sequence_nll(g, {4}, {}, 0), std::invalid_argument);           // empty
  CHECK_THROWS_AS(m.sequence_nll(g, {4}, {400, kEos}, 0), std::invalid_argument);  // out of vocab
  CHECK_THROWS_AS(m.sequence_nll(g, {4}, {5, kEos}, 9), std::invalid_argument);    // bad style
}

TEST_CASE("uniform-everything joint loss is ln 2 plus ln 4") {
  Config cfg;
  cfg.variant = Variant::shaped;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 3;
  cfg.attn_dim = 3;
  Model m(cfg, StyleSet({"a", "b"}), Vocabulary());
  m.init_params(5);
  zero_params_with_prefix(m, "output.");
  zero_params_with_prefix(m, "classifier.");
  StyledExample ex;
  ex.source = {3};
  ex.target = {kEos};
  ex.style = 1;
  const StyledExample batch[1] = {ex};
  Graph g;
  auto parts = m.joint_loss(g, std::span<const StyledExample>(batch, 1));
  CHECK(g.scalar(parts.total) == doctest::Approx(std::log(2.0) + std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("joint loss adds over the batch") {
  Model m = tiny_shaped(2, 37);
  StyledExample a, b;
  a.source = {4, 5};
  a.target = {6, kEos};
  a.style = 0;
  b.source = {7, 8, 9};
  b.target = {4, 5, kEos};
  b.style = 1;
  Graph g1, g2, g12;
  const StyledExample ba[1] = {a}, bb[1] = {b}, bab[2] = {a, b};
  const double la = g1.scalar(m.joint_loss(g1, std::span<const StyledExample>(ba, 1)).total);
  const double lb = g2.scalar(m.joint_loss(g2, std::span<const StyledExample>(bb, 1)).total);
  const double lab = g12.scalar(m.joint_loss(g12, std::span<const StyledExample>(bab, 2)).total);
  CHECK(lab == doctest::Approx(la + lb).epsilon(1e-12));
}

TEST_CASE("joint loss rejects unlabeled examples") {
  Model m = tiny_shaped(2);
  StyledExample ex;
  ex.source = {4};
  ex.target = {kEos};
  ex.style = kNoStyle;
  const StyledExample batch[1] = {ex};
  Graph g;
  CHECK_THROWS_AS(m.joint_loss(g, std::span<const StyledExample>(batch, 1)), std::invalid_argument);
}

TEST_CASE("sequence loss gradients do not touch other styles' private parameters") {
  Model m = tiny_shaped(3, 41);
  Graph g;
  Var nll = m.sequence_nll(g, {4, 5, 6}, {7, kEos}, 0);
  m.params.zero_grads();
  g.backward(nll);
  bool any_own = false;
  for (auto& p : m.params) {
    if (p->name.rfind("private.style1.", 0) == 0 || p->name.rfind("private.style2.", 0) == 0) {
      for (double gv : p->grad) CHECK(gv == 0.0);
    }
    if (p->name.rfind("private.style0.", 0) == 0)
      for (double gv : p->grad) any_own = any_own || gv != 0.0;
  }
  CHECK(any_own);
}

TEST_CASE("classifier loss under stop-gradient leaves encoders untouched") {
  Model m = tiny_shaped(2, 43);
  REQUIRE(!m.cfg.classifier_backprop_full);
  StyledExample ex;
  ex.source = {4, 5, 6};
  ex.target = {7, kEos};
  ex.style = 0;
  const StyledExample batch[1] = {ex};
  Graph g;
  auto parts = m.joint_loss(g, std::span<const StyledExample>(batch, 1));
  m.params.zero_grads();
  g.backward(parts.classifier);
  for (auto& p : m.params) {
    if (p->name.rfind("classifier.", 0) == 0) continue;
    for (double gv : p->grad) CHECK(gv == 0.0);
  }
}

TEST_CASE("full classifier backprop reaches the private encoders when asked") {
  Model m = tiny_shaped(2, 47);
  m.cfg.classifier_backprop_full = true;
  StyledExample ex;
  ex.source = {4, 5, 6};
  ex.target = {7, kEos};
  ex.style = 0;
  const StyledExample batch[1] = {ex};
  Graph g;
  auto parts = m.joint_loss(g, std::span<const StyledExample>(batch, 1));
  m.params.zero_grads();
  g.backward(parts.classifier);
  bool any = false;
  Param* p = m.params.find("private.style1.enc_fwd.l0.w_update");
  for (double gv : p->grad) any = any || gv != 0.0;
  CHECK(any);
}

TEST_CASE("attention embedding and output parameters are shared across paths") {
  Model m = tiny_shaped(2, 53);
  Graph g;
  CHECK(g.param(m.embedding()).id == g.param(m.embedding()).id);
  // behavioral: nudging the shared attention scorer changes both style paths
  auto dist_for = [&](std::size_t z) {
    Graph gg;
    EncodedInput e = m.encode_all(gg, {4, 5}, static_cast<int>(z));
    DecoderState st = m.init_decoder(gg, e, static_cast<int>(z));
    return gg.value(m.shaped_step(gg, z, e, st, kBos)).v;
  };
  auto before0 = dist_for(0), before1 = dist_for(1);
  m.params.find("attention.score_v")->value.v[0] += 0.5;
  auto after0 = dist_for(0), after1 = dist_for(1);
  CHECK(before0 != after0);
  CHECK(before1 != after1);
}

TEST_CASE("gradient of the joint loss passes the finite-difference check") {
  Model m = tiny_shaped(2, 59, 10);
  m.cfg.classifier_backprop_full = true;  // finite differences see the undetached objective
  m.cfg.init_scale = 0.8;
  m.init_params(59);  // re-init at a point where gradients dominate fd rounding noise
  StyledExample a, b;
  a.source = {4, 9, 5};
  a.target = {6, 7, kEos};
  a.style = 0;
  b.source = {8, 6};
  b.target = {4, kEos};
  b.style = 1;
  const StyledExample batch[2] = {a, b};
  std::vector<Param*> params;
  for (auto& p : m.params) params.push_back(p.get());
  auto res = grad_check(
      [&](Graph& g) { return m.joint_loss(g, std::span<const StyledExample>(batch, 2)).total; },
      std::span<Param* const>(params.data(), params.size()), 1e-5, 5, 7);
  INFO("worst ", res.worst_param);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("generate emits exactly one token at max_len 1 and is deterministic") {
  Model m = tiny_shaped(2, 61);
  // bias the output toward a fixed non-EOS token so the length contract is exercised
  zero_params_with_prefix(m, "output.");
  m.params.find("output.b_out")->value.v[5] = 2.0;
  GenerateOptions opt;
  opt.mode = DecodeMode::shaped_style;
  opt.style = 0;
  opt.max_len = 1;
  auto out = generate(m, {4, 5}, opt);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == 5);

  opt.max_len = 6;
  auto a = generate(m, {4, 5}, opt);
  auto b = generate(m, {4, 5}, opt);
  CHECK(a == b);
  CHECK_THROWS_AS(generate(m, {4, 5}, GenerateOptions{DecodeMode::shaped_style, 0, 0}), std::invalid_argument);
}

TEST_CASE("generate stops at EOS") {
  Model m = tiny_shaped(2, 67);
  zero_params_with_prefix(m, "output.");
  m.params.find("output.b_out")->value.v[kEos] = 2.0;
  GenerateOptions opt;
  opt.mode = DecodeMode::mixture;
  opt.max_len = 8;
  CHECK(generate(m, {4, 5}, opt).empty());
}

TEST_CASE("mixture generation with a one-hot posterior tracks the shaped path token-for-token") {
  Model m = tiny_shaped(2, 71);
  const std::vector<int> x = {4, 8, 5};
  GenerateOptions opt;
  opt.mode = DecodeMode::shaped_style;
  opt.style = 1;
  opt.max_len = 6;
  std::vector<int> shaped_out = generate(m, x, opt);

  // drive the mixture loop manually with a one-hot posterior
  Graph g;
  EncodedInput enc = m.encode_all(g, x, -1);
  DecoderState st = m.init_decoder(g, enc, -1);
  StylePosterior onehot = {0.0, 1.0};
  std::vector<int> mix_out;
  int prev = kBos;
  for (std::size_t t = 0; t < 6; ++t) {
    std::vector<double> dist = m.mixture_step(g, enc, st, prev, onehot);
    Rng rng(0);
    int tok = pick_token(dist, false, rng);
    if (tok == kEos) break;
    mix_out.push_back(tok);
    prev = tok;
  }
  CHECK(mix_out == shaped_out);
}

TEST_CASE("generate validates mode against the model variant") {
  Model m = tiny_shaped(2);
  GenerateOptions opt;
  opt.mode = DecodeMode::shared_only;
  CHECK_THROWS_AS(generate(m, {4}, opt), std::invalid_argument);

  Config cfg;
  cfg.variant = Variant::shared;
  cfg.embed_dim = 3;
  cfg.hidden_dim = 3;
  cfg.attn_dim = 3;
  Model s(cfg, StyleSet({"a"}), Vocabulary::from_tokens({"x", "y"}));
  s.init_params(1);
  opt.mode = DecodeMode::mixture;
  CHECK_THROWS_AS(generate(s, {4}, opt), std::invalid_argument);
  opt.mode = DecodeMode::shared_only;
  CHECK_NOTHROW(generate(s, {4}, opt));
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  namespace fs = std::filesystem;
  const std::string dir = "ckpt_test_tmp";
  fs::create_directories(dir);
  Model m = tiny_shaped(2, 73);
  const std::string p1 = dir + "/a.ckpt", p2 = dir + "/b.ckpt";
  save_checkpoint(p1, m, nullptr, 12, 1);

  Checkpoint ck = load_checkpoint(p1);
  CHECK(ck.step == 12);
  CHECK(ck.skipped_steps == 1);
  Model m2 = ck.build_model();
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    CHECK(m2.params.at(i).name == m.params.at(i).name);
    CHECK(m2.params.at(i).value.v == m.params.at(i).value.v);
  }
  save_checkpoint(p2, m2, nullptr, 12, 1);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  fs::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected with an offset") {
  namespace fs = std::filesystem;
  const std::string dir = "ckpt_test_tmp2";
  fs::create_directories(dir);
  Model m = tiny_shaped(2, 79);
  const std::string path = dir + "/c.ckpt";
  save_checkpoint(path, m);

  // truncate
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(path + ".trunc", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path + ".trunc"), doctest::Contains("byte offset"), std::runtime_error);

  // bad version
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes[8] = 99;
    std::ofstream out(path + ".ver", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path + ".ver"), doctest::Contains("version"), std::runtime_error);
  fs::remove_all(dir);
}
