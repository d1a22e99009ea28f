// Mini-batch Adagrad training of the joint objective, with deterministic
// shuffling, best-loss tracking, checkpoint/resume and a line-delimited
// training log.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "shaped/checkpoint.hpp"
#include "shaped/corpus.hpp"
#include "shaped/model.hpp"
#include "shaped/rng.hpp"

namespace shaped {

struct AdagradState {
  std::vector<std::vector<double>> acc;  // squared-gradient sums, ParamStore order

  static AdagradState zeros_like(const ParamStore& ps) {
    AdagradState st;
    st.acc.reserve(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) st.acc.emplace_back(ps.at(i).value.size(), 0.0);
    return st;
  }
};

// acc += g^2; p -= lr * g / (sqrt(acc) + eps). The whole step is rejected
// (state untouched) if any gradient coordinate is non-finite.
inline void adagrad_step(ParamStore& ps, AdagradState& st, double lr, double eps) {
  if (st.acc.size() != ps.size()) throw std::invalid_argument("adagrad_step: state does not match parameters");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Param& p = ps.at(i);
    if (st.acc[i].size() != p.value.size())
      throw std::invalid_argument("adagrad_step: accumulator shape mismatch for " + p.name);
    for (double g : p.grad)
      if (!std::isfinite(g)) throw std::runtime_error("adagrad_step: non-finite gradient in " + p.name);
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Param& p = ps.at(i);
    for (std::size_t j = 0; j < p.grad.size(); ++j) {
      const double g = p.grad[j];
      if (g == 0.0) continue;
      st.acc[i][j] += g * g;
      p.value.v[j] -= lr * g / (std::sqrt(st.acc[i][j]) + eps);
    }
  }
}

struct TrainLogEntry {
  std::uint64_t step = 0;
  double loss = 0.0;
  double classifier_loss = 0.0;
  double seq_loss = 0.0;
};

struct TrainResult {
  std::uint64_t steps_done = 0;
  std::uint64_t skipped_steps = 0;
  double final_loss = 0.0;     // per-example, last step
  double best_loss = 0.0;      // per-example
  std::uint64_t best_step = 0;
};

// Epoch ordering is derived from (seed, epoch), so a resumed run walks the
// same batch sequence as an uninterrupted one.
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, epoch));
  rng.shuffle(idx);
  return idx;
}

inline TrainResult train(Model& m, const std::vector<StyledExample>& data, AdagradState& st,
                         std::uint64_t start_step, std::uint64_t* skipped_io = nullptr,
                         const std::function<void(const TrainLogEntry&)>& log_sink = {},
                         std::vector<Tensor>* best_values_out = nullptr) {
  const Config& cfg = m.cfg;
  if (data.empty()) throw std::invalid_argument("train: empty corpus");
  if (start_step >= cfg.steps) throw std::invalid_argument("train: start step is past configured steps");
  if (m.cfg.variant != Variant::shared)
    for (const auto& ex : data)
      if (ex.style < 0) throw std::invalid_argument("train: variant " + variant_name(cfg.variant) + " requires style labels");

  const std::size_t steps_per_epoch = (data.size() + cfg.batch - 1) / cfg.batch;
  TrainResult res;
  res.skipped_steps = skipped_io ? *skipped_io : 0;
  res.best_loss = std::numeric_limits<double>::infinity();

  std::uint64_t order_epoch = ~0ULL;
  std::vector<std::size_t> order;
  std::vector<StyledExample> batch;

  for (std::uint64_t step = start_step; step < cfg.steps; ++step) {
    const std::uint64_t epoch = step / steps_per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(data.size(), cfg.seed, epoch);
      order_epoch = epoch;
    }
    const std::size_t lo = (step % steps_per_epoch) * cfg.batch;
    const std::size_t hi = std::min(data.size(), lo + cfg.batch);
    batch.clear();
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(data[order[i]]);

    Graph g;
    Model::LossParts parts = cfg.variant == Variant::shaped
                                 ? m.joint_loss(g, std::span<const StyledExample>(batch.data(), batch.size()))
                                 : m.single_loss(g, std::span<const StyledExample>(batch.data(), batch.size()));
    const double loss = g.scalar(parts.total);
    bool ok = std::isfinite(loss);
    if (ok) {
      m.params.zero_grads();
      g.backward(parts.total);
      try {
        adagrad_step(m.params, st, cfg.lr, cfg.adagrad_eps);
      } catch (const std::runtime_error&) {
        ok = false;
      }
    }
    if (!ok) {
      ++res.skipped_steps;
      continue;
    }

    const double per_example = loss / static_cast<double>(batch.size());
    res.final_loss = per_example;
    if (best_values_out && per_example < res.best_loss) {
      res.best_loss = per_example;
      res.best_step = step + 1;
      best_values_out->clear();
      for (std::size_t i = 0; i < m.params.size(); ++i) best_values_out->push_back(m.params.at(i).value);
    }
    if (log_sink && (cfg.log_every > 0 && ((step + 1) % cfg.log_every == 0 || step + 1 == cfg.steps))) {
      TrainLogEntry e;
      e.step = step + 1;
      e.loss = loss;
      e.classifier_loss = cfg.variant == Variant::shaped ? g.scalar(parts.classifier) : 0.0;
      e.seq_loss = g.scalar(parts.sequence);
      log_sink(e);
    }
    res.steps_done = step + 1;
  }
  if (skipped_io) *skipped_io = res.skipped_steps;
  return res;
}

struct TrainJob {
  Config cfg;
  std::vector<RawExample> corpus;
  std::string out_path;      // final checkpoint (with optimizer state); best at out_path + ".best"
  std::string log_path;      // optional training log (jsonl)
  std::string resume_path;   // optional checkpoint to continue from
  bool quiet = true;
};

inline std::string config_text_ignoring_steps(const Config& c) {
  Config copy = c;
  copy.steps = 1;
  return config_to_text(copy);
}

// End-to-end training entry: derives the style set and vocabulary from the
// corpus (or the resume checkpoint), trains, and writes final + best
// checkpoints plus the log.
inline TrainResult run_training(const TrainJob& job) {
  std::unique_ptr<Model> model;
  AdagradState st;
  std::uint64_t start_step = 0;
  std::uint64_t skipped = 0;

  if (!job.resume_path.empty()) {
    Checkpoint ck = load_checkpoint(job.resume_path);
    if (config_text_ignoring_steps(ck.cfg) != config_text_ignoring_steps(job.cfg))
      throw std::runtime_error("resume: checkpoint config does not match requested config");
    if (!ck.adagrad) throw std::runtime_error("resume: checkpoint " + job.resume_path + " has no optimizer state");
    model = std::make_unique<Model>(ck.build_model());
    model->cfg.steps = job.cfg.steps;
    st.acc = *ck.adagrad;
    start_step = ck.step;
    skipped = ck.skipped_steps;
  } else {
    std::set<std::string> labels;
    for (const auto& ex : job.corpus)
      if (ex.style) labels.insert(*ex.style);
    if (job.cfg.variant != Variant::shared && labels.empty())
      throw std::runtime_error("train: variant " + variant_name(job.cfg.variant) + " requires labeled examples");
    StyleSet styles(labels.empty() ? std::vector<std::string>{"all"}
                                   : std::vector<std::string>(labels.begin(), labels.end()));

    std::vector<std::vector<std::string>> docs;
    for (const auto& ex : job.corpus) {
      docs.push_back(tokenize(ex.source));
      docs.push_back(tokenize(ex.target));
    }
    Vocabulary vocab = build_vocab(docs, job.cfg.vocab_cap);
    model = std::make_unique<Model>(job.cfg, styles, vocab);
    model->init_params(job.cfg.seed);
    st = AdagradState::zeros_like(model->params);
  }

  // Encode; for the private variant keep only the owned style's examples.
  std::vector<StyledExample> data;
  const int own_style = job.cfg.variant == Variant::private_style ? model->styles.require(job.cfg.style) : -1;
  for (const auto& ex : job.corpus) {
    int style = kNoStyle;
    if (ex.style) {
      style = model->styles.index(*ex.style);
      if (style < 0 && job.cfg.variant != Variant::shared)
        throw std::runtime_error("train: example style '" + *ex.style + "' not in model style set");
    } else if (job.cfg.variant != Variant::shared) {
      throw std::runtime_error("train: unlabeled example under variant " + variant_name(job.cfg.variant));
    }
    if (own_style >= 0 && style != own_style) continue;
    data.push_back(encode_example(ex.source, ex.target, model->vocab, job.cfg.max_src, job.cfg.max_tgt, style));
  }
  if (data.empty()) throw std::runtime_error("train: no usable examples for this variant");

  std::ofstream log_out;
  if (!job.log_path.empty()) {
    log_out.open(job.log_path);
    if (!log_out) throw std::runtime_error("cannot write training log " + job.log_path);
  }
  auto sink = [&](const TrainLogEntry& e) {
    nlohmann::json j;
    j["step"] = e.step;
    j["loss"] = e.loss;
    j["classifier_loss"] = e.classifier_loss;
    j["seq_loss"] = e.seq_loss;
    if (log_out) log_out << j.dump() << "\n";
    if (!job.quiet) std::fprintf(stderr, "step %llu loss %.4f\n", static_cast<unsigned long long>(e.step), e.loss);
  };

  std::vector<Tensor> best_values;
  TrainResult res = train(*model, data, st, start_step, &skipped, sink, &best_values);

  save_checkpoint(job.out_path, *model, &st.acc, res.steps_done, res.skipped_steps);
  if (!best_values.empty()) {
    std::vector<Tensor> current;
    for (std::size_t i = 0; i < model->params.size(); ++i) current.push_back(model->params.at(i).value);
    for (std::size_t i = 0; i < model->params.size(); ++i) model->params.at(i).value = best_values[i];
    save_checkpoint(job.out_path + ".best", *model, nullptr, res.best_step, res.skipped_steps);
    for (std::size_t i = 0; i < model->params.size(); ++i) model->params.at(i).value = current[i];
  }
  return res;
}

}  // namespace shaped
