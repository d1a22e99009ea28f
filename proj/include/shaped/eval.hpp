// Experiment harness: trains/loads the P, S and SHAPED models over several
// seeds, decodes every variant on the test splits, and assembles ROUGE
// scores, the classifier confusion matrix and mean style posteriors into
// one report (human table + line-delimited records).
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "shaped/checkpoint.hpp"
#include "shaped/corpus.hpp"
#include "shaped/model.hpp"
#include "shaped/rouge.hpp"
#include "shaped/trainer.hpp"

namespace shaped {

struct SplitFiles {
  std::string train;                                             // combined in-domain training file
  std::string combined_test;                                     // combined in-domain test file
  std::vector<std::pair<std::string, std::string>> style_tests;  // in-domain (style, path)
  std::vector<std::pair<std::string, std::string>> ood_tests;    // out-of-domain (style, path)
};

struct ExperimentConfig {
  Config base;                        // dims and optimizer settings; variant is set per model
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string work_dir = "exp_work";
  std::size_t bootstrap_resamples = 1000;
  bool train_missing = true;
  bool include_uniform = true;        // the ensemble ablation
  bool quiet = true;
};

struct VariantSplitScore {
  std::string variant;
  std::string split;
  RougeTriple score;                  // per-seed-median f1 (p/r from the median-RL seed)
  double half_width_r1 = 0, half_width_r2 = 0, half_width_rl = 0;
  std::vector<double> per_seed_rl;    // corpus-mean ROUGE-L f1 per seed
};

struct ExperimentReport {
  std::vector<std::string> styles;                   // in-domain style names (model order)
  std::vector<VariantSplitScore> scores;
  std::vector<double> per_seed_accuracy;
  double accuracy_median = 0.0;
  std::vector<std::vector<double>> confusion;        // [true][pred] from the representative seed
  std::map<std::string, std::vector<double>> mean_posterior;  // split style -> mean posterior (repr. seed)
  std::uint64_t representative_seed = 0;

  const VariantSplitScore* find(const std::string& variant, const std::string& split) const {
    for (const auto& s : scores)
      if (s.variant == variant && s.split == split) return &s;
    return nullptr;
  }
};

// Mean classifier posterior over a split.
inline StylePosterior posterior_report(const Model& shaped_model, const std::vector<RawExample>& split) {
  StylePosterior acc(shaped_model.styles.size(), 0.0);
  if (split.empty()) return acc;
  for (const auto& ex : split) {
    Graph g;
    StyledExample enc = encode_example(ex.source, ex.target, shaped_model.vocab, shaped_model.cfg.max_src,
                                       shaped_model.cfg.max_tgt);
    EncodedInput e = shaped_model.encode_all(g, enc.source, -1);
    StylePosterior p = shaped_model.classify_values(g, e);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p[i];
  }
  for (double& x : acc) x /= static_cast<double>(split.size());
  return acc;
}

namespace eval_detail {

struct SeedModels {
  std::unique_ptr<Model> s_model;
  std::unique_ptr<Model> shaped_model;
  std::map<std::string, std::unique_ptr<Model>> p_models;
};

inline std::string ckpt_path(const std::string& dir, const std::string& tag, std::uint64_t seed) {
  return dir + "/" + tag + "_seed" + std::to_string(seed) + ".ckpt";
}

inline std::unique_ptr<Model> load_or_train(const ExperimentConfig& ec, const Config& cfg,
                                            const std::vector<RawExample>& corpus, const std::string& tag,
                                            std::uint64_t seed) {
  const std::string path = ckpt_path(ec.work_dir, tag, seed);
  if (!std::filesystem::exists(path)) {
    if (!ec.train_missing) throw std::runtime_error("missing checkpoint " + path);
    TrainJob job;
    job.cfg = cfg;
    job.cfg.seed = seed;
    job.corpus = corpus;
    job.out_path = path;
    job.log_path = path + ".log.jsonl";
    job.quiet = ec.quiet;
    run_training(job);
  }
  Checkpoint ck = load_checkpoint(path);
  return std::make_unique<Model>(ck.build_model());
}

inline std::vector<std::string> decode_tokens(const Model& m, const RawExample& ex, DecodeMode mode, int style) {
  StyledExample enc = encode_example(ex.source, ex.target, m.vocab, m.cfg.max_src, m.cfg.max_tgt);
  GenerateOptions opt;
  opt.mode = mode;
  opt.style = style;
  opt.max_len = m.cfg.max_len;
  return tokenize(m.vocab.decode(generate(m, enc.source, opt)));
}

struct SplitScores {
  std::vector<double> f1_r1, f1_r2, f1_rl, p_r1, p_r2, p_rl, r_r1, r_r2, r_rl;

  void add(const RougeTriple& t) {
    f1_r1.push_back(t.r1.f1);
    f1_r2.push_back(t.r2.f1);
    f1_rl.push_back(t.rl.f1);
    p_r1.push_back(t.r1.precision);
    p_r2.push_back(t.r2.precision);
    p_rl.push_back(t.rl.precision);
    r_r1.push_back(t.r1.recall);
    r_r2.push_back(t.r2.recall);
    r_rl.push_back(t.rl.recall);
  }

  RougeTriple means() const {
    RougeTriple t;
    t.r1 = {mean(p_r1), mean(r_r1), mean(f1_r1)};
    t.r2 = {mean(p_r2), mean(r_r2), mean(f1_r2)};
    t.rl = {mean(p_rl), mean(r_rl), mean(f1_rl)};
    return t;
  }
};

}  // namespace eval_detail

inline ExperimentReport run_experiment(const SplitFiles& splits, const ExperimentConfig& ec) {
  namespace ed = eval_detail;
  std::filesystem::create_directories(ec.work_dir);
  const std::vector<RawExample> train_corpus = read_corpus(splits.train);

  std::vector<std::string> style_names;
  {
    std::set<std::string> labels;
    for (const auto& ex : train_corpus)
      if (ex.style) labels.insert(*ex.style);
    if (labels.size() < 2) throw std::runtime_error("run_experiment: training corpus must carry style labels");
    style_names.assign(labels.begin(), labels.end());
  }

  struct NamedSplit {
    std::string name;
    bool in_domain;
    std::vector<RawExample> examples;
  };
  std::vector<NamedSplit> eval_splits;
  eval_splits.push_back({"combined", true, read_corpus(splits.combined_test)});
  for (const auto& [name, path] : splits.style_tests) eval_splits.push_back({name, true, read_corpus(path)});
  for (const auto& [name, path] : splits.ood_tests) eval_splits.push_back({name, false, read_corpus(path)});

  struct VariantDef {
    std::string name;
    bool in_domain_only;
  };
  std::vector<VariantDef> variants = {{"P", true}, {"S", false}, {"SP", true}, {"M-SP", false}};
  if (ec.include_uniform) variants.push_back({"UNI", true});

  // scores[variant][split][seed] -> per-example score lists
  std::map<std::string, std::map<std::string, std::vector<ed::SplitScores>>> collected;
  std::vector<double> accuracies;
  std::vector<std::vector<std::vector<double>>> confusions;
  std::vector<std::map<std::string, StylePosterior>> posteriors;

  for (std::uint64_t seed : ec.seeds) {
    ed::SeedModels models;
    Config cfg = ec.base;
    cfg.variant = Variant::shared;
    cfg.style.clear();
    models.s_model = ed::load_or_train(ec, cfg, train_corpus, "s", seed);
    cfg.variant = Variant::shaped;
    models.shaped_model = ed::load_or_train(ec, cfg, train_corpus, "shaped", seed);
    for (const auto& name : style_names) {
      cfg.variant = Variant::private_style;
      cfg.style = name;
      models.p_models[name] = ed::load_or_train(ec, cfg, train_corpus, "p_" + name, seed);
    }

    const StyleSet& sset = models.shaped_model->styles;

    for (const auto& split : eval_splits) {
      for (const auto& vd : variants) {
        if (!split.in_domain && vd.in_domain_only) continue;
        ed::SplitScores scores;
        for (const auto& ex : split.examples) {
          std::vector<std::string> cand;
          const std::vector<std::string> ref = tokenize(ex.target);
          if (vd.name == "P") {
            if (!ex.style) continue;  // P needs the true label
            const Model& pm = *models.p_models.at(*ex.style);
            cand = ed::decode_tokens(pm, ex, DecodeMode::private_only, pm.styles.require(*ex.style));
          } else if (vd.name == "S") {
            cand = ed::decode_tokens(*models.s_model, ex, DecodeMode::shared_only, -1);
          } else if (vd.name == "SP") {
            if (!ex.style) continue;
            cand = ed::decode_tokens(*models.shaped_model, ex, DecodeMode::shaped_style, sset.require(*ex.style));
          } else if (vd.name == "M-SP") {
            cand = ed::decode_tokens(*models.shaped_model, ex, DecodeMode::mixture, -1);
          } else {
            cand = ed::decode_tokens(*models.shaped_model, ex, DecodeMode::uniform_mixture, -1);
          }
          scores.add(rouge_all(cand, ref));
        }
        collected[vd.name][split.name].push_back(std::move(scores));
      }
    }

    // Classifier behavior for this seed.
    const Model& sm = *models.shaped_model;
    std::vector<std::vector<double>> confusion(sset.size(), std::vector<double>(sset.size(), 0.0));
    double correct = 0, total = 0;
    std::map<std::string, StylePosterior> mean_post;
    std::map<std::string, std::size_t> post_counts;
    for (const auto& split : eval_splits) {
      if (split.name == "combined") continue;
      StylePosterior acc(sset.size(), 0.0);
      for (const auto& ex : split.examples) {
        Graph g;
        StyledExample enc = encode_example(ex.source, ex.target, sm.vocab, sm.cfg.max_src, sm.cfg.max_tgt);
        EncodedInput e = sm.encode_all(g, enc.source, -1);
        StylePosterior p = sm.classify_values(g, e);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p[i];
        if (split.in_domain && ex.style) {
          const int t = sset.require(*ex.style);
          std::size_t pred = 0;
          for (std::size_t i = 1; i < p.size(); ++i)
            if (p[i] > p[pred]) pred = i;
          confusion[t][pred] += 1.0;
          total += 1.0;
          if (static_cast<int>(pred) == t) correct += 1.0;
        }
      }
      if (!split.examples.empty()) {
        for (double& x : acc) x /= static_cast<double>(split.examples.size());
        mean_post[split.name] = acc;
      }
    }
    accuracies.push_back(total > 0 ? correct / total : 0.0);
    confusions.push_back(std::move(confusion));
    posteriors.push_back(std::move(mean_post));
  }

  // Assemble: medians across seeds; half-widths from the median-RL seed.
  ExperimentReport rep;
  rep.styles = style_names;
  for (const auto& [variant, by_split] : collected) {
    for (const auto& [split, per_seed] : by_split) {
      VariantSplitScore v;
      v.variant = variant;
      v.split = split;
      for (const auto& s : per_seed) v.per_seed_rl.push_back(mean(s.f1_rl));
      std::vector<std::size_t> order(per_seed.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return v.per_seed_rl[a] != v.per_seed_rl[b] ? v.per_seed_rl[a] < v.per_seed_rl[b] : a < b;
      });
      const std::size_t med = order[order.size() / 2];
      v.score = per_seed[med].means();
      std::vector<double> f1s_r1, f1s_r2, f1s_rl;
      for (const auto& s : per_seed) {
        f1s_r1.push_back(mean(s.f1_r1));
        f1s_r2.push_back(mean(s.f1_r2));
        f1s_rl.push_back(mean(s.f1_rl));
      }
      v.score.r1.f1 = median(f1s_r1);
      v.score.r2.f1 = median(f1s_r2);
      v.score.rl.f1 = median(f1s_rl);
      v.half_width_r1 = bootstrap_half_width(per_seed[med].f1_r1, ec.bootstrap_resamples, mix_seed(ec.base.seed, 11));
      v.half_width_r2 = bootstrap_half_width(per_seed[med].f1_r2, ec.bootstrap_resamples, mix_seed(ec.base.seed, 12));
      v.half_width_rl = bootstrap_half_width(per_seed[med].f1_rl, ec.bootstrap_resamples, mix_seed(ec.base.seed, 13));
      rep.scores.push_back(std::move(v));
    }
  }

  rep.per_seed_accuracy = accuracies;
  rep.accuracy_median = median(accuracies);
  std::vector<std::size_t> order(accuracies.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return accuracies[a] != accuracies[b] ? accuracies[a] < accuracies[b] : a < b;
  });
  const std::size_t rep_seed_i = order[order.size() / 2];
  rep.representative_seed = ec.seeds[rep_seed_i];
  rep.confusion = confusions[rep_seed_i];
  rep.mean_posterior = posteriors[rep_seed_i];
  return rep;
}

inline std::string report_to_table(const ExperimentReport& rep) {
  std::string out;
  char buf[256];
  out += "ROUGE F1 (x100), medians over seeds; +/- is the bootstrap half-width on the median seed\n";
  std::snprintf(buf, sizeof buf, "%-10s %-12s %12s %12s %12s\n", "variant", "split", "Rouge-1", "Rouge-2", "Rouge-L");
  out += buf;
  for (const auto& s : rep.scores) {
    std::snprintf(buf, sizeof buf, "%-10s %-12s %6.2f+/-%4.2f %6.2f+/-%4.2f %6.2f+/-%4.2f\n", s.variant.c_str(),
                  s.split.c_str(), 100 * s.score.r1.f1, 100 * s.half_width_r1, 100 * s.score.r2.f1,
                  100 * s.half_width_r2, 100 * s.score.rl.f1, 100 * s.half_width_rl);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "\nclassifier accuracy (median over seeds): %.4f\n", rep.accuracy_median);
  out += buf;
  out += "confusion matrix (rows = true style, representative seed " + std::to_string(rep.representative_seed) + "):\n";
  std::snprintf(buf, sizeof buf, "%-10s", "");
  out += buf;
  for (const auto& s : rep.styles) {
    std::snprintf(buf, sizeof buf, "%10s", s.c_str());
    out += buf;
  }
  out += "\n";
  for (std::size_t i = 0; i < rep.confusion.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-10s", rep.styles[i].c_str());
    out += buf;
    for (double x : rep.confusion[i]) {
      std::snprintf(buf, sizeof buf, "%10.0f", x);
      out += buf;
    }
    out += "\n";
  }
  out += "\nmean style posterior per test split:\n";
  for (const auto& [split, post] : rep.mean_posterior) {
    std::snprintf(buf, sizeof buf, "%-10s", split.c_str());
    out += buf;
    for (double x : post) {
      std::snprintf(buf, sizeof buf, "%10.3f", x);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

inline std::string report_to_jsonl(const ExperimentReport& rep) {
  std::string out;
  for (const auto& s : rep.scores) {
    nlohmann::json j;
    j["type"] = "rouge";
    j["variant"] = s.variant;
    j["split"] = s.split;
    j["r1"] = {{"precision", s.score.r1.precision}, {"recall", s.score.r1.recall}, {"f1", s.score.r1.f1}, {"half_width", s.half_width_r1}};
    j["r2"] = {{"precision", s.score.r2.precision}, {"recall", s.score.r2.recall}, {"f1", s.score.r2.f1}, {"half_width", s.half_width_r2}};
    j["rl"] = {{"precision", s.score.rl.precision}, {"recall", s.score.rl.recall}, {"f1", s.score.rl.f1}, {"half_width", s.half_width_rl}};
    j["per_seed_rl"] = s.per_seed_rl;
    out += j.dump() + "\n";
  }
  {
    nlohmann::json j;
    j["type"] = "classifier_accuracy";
    j["median"] = rep.accuracy_median;
    j["per_seed"] = rep.per_seed_accuracy;
    out += j.dump() + "\n";
  }
  {
    nlohmann::json j;
    j["type"] = "confusion";
    j["styles"] = rep.styles;
    j["rows"] = rep.confusion;
    j["representative_seed"] = rep.representative_seed;
    out += j.dump() + "\n";
  }
  for (const auto& [split, post] : rep.mean_posterior) {
    nlohmann::json j;
    j["type"] = "mean_posterior";
    j["split"] = split;
    j["styles"] = rep.styles;
    j["values"] = post;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace shaped
