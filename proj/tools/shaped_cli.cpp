// shaped: corpus synthesis, training, decoding, evaluation and gradient
// verification for the shared-private style-adaptation models.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shaped/checkpoint.hpp"
#include "shaped/config.hpp"
#include "shaped/corpus.hpp"
#include "shaped/eval.hpp"
#include "shaped/gradcheck.hpp"
#include "shaped/model.hpp"
#include "shaped/synth.hpp"
#include "shaped/trainer.hpp"

namespace fs = std::filesystem;
using namespace shaped;

namespace {

Config load_config(const std::string& config_path, const std::vector<std::string>& overrides,
                   const KvMap& defaults = {}) {
  KvMap kv = defaults;
  if (!config_path.empty()) {
    KvMap file_kv = parse_kv_file(config_path);
    for (auto& [k, v] : file_kv) kv[k] = v;
  }
  for (const auto& o : overrides) apply_override(kv, o);
  return config_from_kv(kv);
}

struct ParsedMode {
  DecodeMode mode;
  std::string style;
};

ParsedMode parse_mode(const std::string& s) {
  if (s == "mixture") return {DecodeMode::mixture, ""};
  if (s == "uniform") return {DecodeMode::uniform_mixture, ""};
  if (s == "shared") return {DecodeMode::shared_only, ""};
  if (s.rfind("shaped:", 0) == 0) return {DecodeMode::shaped_style, s.substr(7)};
  if (s.rfind("private:", 0) == 0) return {DecodeMode::private_only, s.substr(8)};
  throw std::runtime_error("unknown mode '" + s + "' (shaped:<style>|mixture|uniform|shared|private:<style>)");
}

int cmd_synth(const std::string& spec_path, std::size_t n, std::uint64_t seed, double zipf,
              const std::string& out_dir) {
  std::string text;
  std::string origin;
  if (spec_path.empty()) {
    text = default_style_spec_text();
    origin = "<builtin spec>";
  } else {
    std::ifstream in(spec_path);
    if (!in) throw std::runtime_error("cannot open spec file " + spec_path);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    origin = spec_path;
  }
  auto specs = parse_style_specs(text, origin);
  SynthCorpus corpus = synth_corpus(specs, n, seed, zipf);
  SplitIndices split = split_facts(corpus.facts.size(), seed);
  write_corpus_tree(corpus, split, out_dir, seed);
  std::size_t in_domain = 0;
  for (const auto& s : specs) in_domain += s.ood ? 0 : 1;
  std::cout << "wrote " << specs.size() << " styles (" << in_domain << " in-domain) x " << n
            << " examples to " << out_dir << "\n";
  return 0;
}

int cmd_train(const Config& cfg, const std::string& corpus_path, const std::string& out_path,
              const std::string& resume, const std::string& log_path, bool quiet) {
  TrainJob job;
  job.cfg = cfg;
  job.corpus = read_corpus(corpus_path);
  job.out_path = out_path;
  job.log_path = log_path;
  job.resume_path = resume;
  job.quiet = quiet;
  TrainResult res = run_training(job);
  std::cout << "trained " << res.steps_done << " steps (skipped " << res.skipped_steps
            << "), final loss/example " << res.final_loss << ", best " << res.best_loss << " at step "
            << res.best_step << "\n";
  std::cout << "checkpoint: " << out_path << " (best: " << out_path << ".best)\n";
  return 0;
}

int cmd_generate(const std::string& ckpt_path, const std::string& in_path, const std::string& out_path,
                 const std::string& mode_str, std::size_t max_len, bool sample, std::uint64_t seed) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  Model model = ck.build_model();
  ParsedMode pm = parse_mode(mode_str);

  GenerateOptions opt;
  opt.mode = pm.mode;
  opt.max_len = max_len > 0 ? max_len : model.cfg.max_len;
  opt.sample = sample;
  opt.seed = seed;
  if (pm.mode == DecodeMode::shaped_style) opt.style = model.styles.require(pm.style);
  if (pm.mode == DecodeMode::private_only) {
    if (model.cfg.variant != Variant::private_style || model.cfg.style != pm.style)
      throw std::runtime_error("checkpoint is not a private model for style '" + pm.style + "'");
    opt.style = model.styles.require(pm.style);
  }

  std::ifstream fin;
  std::istream* in = &std::cin;
  if (in_path != "-") {
    fin.open(in_path);
    if (!fin) throw std::runtime_error("cannot open input " + in_path);
    in = &fin;
  }
  std::ofstream fout;
  std::ostream* out = &std::cout;
  if (out_path != "-") {
    fout.open(out_path);
    if (!fout) throw std::runtime_error("cannot write output " + out_path);
    out = &fout;
  }

  std::string line;
  std::uint64_t line_i = 0;
  while (std::getline(*in, line)) {
    StyledExample ex = encode_example(line, "", model.vocab, model.cfg.max_src, model.cfg.max_tgt);
    GenerateOptions o = opt;
    o.seed = mix_seed(seed, line_i++);
    *out << model.vocab.decode(generate(model, ex.source, o)) << "\n";
  }
  return 0;
}

int cmd_classify(const std::string& ckpt_path, const std::string& in_path, const std::string& out_path,
                 bool text_mode) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  Model model = ck.build_model();
  if (model.cfg.variant != Variant::shaped) throw std::runtime_error("classify needs a shaped checkpoint");

  std::vector<RawExample> examples;
  if (text_mode) {
    std::ifstream in(in_path);
    if (!in) throw std::runtime_error("cannot open input " + in_path);
    std::string line;
    while (std::getline(in, line))
      if (!tokenize(line).empty()) examples.push_back({line, "", std::nullopt});
  } else {
    examples = read_corpus(in_path);
  }

  std::ofstream fout;
  std::ostream* out = &std::cout;
  if (out_path != "-") {
    fout.open(out_path);
    if (!fout) throw std::runtime_error("cannot write output " + out_path);
    out = &fout;
  }

  double correct = 0, labeled = 0;
  for (const auto& ex : examples) {
    Graph g;
    StyledExample enc = encode_example(ex.source, ex.target.empty() ? "x" : ex.target, model.vocab,
                                       model.cfg.max_src, model.cfg.max_tgt);
    EncodedInput e = model.encode_all(g, enc.source, -1);
    StylePosterior p = model.classify_values(g, e);
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
      if (p[i] > p[best]) best = i;
    nlohmann::json j;
    j["posterior"] = nlohmann::json::object();
    for (std::size_t i = 0; i < p.size(); ++i) j["posterior"][model.styles.names[i]] = p[i];
    j["argmax"] = model.styles.names[best];
    if (ex.style) {
      j["style"] = *ex.style;
      labeled += 1;
      if (*ex.style == model.styles.names[best]) correct += 1;
    }
    *out << j.dump() << "\n";
  }
  if (labeled > 0) std::cerr << "accuracy on labeled inputs: " << correct / labeled << "\n";
  return 0;
}

int cmd_evaluate(const std::string& corpus_dir, const std::string& work_dir, const std::string& out_base,
                 const Config& base, const std::vector<std::uint64_t>& seeds, bool train_missing,
                 bool no_uniform, bool quiet) {
  SplitFiles splits;
  splits.train = corpus_dir + "/train.jsonl";
  splits.combined_test = corpus_dir + "/test_indomain.jsonl";
  if (!fs::exists(splits.train)) throw std::runtime_error("missing " + splits.train);
  if (!fs::exists(splits.combined_test)) throw std::runtime_error("missing " + splits.combined_test);

  std::set<std::string> labels;
  for (const auto& ex : read_corpus(splits.train))
    if (ex.style) labels.insert(*ex.style);

  std::vector<std::string> test_files;
  for (const auto& e : fs::directory_iterator(corpus_dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("test_", 0) == 0 && name != "test_indomain.jsonl" && name.size() > 11)
      test_files.push_back(name);
  }
  std::sort(test_files.begin(), test_files.end());
  for (const auto& name : test_files) {
    const std::string style = name.substr(5, name.size() - 5 - 6);  // strip test_ and .jsonl
    const std::string path = corpus_dir + "/" + name;
    if (labels.count(style))
      splits.style_tests.emplace_back(style, path);
    else
      splits.ood_tests.emplace_back(style, path);
  }

  ExperimentConfig ec;
  ec.base = base;
  ec.seeds = seeds;
  ec.work_dir = work_dir;
  ec.train_missing = train_missing;
  ec.include_uniform = !no_uniform;
  ec.quiet = quiet;

  ExperimentReport rep = run_experiment(splits, ec);
  const std::string table = report_to_table(rep);
  std::cout << table;
  if (!out_base.empty()) {
    std::ofstream t(out_base + ".txt");
    t << table;
    std::ofstream j(out_base + ".jsonl");
    j << report_to_jsonl(rep);
    if (!t || !j) throw std::runtime_error("cannot write report to " + out_base + ".{txt,jsonl}");
    std::cout << "report written to " << out_base << ".txt and " << out_base << ".jsonl\n";
  }
  return 0;
}

int cmd_gradcheck(const Config& cfg, std::uint64_t seed, double eps, double tol, std::size_t sample_cap,
                  bool corrupt) {
  std::vector<std::string> style_names;
  for (std::size_t i = 0; i < 2; ++i) style_names.push_back("style" + std::to_string(i));
  std::vector<std::string> tokens;
  for (std::size_t i = 4; i < cfg.vocab_cap; ++i) tokens.push_back("t" + std::to_string(i));
  Model model(cfg, StyleSet(style_names), Vocabulary::from_tokens(tokens));
  model.init_params(seed);

  Rng rng(mix_seed(seed, 99));
  std::vector<StyledExample> batch;
  for (std::size_t b = 0; b < cfg.batch; ++b) {
    StyledExample ex;
    for (int j = 0; j < 5; ++j) ex.source.push_back(static_cast<int>(4 + rng.below(model.vocab.size() - 4)));
    for (int j = 0; j < 3; ++j) ex.target.push_back(static_cast<int>(4 + rng.below(model.vocab.size() - 4)));
    ex.target.push_back(kEos);
    ex.style = static_cast<int>(b % model.styles.size());
    batch.push_back(std::move(ex));
  }

  std::vector<Param*> params;
  for (auto& p : model.params) params.push_back(p.get());

  auto builder = [&](Graph& g) {
    return model.joint_loss(g, std::span<const StyledExample>(batch.data(), batch.size())).total;
  };
  auto corruptor = [&]() {
    if (corrupt)
      for (double& g : params.front()->grad) g += 1.0;
  };
  GradCheckResult res = grad_check(builder, std::span<Param* const>(params.data(), params.size()), eps,
                                   sample_cap, seed, corruptor);
  std::cout << "checked " << res.checked << " coordinates, max relative error " << res.max_rel_err
            << " at " << res.worst_param << "[" << res.worst_coord << "]\n";
  std::cout << "max per-group norm error " << res.max_group_rel_err << " at " << res.worst_group << "\n";
  if (res.max_rel_err < tol) {
    std::cout << "gradcheck PASS (tol " << tol << ")\n";
    return 0;
  }
  std::cout << "gradcheck FAIL (tol " << tol << ")\n";
  return 1;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> seeds;
  std::string cur;
  for (char ch : s + ",") {
    if (ch == ',') {
      if (!cur.empty()) seeds.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (seeds.empty()) throw std::runtime_error("no seeds in '" + s + "'");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shared-private style-adaptive headline generation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic multi-style corpus");
  std::string synth_spec, synth_out = "corpus";
  std::size_t synth_n = 2500;
  std::uint64_t synth_seed = 1;
  double synth_zipf = 0.7;
  synth->add_option("--spec", synth_spec, "style spec file (omit for the builtin styles)");
  synth->add_option("--n", synth_n, "facts per style");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--zipf", synth_zipf, "content skew exponent");
  synth->add_option("--out", synth_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train one model variant");
  std::string train_config, train_corpus, train_out = "model.ckpt", train_resume, train_log;
  std::string train_variant, train_style, train_seed;
  std::vector<std::string> train_sets;
  bool train_verbose = false;
  train->add_option("--config", train_config, "key=value config file");
  train->add_option("--set", train_sets, "config override key=value (repeatable)");
  train->add_option("--variant", train_variant, "shared|private|shaped (same as --set variant=...)");
  train->add_option("--style", train_style, "owned style for the private variant");
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--corpus", train_corpus, "training corpus (jsonl)")->required();
  train->add_option("--out", train_out, "checkpoint output path");
  train->add_option("--resume", train_resume, "checkpoint to continue from");
  train->add_option("--log", train_log, "training log path (jsonl)");
  train->add_flag("--verbose", train_verbose, "echo progress to stderr");

  // generate
  auto* gen = app.add_subcommand("generate", "decode one headline per input line");
  std::string gen_ckpt, gen_in = "-", gen_out = "-", gen_mode = "mixture";
  std::size_t gen_maxlen = 0;
  bool gen_sample = false;
  std::uint64_t gen_seed = 1;
  gen->add_option("--checkpoint", gen_ckpt, "model checkpoint")->required();
  gen->add_option("--in", gen_in, "input file of raw source lines ('-' for stdin)");
  gen->add_option("--out", gen_out, "output file ('-' for stdout)");
  gen->add_option("--mode", gen_mode, "shaped:<style>|mixture|uniform|shared|private:<style>");
  gen->add_option("--max-len", gen_maxlen, "decode length cap (default: model config)");
  gen->add_flag("--sample", gen_sample, "sample instead of greedy decoding");
  gen->add_option("--seed", gen_seed, "sampling seed");

  // classify
  auto* cls = app.add_subcommand("classify", "style posteriors for each input");
  std::string cls_ckpt, cls_in, cls_out = "-";
  bool cls_text = false;
  cls->add_option("--checkpoint", cls_ckpt, "shaped checkpoint")->required();
  cls->add_option("--in", cls_in, "corpus jsonl (or raw text with --text)")->required();
  cls->add_option("--out", cls_out, "output file ('-' for stdout)");
  cls->add_flag("--text", cls_text, "treat input as raw source lines");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run the P/S/SP/M-SP comparison");
  std::string ev_corpus, ev_work = "exp_work", ev_out, ev_config;
  std::vector<std::string> ev_sets;
  std::string ev_seeds = "1,2,3";
  bool ev_train = false, ev_no_uniform = false, ev_verbose = false;
  ev->add_option("--corpus-dir", ev_corpus, "directory produced by synth")->required();
  ev->add_option("--work-dir", ev_work, "checkpoint/cache directory");
  ev->add_option("--out", ev_out, "report base path (writes .txt and .jsonl)");
  ev->add_option("--config", ev_config, "key=value config file");
  ev->add_option("--set", ev_sets, "config override key=value (repeatable)");
  ev->add_option("--seeds", ev_seeds, "comma-separated training seeds");
  ev->add_flag("--train-missing", ev_train, "train any missing checkpoint");
  ev->add_flag("--no-uniform", ev_no_uniform, "skip the uniform-mixture ablation");
  ev->add_flag("--verbose", ev_verbose, "echo training progress");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the full joint loss");
  std::string gc_config;
  std::vector<std::string> gc_sets;
  std::uint64_t gc_seed = 1;
  double gc_eps = 1e-5, gc_tol = 1e-4;
  std::size_t gc_cap = 0;
  bool gc_corrupt = false;
  gc->add_option("--config", gc_config, "key=value config file");
  gc->add_option("--set", gc_sets, "config override key=value (repeatable)");
  gc->add_option("--seed", gc_seed, "model/data seed");
  gc->add_option("--eps", gc_eps, "finite-difference epsilon");
  gc->add_option("--tol", gc_tol, "max relative error to pass");
  gc->add_option("--sample-cap", gc_cap, "coordinates per tensor (0 = all)");
  gc->add_flag("--corrupt-grad", gc_corrupt, "test hook: corrupt one analytic gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(synth_spec, synth_n, synth_seed, synth_zipf, synth_out);
    if (*train) {
      std::vector<std::string> sets = train_sets;
      if (!train_variant.empty()) sets.push_back("variant=" + train_variant);
      if (!train_style.empty()) sets.push_back("style=" + train_style);
      if (!train_seed.empty()) sets.push_back("seed=" + train_seed);
      Config cfg = load_config(train_config, sets);
      return cmd_train(cfg, train_corpus, train_out, train_resume, train_log, !train_verbose);
    }
    if (*gen) return cmd_generate(gen_ckpt, gen_in, gen_out, gen_mode, gen_maxlen, gen_sample, gen_seed);
    if (*cls) return cmd_classify(cls_ckpt, cls_in, cls_out, cls_text);
    if (*ev) {
      Config cfg = load_config(ev_config, ev_sets);
      return cmd_evaluate(ev_corpus, ev_work, ev_out, cfg, parse_seeds(ev_seeds), ev_train, ev_no_uniform,
                          !ev_verbose);
    }
    if (*gc) {
      // full backprop so differences see the undetached objective; large init
      // so true gradients dominate difference-quotient rounding noise
      KvMap defaults = {{"embed_dim", "8"},  {"hidden_dim", "12"}, {"attn_dim", "8"},
                        {"vocab_cap", "20"}, {"batch", "2"},       {"variant", "shaped"},
                        {"classifier_backprop", "full"}, {"init_scale", "0.8"}};
      Config cfg = load_config(gc_config, gc_sets, defaults);
      return cmd_gradcheck(cfg, gc_seed, gc_eps, gc_tol, gc_cap, gc_corrupt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
