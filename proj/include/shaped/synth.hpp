// Deterministic synthetic multi-style corpus. All styles render the same
// underlying facts; a style controls only the surface realization (source
// tag, clause order, attribution phrase, headline template, verb forms).
// Out-of-domain blends borrow rules from in-domain styles and carry no
// style label.
#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "shaped/corpus.hpp"
#include "shaped/rng.hpp"

namespace shaped {

struct SynthStyleSpec {
  std::string name;
  std::optional<std::string> tag;
  std::vector<std::string> clause_order;           // permutation of main/loc/day/attrib
  std::vector<std::string> headline;               // literal tokens and {subj}/{verb}/{obj}/{loc}/{day}
  std::vector<std::string> attrib;
  std::map<std::string, std::string> verb_forms;   // grammar verb key -> surface form
  bool ood = false;
};

struct ContentGrammar {
  struct Entity {
    std::string source;    // used as "the <source>"
    std::string headline;  // bare headline form
  };
  struct Verb {
    std::string key;
    std::string past;  // source realization, shared by all styles
  };
  std::vector<Entity> subjects, objects;
  std::vector<std::string> locations;
  std::vector<std::string> days;
  std::vector<Verb> verbs;

  static const ContentGrammar& base() {
    static const ContentGrammar g = [] {
      ContentGrammar c;
      for (const char* s :
           {"ministry",  "council",    "senate",   "parliament", "commission", "bureau",    "agency",
            "board",     "committee",  "union",    "guild",      "institute",  "museum",    "library",
            "university","academy",    "hospital", "clinic",     "brewery",    "bakery",    "foundry",
            "shipyard",  "airline",    "railway",  "harbor",     "observatory","laboratory","consulate",
            "embassy",   "courthouse", "prefecture","cooperative","syndicate", "orchestra", "theater",
            "gallery",   "archive",    "foundation","charity",   "federation", "league",    "chamber",
            "exchange",  "mint",       "arsenal",  "garrison",   "militia",    "consortium"})
        c.subjects.push_back({s, s});
      for (const char* s :
           {"budget",    "treaty",    "merger",   "pipeline", "stadium",   "bridge",    "tunnel",
            "reservoir", "refinery",  "charter",  "statute",  "tariff",    "subsidy",   "census",
            "curfew",    "lottery",   "ferry",    "tramway",  "aqueduct",  "cathedral", "monument",
            "fortress",  "pavilion",  "granary",  "vineyard", "orchard",   "quarry",    "cannery",
            "dockyard",  "telescope", "reactor",  "turbine",  "canal",     "causeway",  "viaduct",
            "seawall",   "lighthouse","registry", "ledger",   "patent",    "permit",    "mandate",
            "embargo",   "amnesty",   "pension",  "toll",     "levee",     "depot"})
        c.objects.push_back({s, s});
      c.locations = {"arden",  "belmar",  "corville", "dunmore", "elkford", "farwell", "granton",
                     "halvern","istmere", "jorvik",   "kelsey",  "lunden",  "marrow",  "norfell",
                     "ostmoor","penrith", "quayle",   "rexford", "selwyn",  "tarnow"};
      c.days = {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"};
      c.verbs = {{"approve", "approved"}, {"reject", "rejected"},  {"acquire", "acquired"},
                 {"expand", "expanded"},  {"cancel", "canceled"},  {"inspect", "inspected"},
                 {"launch", "launched"},  {"restore", "restored"}, {"tax", "taxed"},
                 {"honor", "honored"}};
      return c;
    }();
    return g;
  }
};

struct Fact {
  std::size_t subj, verb, obj, loc, day;
  auto operator<=>(const Fact&) const = default;
};

inline std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  return w;
}

// Draws n distinct facts; the skew makes tail entities rare, so models
// trained on less data see less of the grammar.
inline std::vector<Fact> draw_facts(std::size_t n, std::uint64_t seed, double zipf_exponent = 0.7) {
  const auto& g = ContentGrammar::base();
  Rng rng(mix_seed(seed, 1));
  auto ws = zipf_weights(g.subjects.size(), zipf_exponent);
  auto wo = zipf_weights(g.objects.size(), zipf_exponent);
  auto wl = zipf_weights(g.locations.size(), zipf_exponent);
  std::vector<Fact> out;
  std::set<Fact> seen;
  std::size_t attempts = 0;
  const std::size_t cap = 200 * n + 1000;
  while (out.size() < n) {
    if (++attempts > cap) throw std::runtime_error("draw_facts: grammar too small for " + std::to_string(n) + " distinct facts");
    Fact f{rng.weighted(ws), rng.below(g.verbs.size()), rng.weighted(wo), rng.weighted(wl),
           rng.below(g.days.size())};
    if (seen.insert(f).second) out.push_back(f);
  }
  return out;
}

inline void append_tokens(std::vector<std::string>& out, const std::string& phrase) {
  std::istringstream is(phrase);
  std::string t;
  while (is >> t) out.push_back(t);
}

inline RawExample render_example(const SynthStyleSpec& spec, const Fact& f) {
  const auto& g = ContentGrammar::base();
  std::vector<std::string> src;
  if (spec.tag) src.push_back(*spec.tag);
  for (const auto& clause : spec.clause_order) {
    if (clause == "main") {
      src.push_back("the");
      append_tokens(src, g.subjects[f.subj].source);
      src.push_back(g.verbs[f.verb].past);
      src.push_back("the");
      append_tokens(src, g.objects[f.obj].source);
    } else if (clause == "loc") {
      src.push_back("in");
      src.push_back(g.locations[f.loc]);
    } else if (clause == "day") {
      src.push_back("on");
      src.push_back(g.days[f.day]);
    } else if (clause == "attrib") {
      for (const auto& t : spec.attrib) src.push_back(t);
    }
  }
  src.push_back(".");

  std::vector<std::string> tgt;
  for (const auto& tok : spec.headline) {
    if (tok == "{subj}") append_tokens(tgt, g.subjects[f.subj].headline);
    else if (tok == "{verb}") append_tokens(tgt, spec.verb_forms.at(g.verbs[f.verb].key));
    else if (tok == "{obj}") append_tokens(tgt, g.objects[f.obj].headline);
    else if (tok == "{loc}") tgt.push_back(g.locations[f.loc]);
    else if (tok == "{day}") tgt.push_back(g.days[f.day]);
    else tgt.push_back(tok);
  }

  auto join = [](const std::vector<std::string>& ts) {
    std::string s;
    for (std::size_t i = 0; i < ts.size(); ++i) s += (i ? " " : "") + ts[i];
    return s;
  };
  RawExample ex;
  ex.source = join(src);
  ex.target = join(tgt);
  if (!spec.ood) ex.style = spec.name;
  return ex;
}

inline std::vector<SynthStyleSpec> parse_style_specs(const std::string& text, const std::string& origin) {
  const auto& g = ContentGrammar::base();
  std::set<std::string> verb_keys;
  for (const auto& v : g.verbs) verb_keys.insert(v.key);
  const std::set<std::string> clause_names = {"main", "loc", "day", "attrib"};
  const std::set<std::string> slot_names = {"{subj}", "{verb}", "{obj}", "{loc}", "{day}"};

  std::vector<SynthStyleSpec> specs;
  std::optional<SynthStyleSpec> cur;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  auto err = [&](const std::string& msg) -> std::runtime_error {
    return std::runtime_error(origin + ":" + std::to_string(line_no) + ": " + msg);
  };
  auto finish = [&]() {
    if (!cur) return;
    if (cur->clause_order.empty()) throw err("style " + cur->name + " has no clauses line");
    if (cur->headline.empty()) throw err("style " + cur->name + " has no headline line");
    if (cur->attrib.empty()) throw err("style " + cur->name + " has no attrib line");
    for (const auto& k : verb_keys)
      if (!cur->verb_forms.count(k)) throw err("style " + cur->name + " missing verb form for " + k);
    specs.push_back(*cur);
    cur.reset();
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> words;
    std::string w;
    while (ls >> w) words.push_back(w);
    if (words.empty()) continue;
    const std::string& key = words[0];
    if (key == "style") {
      if (words.size() != 2) throw err("style line needs exactly one name");
      finish();
      cur = SynthStyleSpec{};
      cur->name = words[1];
      continue;
    }
    if (!cur) throw err("'" + key + "' outside a style block");
    if (key == "end") {
      finish();
    } else if (key == "tag") {
      if (words.size() != 2) throw err("tag line needs exactly one token");
      cur->tag = words[1];
    } else if (key == "clauses") {
      cur->clause_order.assign(words.begin() + 1, words.end());
      if (cur->clause_order.empty()) throw err("clauses line is empty");
      for (const auto& c : cur->clause_order)
        if (!clause_names.count(c)) throw err("unknown clause '" + c + "'");
    } else if (key == "headline") {
      cur->headline.assign(words.begin() + 1, words.end());
      if (cur->headline.empty()) throw err("headline line is empty");
      for (const auto& t : cur->headline)
        if (t.front() == '{' && !slot_names.count(t)) throw err("headline references missing slot " + t);
    } else if (key == "attrib") {
      cur->attrib.assign(words.begin() + 1, words.end());
      if (cur->attrib.empty()) throw err("attrib line is empty");
    } else if (key == "verb") {
      if (words.size() < 2) throw err("verb line needs key=form");
      std::string rest;
      for (std::size_t i = 1; i < words.size(); ++i) rest += (i > 1 ? " " : "") + words[i];
      std::size_t eq = rest.find('=');
      if (eq == std::string::npos) throw err("verb line needs key=form");
      std::string vk = rest.substr(0, eq);
      std::string form = rest.substr(eq + 1);
      if (!verb_keys.count(vk)) throw err("unknown verb key '" + vk + "'");
      if (form.empty()) throw err("empty form for verb " + vk);
      cur->verb_forms[vk] = form;
    } else if (key == "ood") {
      if (words.size() != 2 || (words[1] != "true" && words[1] != "false")) throw err("ood line needs true or false");
      cur->ood = words[1] == "true";
    } else {
      throw err("unknown directive '" + key + "'");
    }
  }
  ++line_no;
  finish();
  if (specs.empty()) throw std::runtime_error(origin + ": no style blocks found");
  std::set<std::string> names;
  for (const auto& s : specs)
    if (!names.insert(s.name).second) throw std::runtime_error(origin + ": duplicate style " + s.name);
  return specs;
}

struct SynthCorpus {
  std::vector<SynthStyleSpec> specs;
  std::vector<Fact> facts;
  std::vector<std::vector<RawExample>> examples;  // [spec][fact]
};

// Draws the fact list once and renders it through every style.
inline SynthCorpus synth_corpus(const std::vector<SynthStyleSpec>& specs, std::size_t n_per_style,
                                std::uint64_t seed, double zipf_exponent = 0.7) {
  if (n_per_style < 1) throw std::invalid_argument("synth_corpus: n_per_style must be at least 1");
  std::size_t in_domain = 0;
  for (const auto& s : specs) in_domain += s.ood ? 0 : 1;
  if (in_domain < 2) throw std::invalid_argument("synth_corpus: need at least 2 in-domain styles");
  SynthCorpus out;
  out.specs = specs;
  out.facts = draw_facts(n_per_style, seed, zipf_exponent);
  for (const auto& spec : specs) {
    std::vector<RawExample> xs;
    xs.reserve(out.facts.size());
    for (const auto& f : out.facts) xs.push_back(render_example(spec, f));
    out.examples.push_back(std::move(xs));
  }
  return out;
}

struct SplitIndices {
  std::vector<std::size_t> train, dev, test;
};

inline SplitIndices split_facts(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(mix_seed(seed, 2));
  rng.shuffle(idx);
  SplitIndices s;
  const std::size_t n_dev = n / 10, n_test = n / 10;
  const std::size_t n_train = n - n_dev - n_test;
  s.train.assign(idx.begin(), idx.begin() + n_train);
  s.dev.assign(idx.begin() + n_train, idx.begin() + n_train + n_dev);
  s.test.assign(idx.begin() + n_train + n_dev, idx.end());
  return s;
}

// Writes per-style split files plus combined in-domain train/dev/test
// files under out_dir. The combined training file is shuffled so batches
// mix styles.
inline void write_corpus_tree(const SynthCorpus& c, const SplitIndices& split, const std::string& out_dir,
                              std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto pick = [&](std::size_t spec_i, const std::vector<std::size_t>& idx) {
    std::vector<RawExample> xs;
    xs.reserve(idx.size());
    for (std::size_t f : idx) xs.push_back(c.examples[spec_i][f]);
    return xs;
  };
  std::vector<RawExample> train_all, dev_all, test_all;
  for (std::size_t i = 0; i < c.specs.size(); ++i) {
    const auto& name = c.specs[i].name;
    write_corpus(pick(i, split.train), out_dir + "/train_" + name + ".jsonl");
    write_corpus(pick(i, split.dev), out_dir + "/dev_" + name + ".jsonl");
    write_corpus(pick(i, split.test), out_dir + "/test_" + name + ".jsonl");
    if (!c.specs[i].ood) {
      for (std::size_t f : split.train) train_all.push_back(c.examples[i][f]);
      for (std::size_t f : split.dev) dev_all.push_back(c.examples[i][f]);
      for (std::size_t f : split.test) test_all.push_back(c.examples[i][f]);
    }
  }
  Rng rng(mix_seed(seed, 3));
  rng.shuffle(train_all);
  write_corpus(train_all, out_dir + "/train.jsonl");
  write_corpus(dev_all, out_dir + "/dev.jsonl");
  write_corpus(test_all, out_dir + "/test_indomain.jsonl");
}

// Default style definitions: four in-domain styles and two blends.
// "tribune" is deliberately close to "gazette" (same source rules and
// verb forms, slightly drifted headline); "sentinel" mixes rules from
// two styles and carries an unseen tag.
inline const char* default_style_spec_text() {
  return R"(# Four in-domain headline styles plus two out-of-domain blends.

style metro
tag metro
clauses main loc day attrib
headline {subj} {verb} {obj}
attrib officials said
verb approve=backs
verb reject=snubs
verb acquire=grabs
verb expand=grows
verb cancel=drops
verb inspect=probes
verb launch=opens
verb restore=revives
verb tax=taxes
verb honor=salutes
end

style gazette
tag gazette
clauses main loc attrib day
headline {subj} {verb} {obj} in {loc}
attrib the bureau confirmed
verb approve=approves
verb reject=rejects
verb acquire=acquires
verb expand=expands
verb cancel=cancels
verb inspect=inspects
verb launch=launches
verb restore=restores
verb tax=levies
verb honor=honors
end

style herald
tag herald
clauses loc main day attrib
headline in {loc} , {subj} {verb} {obj}
attrib sources told reporters
verb approve=endorses
verb reject=dismisses
verb acquire=secures
verb expand=broadens
verb cancel=scraps
verb inspect=reviews
verb launch=unveils
verb restore=rebuilds
verb tax=charges
verb honor=praises
end

style courier
tag courier
clauses main day loc attrib
headline {subj} to {verb} {obj} {day}
attrib local media reported
verb approve=ratify
verb reject=refuse
verb acquire=obtain
verb expand=enlarge
verb cancel=halt
verb inspect=examine
verb launch=start
verb restore=renew
verb tax=levy
verb honor=commend
end

style tribune
ood true
clauses main loc attrib day
headline {subj} {verb} {obj} in {loc} {day}
attrib the bureau confirmed
verb approve=approves
verb reject=rejects
verb acquire=acquires
verb expand=expands
verb cancel=cancels
verb inspect=inspects
verb launch=launches
verb restore=restores
verb tax=levies
verb honor=honors
end

style sentinel
ood true
tag sentinel
clauses loc main day attrib
headline {subj} {verb} {obj}
attrib sources told reporters
verb approve=endorses
verb reject=dismisses
verb acquire=secures
verb expand=broadens
verb cancel=scraps
verb inspect=reviews
verb launch=unveils
verb restore=rebuilds
verb tax=charges
verb honor=praises
end
)";
}

}  // namespace shaped
