#include "finmwe/features.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "finmwe/textprep.hpp"

namespace finmwe::feat {

namespace {

constexpr const char* kUp = "↑";    // ↑
constexpr const char* kDown = "↓";  // ↓

bool is_verb_pos(std::string_view pos) {
  return pos.size() >= 2 && pos[0] == 'V' && pos[1] == 'B';
}
bool is_verbal(std::string_view pos) { return is_verb_pos(pos) || pos == "MD"; }

const std::set<std::string> kAuxForms = {"be",  "is",  "am",    "are",
                                         "was", "were", "been",  "being",
                                         "get", "gets", "got",   "getting"};

}  // namespace

OrthoFlags orthographic_flags(std::string_view token) {
  OrthoFlags f;
  if (token.empty()) return f;
  bool has_alpha = false, has_digit = false, all_upper = true, all_punct = true;
  for (unsigned char c : token) {
    if (std::isalpha(c)) {
      has_alpha = true;
      all_punct = false;
      if (!std::isupper(c)) all_upper = false;
    } else if (std::isdigit(c)) {
      has_digit = true;
      all_punct = false;
      all_upper = false;
    } else if (std::isspace(c)) {
      all_punct = false;
      all_upper = false;
    } else {
      all_upper = false;
    }
  }
  f.initcap = std::isupper(static_cast<unsigned char>(token[0])) != 0;
  f.allcaps = has_alpha && all_upper;
  f.alnum_mix = has_alpha && has_digit;
  f.punct = all_punct;
  return f;
}

HeadInfo head_word(const ConstituencyTree& tree, int node,
                   const HeadRules& rules) {
  HeadInfo info;
  info.token = rules.head_token(tree, node);
  info.word = textprep::lowercase(tree.word(info.token));
  info.pos = tree.pos(info.token);
  if (tree.node(node).category == "PP") {
    for (int child : tree.node(node).children) {
      if (tree.node(child).category == "NP") {
        int t = rules.head_token(tree, child);
        info.pp_content = textprep::lowercase(tree.word(t));
        break;
      }
    }
  }
  return info;
}

namespace {

int nearest_vp(const ConstituencyTree& tree, int token) {
  int id = tree.preterminal(token);
  id = tree.node(id).parent;
  while (id >= 0 && tree.node(id).category != "VP")
    id = tree.node(id).parent;
  return id;
}

}  // namespace

std::string subcategorization(const ConstituencyTree& tree, int token,
                              const HeadRules&) {
  int vp = nearest_vp(tree, token);
  if (vp < 0)
    throw NoGoverningVP("no VP ancestor for token " + std::to_string(token));
  std::string out = "VP" + std::string("→");
  const auto& kids = tree.node(vp).children;
  for (std::size_t k = 0; k < kids.size(); ++k) {
    if (k) out += '-';
    out += tree.node(kids[k]).category;
  }
  return out;
}

std::vector<std::string> phrase_type_levels(const ConstituencyTree& tree,
                                            int token,
                                            const HeadRules& rules) {
  std::vector<std::string> levels;
  int id = tree.preterminal(token);
  for (int depth = 0; depth < 3 && id >= 0; ++depth) {
    if (rules.head_token(tree, id) != token) break;
    levels.push_back(tree.node(id).category);
    id = tree.node(id).parent;
  }
  return levels;
}

namespace {

std::vector<int> ancestor_chain(const ConstituencyTree& tree, int node) {
  std::vector<int> chain;
  for (int id = node; id >= 0; id = tree.node(id).parent) chain.push_back(id);
  return chain;
}

SyntacticPath path_from_node(const ConstituencyTree& tree, int start_node,
                             int predicate_token) {
  std::vector<int> up = ancestor_chain(tree, start_node);
  std::vector<int> down = ancestor_chain(tree, tree.preterminal(predicate_token));
  // Lowest common ancestor: first node of `up` present in `down`.
  std::size_t ui = 0, di = 0;
  for (; ui < up.size(); ++ui) {
    auto it = std::find(down.begin(), down.end(), up[ui]);
    if (it != down.end()) {
      di = static_cast<std::size_t>(it - down.begin());
      break;
    }
  }
  SyntacticPath p;
  p.full = tree.node(start_node).category;
  for (std::size_t k = 1; k <= ui; ++k)
    p.full += kUp + tree.node(up[k]).category;
  p.partial = p.full;
  for (std::size_t k = di; k-- > 0;)
    p.full += kDown + tree.node(down[k]).category;
  return p;
}

}  // namespace

SyntacticPath syntactic_path(const ConstituencyTree& tree, int token,
                             int predicate_token) {
  return path_from_node(tree, tree.preterminal(token), predicate_token);
}

ClauseFlags clause_patterns(const ConstituencyTree& tree) {
  ClauseFlags flags;
  flags.noun_clause_after_verb.assign(tree.leaf_count(), false);
  flags.np_before_vp.assign(tree.leaf_count(), false);
  for (int id = 0; id < tree.node_count(); ++id) {
    const auto& n = tree.node(id);
    if (n.terminal || tree.is_preterminal(id)) continue;
    const auto& kids = n.children;
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const auto& kid = tree.node(kids[k]);
      if (tree.is_preterminal(kids[k]) && is_verb_pos(kid.category)) {
        for (std::size_t m = k + 1; m < kids.size(); ++m) {
          const auto& cat = tree.node(kids[m]).category;
          if (cat == "S" || cat == "SBAR") {
            flags.noun_clause_after_verb[kid.start] = true;
            break;
          }
        }
      }
      if (kid.category == "NP") {
        bool vp_after = false;
        for (std::size_t m = k + 1; m < kids.size(); ++m)
          if (tree.node(kids[m]).category == "VP") vp_after = true;
        if (vp_after)
          for (int t = kid.start; t < kid.end; ++t)
            flags.np_before_vp[t] = true;
      }
    }
  }
  return flags;
}

std::vector<std::set<std::string>> dependency_flags(
    const ling::SentenceRecord& rec) {
  if (!rec.deps) throw MissingDepsLayer("record has no deps layer");
  std::vector<std::set<std::string>> tags(rec.size());
  for (const auto& arc : *rec.deps) {
    std::string rel = arc.rel;
    if (rel == "nsubjpass") rel = "nsubj";
    if (rel != "nsubj" && rel != "amod" && rel != "advmod" && rel != "dobj")
      continue;
    tags[arc.head].insert(rel + "-gov");
    tags[arc.dep].insert(rel + "-dep");
  }
  return tags;
}

void SubjectivityLexicon::add(std::string_view word,
                              std::string_view subjectivity,
                              std::string_view polarity) {
  if (subjectivity == "objective") return;  // default class, nothing to store
  if (subjectivity != "weak" && subjectivity != "strong")
    throw Error("bad subjectivity class: " + std::string(subjectivity));
  if (polarity != "negative" && polarity != "neutral" && polarity != "positive")
    throw Error("bad polarity class: " + std::string(polarity));
  entries_[textprep::lowercase(word)] =
      std::string(subjectivity) + "-" + std::string(polarity);
}

void SubjectivityLexicon::load(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string word, subj, pol;
    if (!(ls >> word >> subj >> pol)) continue;
    add(word, subj, pol);
  }
}

void SubjectivityLexicon::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open subjectivity lexicon: " + path);
  load(in);
}

std::string SubjectivityLexicon::classify(std::string_view token,
                                          std::string_view lemma) const {
  auto it = entries_.find(textprep::lowercase(token));
  if (it == entries_.end() && !lemma.empty())
    it = entries_.find(textprep::lowercase(lemma));
  return it == entries_.end() ? "objective" : it->second;
}

void VerbMap::load(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string verb, value;
    if (!(ls >> verb >> value)) continue;
    map_[textprep::lowercase(verb)] = value;
  }
}

void VerbMap::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open verb map: " + path);
  load(in);
}

std::optional<std::string> VerbMap::lookup(std::string_view verb) const {
  auto it = map_.find(textprep::lowercase(verb));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

int AttributeMatrix::column_index(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

std::string column_family(std::string_view column) {
  auto dot = column.find('.');
  return std::string(column.substr(0, dot));
}

bool AttributeMatrix::has_family(std::string_view family) const {
  if (!families.empty())
    return std::find(families.begin(), families.end(), family) !=
           families.end();
  // Hand-built matrices: derive families from column names.
  for (const auto& c : columns)
    if (column_family(c) == family) return true;
  return false;
}

std::set<std::string> AttributeMatrix::names_at(std::size_t row) const {
  std::set<std::string> out;
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (!values[row][c].empty()) out.insert(columns[c]);
  return out;
}

bool FeatureConfig::has(std::string_view family) const {
  return std::find(families.begin(), families.end(), family) !=
         families.end();
}

namespace {

std::vector<std::string> range_families(int lo, int hi,
                                        const std::set<int>& excluded = {}) {
  std::vector<std::string> fams;
  for (int k = lo; k <= hi; ++k)
    if (!excluded.count(k)) fams.push_back("f" + std::to_string(k));
  return fams;
}

std::vector<std::string> with_base(std::vector<std::string> more) {
  std::vector<std::string> fams = {"f1", "f2"};
  fams.insert(fams.end(), more.begin(), more.end());
  return fams;
}

}  // namespace

FeatureConfig named_feature_set(std::string_view name) {
  FeatureConfig cfg;
  std::string n(name);
  if (n == "A") cfg.families = {"f1", "f2"};
  else if (n == "B") cfg.families = {"f1", "f3", "f4", "f5"};
  else if (n == "C") cfg.families = {"f1", "pos"};
  else if (n == "D") cfg.families = {"f1", "pos", "f16"};
  else if (n == "E") cfg.families = {"f1", "pos", "f15"};
  else if (n == "F") cfg.families = {"f1", "f13"};
  else if (n == "G") cfg.families = {"f1", "f2", "pos", "f13", "f15", "f16", "f17"};
  else if (n == "H") cfg.families = {"f1", "f2", "f3", "f4", "f5", "pos", "f13", "f15", "f16", "f17"};
  else if (n == "I") cfg.families = {"f1", "f2", "pos", "f13", "f14", "f15", "f16", "f17"};
  else if (n == "J") cfg.families = {"f1", "f11"};
  else if (n == "K") cfg.families = {"f1", "f10"};
  else if (n == "L") cfg.families = {"f1", "f11", "f12"};
  else if (n == "M") cfg.families = {"f1", "f12"};
  else if (n == "N") cfg.families = {"f1", "f10", "f12"};
  else if (n == "O") cfg.families = {"f1", "f10", "f11"};
  else if (n == "P") cfg.families = with_base(range_families(6, 19, {15}));
  else if (n == "Q") cfg.families = with_base(range_families(6, 19, {16}));
  else if (n == "R") cfg.families = with_base(range_families(6, 19, {12}));
  else if (n == "S") cfg.families = with_base(range_families(6, 19, {10}));
  else if (n == "T") cfg.families = with_base(range_families(10, 17));
  else if (n == "U") cfg.families = with_base(range_families(6, 19, {12, 15}));
  else if (n == "V") cfg.families = with_base(range_families(6, 19));
  else if (n == "W") {
    cfg.families = with_base(range_families(6, 19));
    cfg.drop_target = true;
  } else {
    throw UnknownFeatureFamily("unknown feature set: " + n);
  }
  return cfg;
}

const std::vector<std::string>& known_feature_sets() {
  static const std::vector<std::string> names = {
      "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L",
      "M", "N", "O", "P", "Q", "R", "S", "T", "U", "V", "W"};
  return names;
}

namespace {

struct PredicateInfo {
  int token = -1;
  std::string voice;
  bool fallback = false;
};

int percolate_main_verb(const ConstituencyTree& tree, const HeadRules& rules) {
  int tok = rules.head_token(tree, tree.root());
  // Descend through auxiliary chains: while the head's VP parent has a VP
  // child after the head, the lexical verb lives inside that child.
  for (;;) {
    int pre = tree.preterminal(tok);
    int par = tree.node(pre).parent;
    if (par < 0 || tree.node(par).category != "VP") break;
    int inner = -1;
    bool seen_head = false;
    for (int child : tree.node(par).children) {
      if (child == pre) {
        seen_head = true;
        continue;
      }
      if (seen_head && tree.node(child).category == "VP") {
        inner = child;
        break;
      }
    }
    if (inner < 0) break;
    tok = rules.head_token(tree, inner);
  }
  if (!is_verbal(tree.pos(tok))) {
    for (int t = 0; t < tree.leaf_count(); ++t)
      if (is_verbal(tree.pos(t))) return t;
    return -1;
  }
  return tok;
}

int topmost_vp(const ConstituencyTree& tree, int token) {
  int best = -1;
  for (int id = tree.node(tree.preterminal(token)).parent; id >= 0;
       id = tree.node(id).parent)
    if (tree.node(id).category == "VP") best = id;
  return best;
}

std::string fallback_voice(const ConstituencyTree& tree, int pred,
                           const ling::SentenceRecord& rec) {
  if (tree.pos(pred) != "VBN") return "active";
  int vp = topmost_vp(tree, pred);
  int from = vp < 0 ? 0 : tree.node(vp).start;
  for (int t = from; t < pred; ++t) {
    std::string w = textprep::lowercase(rec.tokens[t]);
    if (kAuxForms.count(w)) return "passive";
    if (rec.lemmas && kAuxForms.count(textprep::lowercase((*rec.lemmas)[t])))
      return "passive";
  }
  return "active";
}

std::vector<PredicateInfo> resolve_predicates(const ling::SentenceRecord& rec,
                                              const ConstituencyTree* tree,
                                              const FeatureConfig& cfg,
                                              const HeadRules& rules) {
  std::vector<PredicateInfo> preds;
  if (rec.srl && !rec.srl->empty()) {
    for (const auto& f : *rec.srl)
      preds.push_back({f.predicate, f.voice.empty() ? "active" : f.voice,
                       false});
    return preds;
  }
  if (!cfg.srl_fallback)
    throw MissingSrlLayer("record has no srl layer and fallback is disabled");
  if (!tree)
    throw MissingSrlLayer("srl fallback requires a parse layer");
  int tok = percolate_main_verb(*tree, rules);
  if (tok < 0) throw MissingSrlLayer("srl fallback found no verb");
  preds.push_back({tok, fallback_voice(*tree, tok, rec), true});
  return preds;
}

class MatrixBuilder {
 public:
  explicit MatrixBuilder(std::size_t n) { m_.values.resize(n); }

  void set_families(std::vector<std::string> fams) {
    m_.families = std::move(fams);
  }

  int column(const std::string& name) {
    int idx = m_.column_index(name);
    if (idx >= 0) return idx;
    m_.columns.push_back(name);
    for (auto& row : m_.values) row.emplace_back();
    return static_cast<int>(m_.columns.size()) - 1;
  }

  void set(std::size_t row, const std::string& name, std::string value) {
    m_.values[row][static_cast<std::size_t>(column(name))] = std::move(value);
  }

  void set_all(const std::string& name, const std::string& value) {
    int c = column(name);
    for (auto& row : m_.values) row[static_cast<std::size_t>(c)] = value;
  }

  AttributeMatrix take() { return std::move(m_); }

 private:
  AttributeMatrix m_;
};

}  // namespace

AttributeMatrix assemble_attributes(const ling::SentenceRecord& rec,
                                    const FeatureConfig& cfg,
                                    const FeatureResources& res) {
  const std::size_t n = rec.size();
  const HeadRules& rules =
      res.head_rules ? *res.head_rules : HeadRules::collins();
  MatrixBuilder mb(n);
  mb.set_families(cfg.families);

  static const std::set<std::string> kKnown = {
      "f1",  "f2",  "f3",  "f4",  "f5",  "f6",  "f7",  "f8",  "f9",  "f10",
      "f11", "f12", "f13", "f14", "f15", "f16", "f17", "f18", "f19", "pos"};
  for (const auto& fam : cfg.families)
    if (!kKnown.count(fam))
      throw UnknownFeatureFamily("unknown feature family: " + fam);

  const bool needs_parse = cfg.has("f9") || cfg.has("f10") || cfg.has("f11") ||
                           cfg.has("f12") || cfg.has("f14");
  std::optional<ConstituencyTree> tree;
  if (rec.parse) tree.emplace(ConstituencyTree::parse(*rec.parse));
  if (needs_parse && !tree)
    throw MissingParseLayer("enabled families require a parse layer");

  const bool needs_pred = cfg.has("f6") || cfg.has("f7") || cfg.has("f8") ||
                          cfg.has("f9") || cfg.has("f12");
  std::vector<PredicateInfo> preds;
  if (needs_pred)
    preds = resolve_predicates(rec, tree ? &*tree : nullptr, cfg, rules);

  if (cfg.has("f1"))
    for (std::size_t t = 0; t < n; ++t) mb.set(t, "f1", rec.tokens[t]);

  if (cfg.has("f2")) {
    if (!rec.lemmas) throw MissingLemmaLayer("f2 requires a lemmas layer");
    for (std::size_t t = 0; t < n; ++t) mb.set(t, "f2", (*rec.lemmas)[t]);
  }

  if (cfg.has("pos")) {
    if (!rec.pos) throw MissingPosLayer("pos family requires a pos layer");
    for (std::size_t t = 0; t < n; ++t) mb.set(t, "pos", (*rec.pos)[t]);
  }

  if (cfg.has("f3") || cfg.has("f4") || cfg.has("f5")) {
    for (std::size_t t = 0; t < n; ++t) {
      OrthoFlags fl = orthographic_flags(rec.tokens[t]);
      if (cfg.has("f3"))
        mb.set(t, "f3", fl.allcaps ? "allcaps" : fl.initcap ? "initcap" : "0");
      if (cfg.has("f4")) mb.set(t, "f4", fl.alnum_mix ? "1" : "0");
      if (cfg.has("f5")) mb.set(t, "f5", fl.punct ? "1" : "0");
    }
  }

  if (cfg.has("f6") || cfg.has("f7") || cfg.has("f8")) {
    for (std::size_t k = 0; k < preds.size(); ++k) {
      std::string suffix = k == 0 ? "" : "." + std::to_string(k);
      const auto& p = preds[k];
      std::string voice = p.voice + (p.fallback ? "~fallback" : "");
      for (std::size_t t = 0; t < n; ++t) {
        int d = static_cast<int>(t) - p.token;
        if (cfg.has("f6")) mb.set(t, "f6" + suffix, std::to_string(d));
        if (cfg.has("f7"))
          mb.set(t, "f7" + suffix, d < 0 ? "before" : d > 0 ? "after" : "pred");
        if (cfg.has("f8")) mb.set(t, "f8" + suffix, voice);
      }
    }
  }

  if (cfg.has("f9"))
    mb.set_all("f9", subcategorization(*tree, preds.front().token, rules));

  if (cfg.has("f10")) {
    for (std::size_t t = 0; t < n; ++t) {
      int ti = static_cast<int>(t);
      mb.set(t, "f10",
             tree->pos(ti) + ":" + textprep::lowercase(rec.tokens[t]));
      int parent = tree->node(tree->preterminal(ti)).parent;
      if (parent >= 0 && rules.head_token(*tree, parent) == ti) {
        HeadInfo hi = head_word(*tree, parent, rules);
        mb.set(t, "f10.p", hi.pos + ":" + hi.word);
        if (hi.pp_content) mb.set(t, "f10.p.content", *hi.pp_content);
      }
    }
  }

  if (cfg.has("f11")) {
    for (std::size_t t = 0; t < n; ++t) {
      auto levels = phrase_type_levels(*tree, static_cast<int>(t), rules);
      for (std::size_t l = 0; l < levels.size(); ++l)
        mb.set(t, "f11." + std::to_string(l), levels[l]);
    }
  }

  if (cfg.has("f12")) {
    int pred = preds.front().token;
    for (std::size_t t = 0; t < n; ++t) {
      int ti = static_cast<int>(t);
      SyntacticPath sp = syntactic_path(*tree, ti, pred);
      mb.set(t, "f12.full", sp.full);
      mb.set(t, "f12.part", sp.partial);
      int parent = tree->node(tree->preterminal(ti)).parent;
      if (parent >= 0 && rules.head_token(*tree, parent) == ti) {
        SyntacticPath pp = path_from_node(*tree, parent, pred);
        mb.set(t, "f12.p.full", pp.full);
        mb.set(t, "f12.p.part", pp.partial);
      }
    }
  }

  if (cfg.has("f13")) {
    if (!rec.chunks) throw MissingChunkLayer("f13 requires a chunks layer");
    for (std::size_t t = 0; t < n; ++t) mb.set(t, "f13", (*rec.chunks)[t]);
  }

  if (cfg.has("f14")) {
    ClauseFlags fl = clause_patterns(*tree);
    for (std::size_t t = 0; t < n; ++t) {
      mb.set(t, "f14.ncav", fl.noun_clause_after_verb[t] ? "1" : "0");
      mb.set(t, "f14.nbv", fl.np_before_vp[t] ? "1" : "0");
    }
  }

  if (cfg.has("f15")) {
    auto tags = dependency_flags(rec);
    for (std::size_t t = 0; t < n; ++t) {
      if (tags[t].empty()) {
        mb.set(t, "f15", "O");
      } else {
        std::string v;
        for (const auto& tag : tags[t]) {
          if (!v.empty()) v += '|';
          v += tag;
        }
        mb.set(t, "f15", v);
      }
    }
  }

  if (cfg.has("f16")) {
    if (!rec.ner) throw MissingNerLayer("f16 requires a ner layer");
    for (std::size_t t = 0; t < n; ++t) mb.set(t, "f16", (*rec.ner)[t]);
  }

  if (cfg.has("f17")) {
    for (std::size_t t = 0; t < n; ++t) {
      std::string lemma = rec.lemmas ? (*rec.lemmas)[t] : "";
      mb.set(t, "f17", res.lexicon
                           ? res.lexicon->classify(rec.tokens[t], lemma)
                           : "objective");
    }
  }

  auto verb_lookup_family = [&](const char* fam,
                                const std::optional<std::vector<
                                    std::optional<std::string>>>& layer,
                                const VerbMap* map) {
    for (std::size_t t = 0; t < n; ++t) {
      std::string value = "none";
      if (layer && (*layer)[t]) {
        value = *(*layer)[t];
      } else if (map) {
        bool verbish = true;
        if (rec.pos)
          verbish = is_verbal((*rec.pos)[t]);
        else if (tree)
          verbish = is_verbal(tree->pos(static_cast<int>(t)));
        if (verbish) {
          std::string key = rec.lemmas ? (*rec.lemmas)[t] : rec.tokens[t];
          if (auto v = map->lookup(key)) value = *v;
        }
      }
      mb.set(t, fam, value);
    }
  };
  if (cfg.has("f18"))
    verb_lookup_family("f18", rec.verb_cluster, res.verb_clusters);
  if (cfg.has("f19")) verb_lookup_family("f19", rec.frame, res.frames);

  return mb.take();
}

}  // namespace finmwe::feat
