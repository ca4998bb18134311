#ifndef FINMWE_FEATURES_HPP
#define FINMWE_FEATURES_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "finmwe/errors.hpp"
#include "finmwe/record.hpp"
#include "finmwe/tree.hpp"

namespace finmwe::feat {

FINMWE_DEFINE_ERROR(MissingSrlLayer);
FINMWE_DEFINE_ERROR(MissingDepsLayer);
FINMWE_DEFINE_ERROR(MissingParseLayer);
FINMWE_DEFINE_ERROR(MissingPosLayer);
FINMWE_DEFINE_ERROR(MissingLemmaLayer);
FINMWE_DEFINE_ERROR(MissingChunkLayer);
FINMWE_DEFINE_ERROR(MissingNerLayer);
FINMWE_DEFINE_ERROR(UnknownFeatureFamily);

/// Character-class flags for one token.
struct OrthoFlags {
  bool initcap = false;
  bool allcaps = false;
  bool alnum_mix = false;
  bool punct = false;
};
OrthoFlags orthographic_flags(std::string_view token);

/// Lexical head of a node: head token index, its word and POS; for PP nodes
/// also the content word (head of the inner NP).
struct HeadInfo {
  int token = -1;
  std::string word;
  std::string pos;
  std::optional<std::string> pp_content;
};
HeadInfo head_word(const ConstituencyTree& tree, int node,
                   const HeadRules& rules = HeadRules::collins());

/// Expansion of the predicate's governing VP, e.g. "VP->VBD-S".
/// Throws NoGoverningVP.
std::string subcategorization(const ConstituencyTree& tree, int token,
                              const HeadRules& rules = HeadRules::collins());

/// Categories of up to three ancestors (starting at the preterminal) for
/// which the token is still the lexical head.
std::vector<std::string> phrase_type_levels(
    const ConstituencyTree& tree, int token,
    const HeadRules& rules = HeadRules::collins());

/// Category path between two tokens through their lowest common ancestor.
struct SyntacticPath {
  std::string full;     // e.g. "PRP^NP^S_VP_VBD" with arrows
  std::string partial;  // up-portion ending at the LCA
};
SyntacticPath syntactic_path(const ConstituencyTree& tree, int token,
                             int predicate_token);

/// Per-token clause-structure flags (f14).
struct ClauseFlags {
  std::vector<bool> noun_clause_after_verb;
  std::vector<bool> np_before_vp;
};
ClauseFlags clause_patterns(const ConstituencyTree& tree);

/// Per-token dependency participation tags (f15): relation plus direction,
/// e.g. "nsubj-dep", "amod-gov". nsubjpass folds into nsubj.
std::vector<std::set<std::string>> dependency_flags(
    const ling::SentenceRecord& rec);

/// Subjectivity x polarity lexicon (f17): seven classes, unknown words are
/// "objective".
class SubjectivityLexicon {
 public:
  /// Loads tab-separated "word<TAB>subjectivity<TAB>polarity" lines with
  /// subjectivity in {objective,weak,strong} and polarity in
  /// {negative,neutral,positive}.
  void load(std::istream& in);
  void load_file(const std::string& path);
  void add(std::string_view word, std::string_view subjectivity,
           std::string_view polarity);

  /// Class name: "objective" or "<subjectivity>-<polarity>".
  std::string classify(std::string_view token,
                       std::string_view lemma = "") const;

  bool empty() const { return entries_.empty(); }

 private:
  std::map<std::string, std::string> entries_;
};

/// Verb -> cluster id / frame name maps (f18, f19), keyed by lemma.
class VerbMap {
 public:
  void load(std::istream& in);  // "verb<TAB>value" lines
  void load_file(const std::string& path);
  std::optional<std::string> lookup(std::string_view verb) const;
  bool empty() const { return map_.empty(); }

 private:
  std::map<std::string, std::string> map_;
};

/// Per-token attribute rows. Sentence-level attributes are replicated onto
/// every token; a position may lack a value for a registered column. Column
/// names are "<family>" or "<family>.<part>", so the family of a column is
/// its prefix before the first '.'.
struct AttributeMatrix {
  std::vector<std::string> families;  // enabled family ids
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> values;  // [token][column], "" absent

  std::size_t rows() const { return values.size(); }
  int column_index(std::string_view name) const;
  std::set<std::string> names_at(std::size_t row) const;
  bool has_family(std::string_view family) const;
};

/// Family id of a column name ("f12.p.full" -> "f12").
std::string column_family(std::string_view column);

/// Which feature families to compute. Families are the stable public ids
/// f1..f19 plus "pos".
struct FeatureConfig {
  std::vector<std::string> families;
  bool drop_target = false;   // relabel target spans to O before use
  bool srl_fallback = true;   // derive f6-f8 from the parse when SRL absent

  bool has(std::string_view family) const;
};

/// Resolves a named feature set from the ablation grid (A..W) to a config.
FeatureConfig named_feature_set(std::string_view name);
const std::vector<std::string>& known_feature_sets();

/// External lookup resources for assembly.
struct FeatureResources {
  const SubjectivityLexicon* lexicon = nullptr;
  const VerbMap* verb_clusters = nullptr;
  const VerbMap* frames = nullptr;
  const HeadRules* head_rules = nullptr;  // nullptr -> built-in tables
};

/// Computes one matrix with all enabled families. Missing required layers
/// raise the matching Missing*Layer error; optional lookup layers yield
/// "none" values.
AttributeMatrix assemble_attributes(const ling::SentenceRecord& rec,
                                    const FeatureConfig& cfg,
                                    const FeatureResources& res = {});

}  // namespace finmwe::feat

#endif
