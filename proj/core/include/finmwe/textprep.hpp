#ifndef FINMWE_TEXTPREP_HPP
#define FINMWE_TEXTPREP_HPP

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "finmwe/errors.hpp"

namespace finmwe::textprep {

FINMWE_DEFINE_ERROR(EmptyDocument);

/// One raw filing as downloaded: company, fiscal year, HTML body.
struct RawFiling {
  std::string company_id;
  int fiscal_year = 0;
  std::string body;
};

/// One sentence that survived filtering, with provenance.
struct CandidateSentence {
  std::string text;
  int token_count = 0;
  std::string company_id;
  int fiscal_year = 0;
  int index = 0;  // sentence index within the filing
};

struct CleanConfig {
  double max_nonalpha_ratio = 0.5;  // drop when strictly exceeded
  int min_alpha = 3;
};

/// Removes markup from tolerant HTML: tags, comments, script/style bodies,
/// head sections and tables are dropped; block-level tags become line breaks;
/// common entities are decoded. Throws EmptyDocument when nothing survives.
std::string strip_markup(std::string_view html);

/// Drops lines dominated by non-alphabetic characters (ratio strictly above
/// the threshold) or with fewer than min_alpha letters.
std::vector<std::string> clean_lines(std::string_view text,
                                     const CleanConfig& cfg = {});

const std::set<std::string>& default_abbreviations();

/// Rule-based sentence segmentation: terminal punctuation with abbreviation
/// and decimal guards. Spans partition the input modulo whitespace.
std::vector<std::string> segment_sentences(
    std::string_view text,
    const std::set<std::string>& abbreviations = default_abbreviations());

/// Whitespace/punctuation tokenizer; a period, comma, apostrophe or hyphen
/// between alphanumerics stays inside the token ("1.2", "don't").
std::vector<std::string> tokenize(std::string_view sentence);

/// Number of word tokens (tokens starting with an alphanumeric character).
int word_count(const std::vector<std::string>& tokens);

/// Case-insensitive subjective word set, optionally lemma-aware.
class Lexicon {
 public:
  void add_word(std::string_view word);
  /// Loads "word[<TAB>class...]" lines, one word per line; '#' comments.
  void load(std::istream& in);
  void load_file(const std::string& path);
  void set_lemma_map(std::map<std::string, std::string> lemmas);

  bool empty() const { return words_.empty(); }
  std::size_t size() const { return words_.size(); }

  /// True when the word (lowercased, or its mapped lemma) is in the set.
  bool contains(std::string_view word) const;

 private:
  std::set<std::string> words_;
  std::map<std::string, std::string> lemma_map_;
};

/// Keeps sentences with at least one lexicon hit and a word count within
/// [min_tokens, max_tokens].
std::vector<CandidateSentence> filter_candidates(
    const std::vector<std::string>& sentences, const Lexicon& lexicon,
    int min_tokens, int max_tokens, const std::string& company_id = "",
    int fiscal_year = 0);

std::string lowercase(std::string_view s);

}  // namespace finmwe::textprep

#endif
