#ifndef FINMWE_MWE_HPP
#define FINMWE_MWE_HPP

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finmwe/errors.hpp"
#include "finmwe/record.hpp"

namespace finmwe::mwe {

FINMWE_DEFINE_ERROR(MissingNerLayer);
FINMWE_DEFINE_ERROR(DomainError);

/// One harvested multiword expression with corpus statistics.
struct MweEntry {
  std::string cls;       // opinion class it was tagged as
  std::string text;      // canonical token sequence, space-joined
  long total_freq = 0;   // sum of per-document frequencies
  long doc_freq = 0;     // n_i: number of documents containing it
  std::map<std::string, long> per_doc;  // document id -> f_ij
};

struct MwefIdfConfig {
  double tf_scale_q = 20.0;
  double idf_boost_l = 40.0;
};

/// Replaces maximal person/organization/location entity runs with PERSON,
/// ORG, LOC placeholder tokens; every layer is re-aligned (the parse by leaf
/// surgery). Throws MissingNerLayer.
ling::SentenceRecord mask_entities(const ling::SentenceRecord& rec);

/// Canonical form of a token span: lemma when available, lowercased,
/// space-joined.
std::string canonical_text(const ling::SentenceRecord& rec, int start,
                           int end);

/// Aggregates every decoded span of the requested class (all classes when
/// unset) into MweEntry rows keyed by canonical text. Records without a
/// doc_id count under "".
std::vector<MweEntry> harvest(const std::vector<ling::SentenceRecord>& records,
                              const std::optional<std::string>& class_filter);

/// Weight of an MWE occurring f_ij times in a document:
/// (f_ij / q) * ln(max(1, l * f_ij * N / n_i)); 0 when f_ij = 0.
/// Throws DomainError when n_i = 0 (with f_ij > 0) or n_i > N.
double mwef_idf(double f_ij, long n_i, long N, const MwefIdfConfig& cfg = {});

/// Sentences whose decoded agent span matches any agent term
/// (case-insensitive, canonical form) and that contain the MWE token
/// sequence. Returns (total sentence count, distinct document count).
std::pair<long, long> cooccurrence(
    const std::vector<ling::SentenceRecord>& records,
    const std::vector<std::string>& agent_terms, const std::string& mwe_text);

/// Sort order used by the frequency tables: descending total frequency, ties
/// by text.
void sort_by_frequency(std::vector<MweEntry>& entries);

}  // namespace finmwe::mwe

#endif
