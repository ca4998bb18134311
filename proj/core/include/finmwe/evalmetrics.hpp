#ifndef FINMWE_EVALMETRICS_HPP
#define FINMWE_EVALMETRICS_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "finmwe/errors.hpp"
#include "finmwe/record.hpp"

namespace finmwe::eval {

/// Per-class phrase-exact-match counts and rates on the percent scale.
struct ClassScore {
  std::string cls;
  long gold = 0;
  long predicted = 0;
  long correct = 0;
  double p = 0;  // percent
  double r = 0;
  double f = 0;
};

struct EvalReport {
  std::vector<ClassScore> per_class;  // five classes + "Other"
  ClassScore micro;                   // "Average" (micro)
  ClassScore macro;                   // "Average" (macro)
  double token_accuracy = 0;          // percent
  long tokens = 0;
  long tokens_correct = 0;
};

/// Percent of positions with identical tags. Throws ling::LengthMismatch.
double token_accuracy(const std::vector<std::string>& gold,
                      const std::vector<std::string>& predicted);

/// F = (1+alpha) p r / (alpha p + r); 0 when p = r = 0.
double f_measure(double p, double r, double alpha = 1.0);

/// Phrase-exact-match precision/recall/F per class over aligned tag
/// sequences. A predicted span counts only on exact (class, start, end)
/// match; maximal O-runs score as the "Other" class.
EvalReport phrase_prf(const std::vector<std::vector<std::string>>& gold,
                      const std::vector<std::vector<std::string>>& predicted);

/// Keeps records that contain an agent span, a direct-subjective span, and
/// an expressive-subjectivity or objective-speech-event span.
std::vector<ling::SentenceRecord> select_explicit(
    const std::vector<ling::SentenceRecord>& records);

/// Relabels B-target/I-target to O; other tags untouched.
std::vector<std::string> drop_target_tags(const std::vector<std::string>& tags);
std::vector<ling::SentenceRecord> drop_target(
    const std::vector<ling::SentenceRecord>& records);

/// Deterministic shuffled split; train gets floor(n * fraction) records.
std::pair<std::vector<ling::SentenceRecord>, std::vector<ling::SentenceRecord>>
split_heldout(const std::vector<ling::SentenceRecord>& records,
              double train_fraction, std::uint64_t seed);

/// Split sizes without materializing records.
std::pair<std::size_t, std::size_t> split_sizes(std::size_t n,
                                                double train_fraction);

/// Tab-separated report: class, p, r, F rows plus token-accuracy footer.
void write_report(std::ostream& out, const EvalReport& report);

}  // namespace finmwe::eval

#endif
