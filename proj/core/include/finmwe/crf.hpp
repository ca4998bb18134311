#ifndef FINMWE_CRF_HPP
#define FINMWE_CRF_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finmwe/errors.hpp"
#include "finmwe/features.hpp"

namespace finmwe::crf {

FINMWE_DEFINE_ERROR(UnknownAttribute);
FINMWE_DEFINE_ERROR(VersionMismatch);
FINMWE_DEFINE_ERROR(CorruptFile);
FINMWE_DEFINE_ERROR(InconsistentDataset);

/// One feature template: a conjunction of (attribute column, token offset)
/// plus the label context its instantiations bind to.
struct FeatureTemplate {
  struct Conjunct {
    std::string attr;
    int offset = 0;
  };
  enum class LabelContext { Current, PrevCurrent };

  std::vector<Conjunct> conjuncts;
  LabelContext context = LabelContext::Current;

  /// Compact form "attr@off[+attr@off...]", prefixed "b:" for PrevCurrent.
  std::string id() const;
  static FeatureTemplate parse(std::string_view id);
};

/// Default set: one unigram template per attribute column at each offset in
/// [-window, window], current-label context. Transitions are implicit.
std::vector<FeatureTemplate> default_templates(
    const std::vector<std::string>& columns, int window = 2);

/// Grow-on-demand string interner, freezable.
class Alphabet {
 public:
  int intern(const std::string& s);        // adds when unfrozen, else -1
  int find(const std::string& s) const;    // -1 when absent
  const std::string& name(int id) const { return names_[id]; }
  int size() const { return static_cast<int>(names_.size()); }
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

 private:
  std::map<std::string, int> index_;
  std::vector<std::string> names_;
  bool frozen_ = false;
};

struct TrainConfig {
  int max_iterations = 500;
  double gaussian_variance = 10.0;  // sigma^2 of the Gaussian prior
  int order = 1;                    // 1 or 2
  double gradient_tolerance = 1e-6;
  std::uint64_t seed = 1;
  int window = 2;  // template offset window
};

/// A trained (or in-training) linear-chain CRF.
///
/// Weight layout: [obs x L emission][obs2 x L x L pair emission]
/// [L x L transition][L x L x L trigram when order 2]. The feature alphabet
/// of the spec is the enumeration of these slots as strings.
struct CrfModel {
  std::vector<std::string> labels;
  Alphabet obs;   // Current-context observation strings
  Alphabet obs2;  // PrevCurrent-context observation strings
  std::vector<FeatureTemplate> templates;
  int order = 1;
  double gaussian_variance = 10.0;
  std::vector<double> weights;

  // Training metadata.
  std::string feature_set;  // named set or comma-joined family list
  int iterations_run = 0;
  std::string stop_reason;
  std::uint64_t seed = 0;

  int label_count() const { return static_cast<int>(labels.size()); }
  int label_index(std::string_view tag) const;

  std::size_t weight_count() const;
  void resize_weights() { weights.assign(weight_count(), 0.0); }

  // Slot indexing into `weights`.
  std::size_t em_slot(int obs_id, int y) const;
  std::size_t em2_slot(int obs2_id, int y_prev, int y) const;
  std::size_t tr_slot(int y_prev, int y) const;
  std::size_t tri_slot(int y_pp, int y_prev, int y) const;

  /// Name of the weight slot, e.g. "E|f1@0=We|y=B-agent" or "T|O|B-agent".
  std::string feature_name(std::size_t slot) const;
};

/// One sentence compiled against a model's alphabets.
struct CompiledSequence {
  std::vector<std::vector<int>> obs;   // per position, Current-context ids
  std::vector<std::vector<int>> obs2;  // per position, PrevCurrent ids
  std::vector<int> gold;               // label ids, empty when unlabeled
  std::size_t length() const { return obs.size(); }
};

/// Instantiates the model's templates over a matrix. When `grow` is true the
/// alphabets extend; otherwise unseen observations are dropped. Throws
/// UnknownAttribute when a template names a column the matrix lacks.
CompiledSequence compile(const feat::AttributeMatrix& matrix, CrfModel& model,
                         bool grow,
                         const std::vector<std::string>* gold_tags = nullptr);

/// log sum over all label sequences of exp(score), forward recursion in log
/// space. Works for order 1 and 2.
double log_partition(const CrfModel& model, const CompiledSequence& seq);

/// Unnormalized score of one label sequence.
double sequence_score(const CrfModel& model, const CompiledSequence& seq,
                      const std::vector<int>& labels);

/// Penalized log-likelihood and its gradient over a dataset:
/// sum(gold score - log Z) - |w|^2 / (2 sigma^2).
double loglik_and_gradient(const CrfModel& model,
                           const std::vector<CompiledSequence>& data,
                           std::vector<double>& grad);

/// Per-position posterior marginals P(y_t = y), rows sum to 1.
std::vector<std::vector<double>> posterior_marginals(
    const CrfModel& model, const CompiledSequence& seq);

/// Argmax label sequence; ties break toward the lowest label index from the
/// left.
std::vector<int> viterbi(const CrfModel& model, const CompiledSequence& seq);
std::vector<std::string> viterbi_tags(const CrfModel& model,
                                      const CompiledSequence& seq);

/// Trains on attribute matrices paired with gold IOB tag sequences.
CrfModel train(const std::vector<feat::AttributeMatrix>& matrices,
               const std::vector<std::vector<std::string>>& gold,
               const TrainConfig& config,
               const std::vector<FeatureTemplate>* templates = nullptr,
               const std::string& feature_set = "");

/// IOB label alphabet over the five opinion classes: O first (index 0).
std::vector<std::string> default_label_alphabet(bool include_target = true);

void save_model(const CrfModel& model, std::ostream& out);
void save_model_file(const CrfModel& model, const std::string& path);
CrfModel load_model(std::istream& in);
CrfModel load_model_file(const std::string& path);

}  // namespace finmwe::crf

#endif
