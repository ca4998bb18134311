#include "finmwe/crf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "finmwe/lbfgs.hpp"

namespace finmwe::crf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr char kValueSep = '\x1f';

double logsumexp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

std::string FeatureTemplate::id() const {
  std::string out = context == LabelContext::PrevCurrent ? "b:" : "";
  for (std::size_t k = 0; k < conjuncts.size(); ++k) {
    if (k) out += '+';
    out += conjuncts[k].attr + "@" + std::to_string(conjuncts[k].offset);
  }
  return out;
}

FeatureTemplate FeatureTemplate::parse(std::string_view id) {
  FeatureTemplate t;
  if (id.substr(0, 2) == "b:") {
    t.context = LabelContext::PrevCurrent;
    id.remove_prefix(2);
  }
  std::size_t pos = 0;
  while (pos <= id.size()) {
    std::size_t plus = id.find('+', pos);
    std::string_view part =
        id.substr(pos, plus == std::string_view::npos ? std::string_view::npos
                                                      : plus - pos);
    std::size_t at = part.rfind('@');
    if (at == std::string_view::npos || at == 0)
      throw CorruptFile("bad template id: " + std::string(id));
    Conjunct c;
    c.attr = std::string(part.substr(0, at));
    c.offset = std::stoi(std::string(part.substr(at + 1)));
    t.conjuncts.push_back(std::move(c));
    if (plus == std::string_view::npos) break;
    pos = plus + 1;
  }
  if (t.conjuncts.empty())
    throw CorruptFile("template without conjuncts: " + std::string(id));
  return t;
}

std::vector<FeatureTemplate> default_templates(
    const std::vector<std::string>& columns, int window) {
  std::vector<FeatureTemplate> ts;
  for (const auto& col : columns)
    for (int off = -window; off <= window; ++off)
      ts.push_back({{{col, off}}, FeatureTemplate::LabelContext::Current});
  return ts;
}

int Alphabet::intern(const std::string& s) {
  auto it = index_.find(s);
  if (it != index_.end()) return it->second;
  if (frozen_) return -1;
  int id = static_cast<int>(names_.size());
  index_.emplace(s, id);
  names_.push_back(s);
  return id;
}

int Alphabet::find(const std::string& s) const {
  auto it = index_.find(s);
  return it == index_.end() ? -1 : it->second;
}

int CrfModel::label_index(std::string_view tag) const {
  for (std::size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == tag) return static_cast<int>(k);
  return -1;
}

std::size_t CrfModel::weight_count() const {
  const std::size_t L = labels.size();
  std::size_t n = static_cast<std::size_t>(obs.size()) * L +
                  static_cast<std::size_t>(obs2.size()) * L * L + L * L;
  if (order == 2) n += L * L * L;
  return n;
}

std::size_t CrfModel::em_slot(int obs_id, int y) const {
  return static_cast<std::size_t>(obs_id) * labels.size() +
         static_cast<std::size_t>(y);
}

std::size_t CrfModel::em2_slot(int obs2_id, int y_prev, int y) const {
  const std::size_t L = labels.size();
  return static_cast<std::size_t>(obs.size()) * L +
         (static_cast<std::size_t>(obs2_id) * L +
          static_cast<std::size_t>(y_prev)) *
             L +
         static_cast<std::size_t>(y);
}

std::size_t CrfModel::tr_slot(int y_prev, int y) const {
  const std::size_t L = labels.size();
  return static_cast<std::size_t>(obs.size()) * L +
         static_cast<std::size_t>(obs2.size()) * L * L +
         static_cast<std::size_t>(y_prev) * L + static_cast<std::size_t>(y);
}

std::size_t CrfModel::tri_slot(int y_pp, int y_prev, int y) const {
  const std::size_t L = labels.size();
  return static_cast<std::size_t>(obs.size()) * L +
         static_cast<std::size_t>(obs2.size()) * L * L + L * L +
         (static_cast<std::size_t>(y_pp) * L +
          static_cast<std::size_t>(y_prev)) *
             L +
         static_cast<std::size_t>(y);
}

std::string CrfModel::feature_name(std::size_t slot) const {
  const std::size_t L = labels.size();
  std::size_t em_n = static_cast<std::size_t>(obs.size()) * L;
  std::size_t em2_n = static_cast<std::size_t>(obs2.size()) * L * L;
  if (slot < em_n)
    return "E|" + obs.name(static_cast<int>(slot / L)) + "|y=" +
           labels[slot % L];
  slot -= em_n;
  if (slot < em2_n)
    return "E2|" + obs2.name(static_cast<int>(slot / (L * L))) + "|y0=" +
           labels[(slot / L) % L] + "|y1=" + labels[slot % L];
  slot -= em2_n;
  if (slot < L * L) return "T|" + labels[slot / L] + "|" + labels[slot % L];
  slot -= L * L;
  return "T3|" + labels[slot / (L * L)] + "|" + labels[(slot / L) % L] + "|" +
         labels[slot % L];
}

CompiledSequence compile(const feat::AttributeMatrix& matrix, CrfModel& model,
                         bool grow,
                         const std::vector<std::string>* gold_tags) {
  const int T = static_cast<int>(matrix.rows());
  CompiledSequence seq;
  seq.obs.resize(T);
  seq.obs2.resize(T);

  for (const auto& t : model.templates)
    for (const auto& c : t.conjuncts)
      if (!matrix.has_family(feat::column_family(c.attr)))
        throw UnknownAttribute("template attribute '" + c.attr +
                               "' names a family absent from the matrix");

  for (int pos = 0; pos < T; ++pos) {
    for (const auto& t : model.templates) {
      std::string s = t.id();
      s += '=';
      bool first = true;
      for (const auto& c : t.conjuncts) {
        if (!first) s += kValueSep;
        first = false;
        int p = pos + c.offset;
        if (p < 0) {
          s += "_BOS_";
        } else if (p >= T) {
          s += "_EOS_";
        } else {
          int col = matrix.column_index(c.attr);
          const std::string& v =
              col < 0 ? std::string() : matrix.values[p][col];
          s += v.empty() ? "_NA_" : v;
        }
      }
      Alphabet& alpha =
          t.context == FeatureTemplate::LabelContext::Current ? model.obs
                                                              : model.obs2;
      int id = grow ? alpha.intern(s) : alpha.find(s);
      if (id < 0) continue;  // unseen at decode time
      if (t.context == FeatureTemplate::LabelContext::Current)
        seq.obs[pos].push_back(id);
      else
        seq.obs2[pos].push_back(id);
    }
  }

  if (gold_tags) {
    if (static_cast<int>(gold_tags->size()) != T)
      throw InconsistentDataset("gold tag count != token count");
    for (const auto& tag : *gold_tags) {
      int y = model.label_index(tag);
      if (y < 0) throw InconsistentDataset("tag outside label alphabet: " + tag);
      seq.gold.push_back(y);
    }
  }
  return seq;
}

namespace {

// Per-position emission scores em[t][y]; em2 summed per (t, a, b) on demand.
std::vector<std::vector<double>> emission_table(const CrfModel& m,
                                                const CompiledSequence& s) {
  const int T = static_cast<int>(s.length());
  const int L = m.label_count();
  std::vector<std::vector<double>> em(T, std::vector<double>(L, 0.0));
  for (int t = 0; t < T; ++t)
    for (int o : s.obs[t])
      for (int y = 0; y < L; ++y) em[t][y] += m.weights[m.em_slot(o, y)];
  return em;
}

double em2_score(const CrfModel& m, const CompiledSequence& s, int t, int a,
                 int b) {
  double v = 0;
  for (int o : s.obs2[t]) v += m.weights[m.em2_slot(o, a, b)];
  return v;
}

bool has_obs2(const CompiledSequence& s) {
  for (const auto& v : s.obs2)
    if (!v.empty()) return true;
  return false;
}

}  // namespace

double sequence_score(const CrfModel& m, const CompiledSequence& s,
                      const std::vector<int>& y) {
  const int T = static_cast<int>(s.length());
  double score = 0;
  for (int t = 0; t < T; ++t) {
    for (int o : s.obs[t]) score += m.weights[m.em_slot(o, y[t])];
    if (t >= 1) {
      score += m.weights[m.tr_slot(y[t - 1], y[t])];
      score += em2_score(m, s, t, y[t - 1], y[t]);
    }
    if (m.order == 2 && t >= 2)
      score += m.weights[m.tri_slot(y[t - 2], y[t - 1], y[t])];
  }
  return score;
}

namespace {

// ---- Order 1 lattice ----

struct Lattice1 {
  std::vector<std::vector<double>> alpha, beta, em;
  double log_z = 0;
};

Lattice1 forward_backward1(const CrfModel& m, const CompiledSequence& s) {
  const int T = static_cast<int>(s.length());
  const int L = m.label_count();
  Lattice1 lat;
  lat.em = emission_table(m, s);
  lat.alpha.assign(T, std::vector<double>(L, 0.0));
  lat.beta.assign(T, std::vector<double>(L, 0.0));

  std::vector<double> acc(L);
  for (int y = 0; y < L; ++y) lat.alpha[0][y] = lat.em[0][y];
  for (int t = 1; t < T; ++t)
    for (int y = 0; y < L; ++y) {
      for (int a = 0; a < L; ++a)
        acc[a] = lat.alpha[t - 1][a] + m.weights[m.tr_slot(a, y)] +
                 em2_score(m, s, t, a, y);
      lat.alpha[t][y] = lat.em[t][y] + logsumexp(acc);
    }
  lat.log_z = logsumexp(lat.alpha[T - 1]);

  for (int t = T - 2; t >= 0; --t)
    for (int a = 0; a < L; ++a) {
      for (int y = 0; y < L; ++y)
        acc[y] = m.weights[m.tr_slot(a, y)] + em2_score(m, s, t + 1, a, y) +
                 lat.em[t + 1][y] + lat.beta[t + 1][y];
      lat.beta[t][a] = logsumexp(acc);
    }
  return lat;
}

// ---- Order 2 lattice over pair states (y_{t-1}, y_t) ----

struct Lattice2 {
  // alpha[t][a*L+b], defined for t >= 1; beta likewise.
  std::vector<std::vector<double>> alpha, beta, em;
  double log_z = 0;
};

Lattice2 forward_backward2(const CrfModel& m, const CompiledSequence& s) {
  const int T = static_cast<int>(s.length());
  const int L = m.label_count();
  Lattice2 lat;
  lat.em = emission_table(m, s);
  if (T == 1) {
    lat.log_z = logsumexp(lat.em[0]);
    return lat;
  }
  lat.alpha.assign(T, std::vector<double>(L * L, kNegInf));
  lat.beta.assign(T, std::vector<double>(L * L, 0.0));

  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b)
      lat.alpha[1][a * L + b] = lat.em[1][b] +
                                (lat.em[0][a] + m.weights[m.tr_slot(a, b)] +
                                 em2_score(m, s, 1, a, b));
  std::vector<double> acc(L);
  for (int t = 2; t < T; ++t)
    for (int b = 0; b < L; ++b)
      for (int c = 0; c < L; ++c) {
        double base = m.weights[m.tr_slot(b, c)] + em2_score(m, s, t, b, c);
        for (int a = 0; a < L; ++a)
          acc[a] = lat.alpha[t - 1][a * L + b] + base +
                   m.weights[m.tri_slot(a, b, c)];
        lat.alpha[t][b * L + c] = lat.em[t][c] + logsumexp(acc);
      }
  lat.log_z = logsumexp(lat.alpha[T - 1]);

  for (int t = T - 2; t >= 1; --t)
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b) {
        for (int c = 0; c < L; ++c)
          acc[c] = m.weights[m.tri_slot(a, b, c)] +
                   m.weights[m.tr_slot(b, c)] + em2_score(m, s, t + 1, b, c) +
                   lat.em[t + 1][c] + lat.beta[t + 1][b * L + c];
        lat.beta[t][a * L + b] = logsumexp(acc);
      }
  return lat;
}

}  // namespace

double log_partition(const CrfModel& m, const CompiledSequence& s) {
  if (s.length() == 0) return 0.0;
  if (m.order == 2) return forward_backward2(m, s).log_z;
  return forward_backward1(m, s).log_z;
}

std::vector<std::vector<double>> posterior_marginals(
    const CrfModel& m, const CompiledSequence& s) {
  const int T = static_cast<int>(s.length());
  const int L = m.label_count();
  std::vector<std::vector<double>> p(T, std::vector<double>(L, 0.0));
  if (T == 0) return p;
  if (m.order == 1 || T == 1) {
    Lattice1 lat = forward_backward1(m, s);
    for (int t = 0; t < T; ++t)
      for (int y = 0; y < L; ++y)
        p[t][y] = std::exp(lat.alpha[t][y] + lat.beta[t][y] - lat.log_z);
    return p;
  }
  Lattice2 lat = forward_backward2(m, s);
  for (int t = 1; t < T; ++t)
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b) {
        double pr =
            std::exp(lat.alpha[t][a * L + b] + lat.beta[t][a * L + b] -
                     lat.log_z);
        p[t][b] += pr;
        if (t == 1) p[0][a] += pr;
      }
  return p;
}

namespace {

void accumulate_gradient1(const CrfModel& m, const CompiledSequence& s,
                          std::vector<double>& grad) {
  const int T = static_cast<int>(s.length());
  const int L = m.label_count();
  Lattice1 lat = forward_backward1(m, s);

  for (int t = 0; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      double pr = std::exp(lat.alpha[t][y] + lat.beta[t][y] - lat.log_z);
      for (int o : s.obs[t]) grad[m.em_slot(o, y)] -= pr;
    }
    for (int o : s.obs[t]) grad[m.em_slot(o, s.gold[t])] += 1.0;
  }
  for (int t = 1; t < T; ++t) {
    for (int a = 0; a < L; ++a)
      for (int y = 0; y < L; ++y) {
        double pr = std::exp(lat.alpha[t - 1][a] + m.weights[m.tr_slot(a, y)] +
                             em2_score(m, s, t, a, y) + lat.em[t][y] +
                             lat.beta[t][y] - lat.log_z);
        grad[m.tr_slot(a, y)] -= pr;
        for (int o : s.obs2[t]) grad[m.em2_slot(o, a, y)] -= pr;
      }
    grad[m.tr_slot(s.gold[t - 1], s.gold[t])] += 1.0;
    for (int o : s.obs2[t]) grad[m.em2_slot(o, s.gold[t - 1], s.gold[t])] += 1.0;
  }
}

void accumulate_gradient2(const CrfModel& m, const CompiledSequence& s,
                          std::vector<double>& grad) {
  const int T = static_cast<int>(s.length());
  const int L = m.label_count();
  if (T == 1) {
    accumulate_gradient1(m, s, grad);
    return;
  }
  Lattice2 lat = forward_backward2(m, s);

  // Unary expectations from pair-state marginals.
  std::vector<std::vector<double>> unary(T, std::vector<double>(L, 0.0));
  for (int t = 1; t < T; ++t)
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b) {
        double pr = std::exp(lat.alpha[t][a * L + b] +
                             lat.beta[t][a * L + b] - lat.log_z);
        unary[t][b] += pr;
        if (t == 1) unary[0][a] += pr;
        grad[m.tr_slot(a, b)] -= pr;
        for (int o : s.obs2[t]) grad[m.em2_slot(o, a, b)] -= pr;
      }
  for (int t = 0; t < T; ++t) {
    for (int y = 0; y < L; ++y)
      for (int o : s.obs[t]) grad[m.em_slot(o, y)] -= unary[t][y];
    for (int o : s.obs[t]) grad[m.em_slot(o, s.gold[t])] += 1.0;
  }
  for (int t = 1; t < T; ++t) {
    grad[m.tr_slot(s.gold[t - 1], s.gold[t])] += 1.0;
    for (int o : s.obs2[t]) grad[m.em2_slot(o, s.gold[t - 1], s.gold[t])] += 1.0;
  }

  // Trigram expectations.
  for (int t = 2; t < T; ++t) {
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b)
        for (int c = 0; c < L; ++c) {
          double pr = std::exp(lat.alpha[t - 1][a * L + b] +
                               m.weights[m.tri_slot(a, b, c)] +
                               m.weights[m.tr_slot(b, c)] +
                               em2_score(m, s, t, b, c) + lat.em[t][c] +
                               lat.beta[t][b * L + c] - lat.log_z);
          grad[m.tri_slot(a, b, c)] -= pr;
        }
    grad[m.tri_slot(s.gold[t - 2], s.gold[t - 1], s.gold[t])] += 1.0;
  }
}

}  // namespace

double loglik_and_gradient(const CrfModel& m,
                           const std::vector<CompiledSequence>& data,
                           std::vector<double>& grad) {
  grad.assign(m.weights.size(), 0.0);
  double ll = 0;
  for (const auto& s : data) {
    if (s.length() == 0) continue;
    if (s.gold.size() != s.length())
      throw InconsistentDataset("sequence without gold labels");
    double log_z = (m.order == 2) ? forward_backward2(m, s).log_z
                                  : forward_backward1(m, s).log_z;
    ll += sequence_score(m, s, s.gold) - log_z;
    if (m.order == 2)
      accumulate_gradient2(m, s, grad);
    else
      accumulate_gradient1(m, s, grad);
  }
  if (std::isfinite(m.gaussian_variance)) {
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      ll -= m.weights[i] * m.weights[i] / (2.0 * m.gaussian_variance);
      grad[i] -= m.weights[i] / m.gaussian_variance;
    }
  }
  return ll;
}

std::vector<int> viterbi(const CrfModel& m, const CompiledSequence& s) {
  const int T = static_cast<int>(s.length());
  const int L = m.label_count();
  if (T == 0) return {};
  auto em = emission_table(m, s);

  auto argmax_first = [](const std::vector<double>& v) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(v.size()); ++k)
      if (v[k] > v[best]) best = k;
    return best;
  };

  if (m.order == 1 || T == 1) {
    std::vector<std::vector<double>> delta(T, std::vector<double>(L, 0.0));
    std::vector<std::vector<int>> bp(T, std::vector<int>(L, 0));
    delta[0] = em[0];
    for (int t = 1; t < T; ++t)
      for (int y = 0; y < L; ++y) {
        double best = kNegInf;
        int arg = 0;
        for (int a = 0; a < L; ++a) {
          double v = delta[t - 1][a] + m.weights[m.tr_slot(a, y)] +
                     em2_score(m, s, t, a, y);
          if (v > best) {
            best = v;
            arg = a;
          }
        }
        delta[t][y] = em[t][y] + best;
        bp[t][y] = arg;
      }
    std::vector<int> path(T);
    path[T - 1] = argmax_first(delta[T - 1]);
    for (int t = T - 1; t > 0; --t) path[t - 1] = bp[t][path[t]];
    return path;
  }

  // Pair-state Viterbi for order 2.
  std::vector<std::vector<double>> delta(T,
                                         std::vector<double>(L * L, kNegInf));
  std::vector<std::vector<int>> bp(T, std::vector<int>(L * L, 0));
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b)
      delta[1][a * L + b] = em[1][b] + (em[0][a] + m.weights[m.tr_slot(a, b)] +
                                        em2_score(m, s, 1, a, b));
  for (int t = 2; t < T; ++t)
    for (int b = 0; b < L; ++b)
      for (int c = 0; c < L; ++c) {
        double base = m.weights[m.tr_slot(b, c)] + em2_score(m, s, t, b, c);
        double best = kNegInf;
        int arg = 0;
        for (int a = 0; a < L; ++a) {
          double v = (delta[t - 1][a * L + b] + base) +
                     m.weights[m.tri_slot(a, b, c)];
          if (v > best) {
            best = v;
            arg = a;
          }
        }
        delta[t][b * L + c] = em[t][c] + best;
        bp[t][b * L + c] = arg;
      }
  int state = argmax_first(delta[T - 1]);
  std::vector<int> path(T);
  path[T - 1] = state % L;
  path[T - 2] = state / L;
  for (int t = T - 1; t >= 2; --t) {
    int a = bp[t][path[t - 1] * L + path[t]];
    path[t - 2] = a;
  }
  return path;
}

std::vector<std::string> viterbi_tags(const CrfModel& m,
                                      const CompiledSequence& s) {
  std::vector<int> ids = viterbi(m, s);
  std::vector<std::string> tags;
  tags.reserve(ids.size());
  for (int y : ids) tags.push_back(m.labels[y]);
  return tags;
}

std::vector<std::string> default_label_alphabet(bool include_target) {
  std::vector<std::string> labels = {"O"};
  for (const auto cls : ling::kOpinionClasses) {
    if (!include_target && cls == "target") continue;
    labels.push_back("B-" + std::string(cls));
    labels.push_back("I-" + std::string(cls));
  }
  return labels;
}

CrfModel train(const std::vector<feat::AttributeMatrix>& matrices,
               const std::vector<std::vector<std::string>>& gold,
               const TrainConfig& config,
               const std::vector<FeatureTemplate>* templates,
               const std::string& feature_set) {
  if (matrices.empty() || matrices.size() != gold.size())
    throw InconsistentDataset("matrices and gold tag lists must align");
  if (config.order != 1 && config.order != 2)
    throw Error("crf order must be 1 or 2");

  CrfModel model;
  model.order = config.order;
  model.gaussian_variance = config.gaussian_variance;
  model.seed = config.seed;
  model.feature_set = feature_set;

  // Label alphabet: O first, then the tags observed in the gold data.
  std::set<std::string> seen;
  for (const auto& tags : gold) seen.insert(tags.begin(), tags.end());
  model.labels.push_back("O");
  for (const auto& tag : seen)
    if (tag != "O") model.labels.push_back(tag);

  if (templates) {
    model.templates = *templates;
  } else {
    std::set<std::string> cols;
    for (const auto& m : matrices) cols.insert(m.columns.begin(), m.columns.end());
    model.templates = default_templates(
        std::vector<std::string>(cols.begin(), cols.end()), config.window);
  }

  std::vector<CompiledSequence> data;
  data.reserve(matrices.size());
  for (std::size_t k = 0; k < matrices.size(); ++k)
    data.push_back(compile(matrices[k], model, /*grow=*/true, &gold[k]));
  model.obs.freeze();
  model.obs2.freeze();
  model.resize_weights();

  opt::LbfgsOptions lopts;
  lopts.max_iterations = config.max_iterations;
  lopts.gradient_tolerance = config.gradient_tolerance;

  CrfModel& mref = model;
  auto objective = [&](const std::vector<double>& w,
                       std::vector<double>& g) -> double {
    mref.weights = w;
    double ll = loglik_and_gradient(mref, data, g);
    for (double& x : g) x = -x;
    return -ll;
  };

  opt::LbfgsResult res =
      opt::lbfgs_minimize(std::vector<double>(model.weight_count(), 0.0),
                          objective, lopts);
  model.weights = res.x;
  model.iterations_run = res.iterations;
  model.stop_reason = res.stop_reason;
  return model;
}

// ---- Serialization ----

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::hexfloat << v;
  return os.str();
}

double parse_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (...) {
    throw CorruptFile("bad number: " + s);
  }
}

}  // namespace

void save_model(const CrfModel& m, std::ostream& out) {
  out << "finmwe-crf 1\n";
  out << "order " << m.order << '\n';
  out << "variance " << fmt_double(m.gaussian_variance) << '\n';
  out << "feature_set " << (m.feature_set.empty() ? "-" : m.feature_set)
      << '\n';
  out << "iterations " << m.iterations_run << '\n';
  out << "stop " << (m.stop_reason.empty() ? "-" : m.stop_reason) << '\n';
  out << "seed " << m.seed << '\n';
  out << "labels " << m.labels.size() << '\n';
  for (const auto& l : m.labels) out << l << '\n';
  out << "templates " << m.templates.size() << '\n';
  for (const auto& t : m.templates) out << t.id() << '\n';
  out << "features " << m.weights.size() << '\n';
  for (std::size_t k = 0; k < m.weights.size(); ++k)
    out << m.feature_name(k) << '\t' << fmt_double(m.weights[k]) << '\n';
  out << "end\n";
}

void save_model_file(const CrfModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file: " + path);
  save_model(m, out);
}

CrfModel load_model(std::istream& in) {
  std::string line;
  auto next = [&](const char* what) -> std::string {
    if (!std::getline(in, line))
      throw CorruptFile(std::string("truncated model file at ") + what);
    return line;
  };
  {
    std::istringstream hs(next("header"));
    std::string magic;
    int version = -1;
    hs >> magic >> version;
    if (magic != "finmwe-crf") throw CorruptFile("not a finmwe-crf model");
    if (version != 1)
      throw VersionMismatch("unsupported model version " +
                            std::to_string(version));
  }
  CrfModel m;
  auto kv = [&](const char* key) -> std::string {
    std::istringstream ls(next(key));
    std::string k, v;
    ls >> k;
    std::getline(ls, v);
    if (k != key) throw CorruptFile(std::string("expected ") + key);
    if (!v.empty() && v[0] == ' ') v.erase(0, 1);
    return v;
  };
  m.order = std::stoi(kv("order"));
  m.gaussian_variance = parse_double(kv("variance"));
  m.feature_set = kv("feature_set");
  if (m.feature_set == "-") m.feature_set.clear();
  m.iterations_run = std::stoi(kv("iterations"));
  m.stop_reason = kv("stop");
  if (m.stop_reason == "-") m.stop_reason.clear();
  m.seed = std::stoull(kv("seed"));
  int n_labels = std::stoi(kv("labels"));
  for (int k = 0; k < n_labels; ++k) m.labels.push_back(next("label"));
  int n_templates = std::stoi(kv("templates"));
  for (int k = 0; k < n_templates; ++k)
    m.templates.push_back(FeatureTemplate::parse(next("template")));

  long n_features = std::stol(kv("features"));
  struct Pending {
    int kind;  // 0 E, 1 E2, 2 T, 3 T3
    std::string obs;
    int y0 = -1, y1 = -1, y2 = -1;
    double w = 0;
  };
  std::vector<Pending> pending;
  pending.reserve(static_cast<std::size_t>(n_features));
  auto label_id = [&](const std::string& name) {
    int y = m.label_index(name);
    if (y < 0) throw CorruptFile("unknown label in feature: " + name);
    return y;
  };
  for (long k = 0; k < n_features; ++k) {
    std::string l = next("feature");
    std::size_t tab = l.rfind('\t');
    if (tab == std::string::npos) throw CorruptFile("feature without weight");
    Pending p;
    p.w = parse_double(l.substr(tab + 1));
    std::string name = l.substr(0, tab);
    if (name.rfind("E2|", 0) == 0) {
      std::size_t y1p = name.rfind("|y1=");
      std::size_t y0p = name.rfind("|y0=", y1p - 1);
      if (y0p == std::string::npos || y1p == std::string::npos)
        throw CorruptFile("bad E2 feature: " + name);
      p.kind = 1;
      p.obs = name.substr(3, y0p - 3);
      p.y0 = label_id(name.substr(y0p + 4, y1p - (y0p + 4)));
      p.y1 = label_id(name.substr(y1p + 4));
    } else if (name.rfind("E|", 0) == 0) {
      std::size_t yp = name.rfind("|y=");
      if (yp == std::string::npos) throw CorruptFile("bad E feature: " + name);
      p.kind = 0;
      p.obs = name.substr(2, yp - 2);
      p.y0 = label_id(name.substr(yp + 3));
    } else if (name.rfind("T3|", 0) == 0) {
      std::size_t s1 = name.find('|', 3), s2 = name.find('|', s1 + 1);
      if (s1 == std::string::npos || s2 == std::string::npos)
        throw CorruptFile("bad T3 feature: " + name);
      p.kind = 3;
      p.y0 = label_id(name.substr(3, s1 - 3));
      p.y1 = label_id(name.substr(s1 + 1, s2 - s1 - 1));
      p.y2 = label_id(name.substr(s2 + 1));
    } else if (name.rfind("T|", 0) == 0) {
      std::size_t s1 = name.find('|', 2);
      if (s1 == std::string::npos) throw CorruptFile("bad T feature: " + name);
      p.kind = 2;
      p.y0 = label_id(name.substr(2, s1 - 2));
      p.y1 = label_id(name.substr(s1 + 1));
    } else {
      throw CorruptFile("unknown feature kind: " + name);
    }
    if (p.kind == 0) m.obs.intern(p.obs);
    if (p.kind == 1) m.obs2.intern(p.obs);
    pending.push_back(std::move(p));
  }
  if (next("end") != "end") throw CorruptFile("missing end marker");

  m.obs.freeze();
  m.obs2.freeze();
  m.resize_weights();
  if (m.weights.size() != static_cast<std::size_t>(n_features))
    throw CorruptFile("feature count does not match layout");
  for (const auto& p : pending) {
    switch (p.kind) {
      case 0:
        m.weights[m.em_slot(m.obs.find(p.obs), p.y0)] = p.w;
        break;
      case 1:
        m.weights[m.em2_slot(m.obs2.find(p.obs), p.y0, p.y1)] = p.w;
        break;
      case 2:
        m.weights[m.tr_slot(p.y0, p.y1)] = p.w;
        break;
      default:
        if (m.order != 2) throw CorruptFile("trigram feature in order-1 model");
        m.weights[m.tri_slot(p.y0, p.y1, p.y2)] = p.w;
    }
  }
  return m;
}

CrfModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace finmwe::crf
