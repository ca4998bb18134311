#include "finmwe/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>

namespace finmwe::eval {

double token_accuracy(const std::vector<std::string>& gold,
                      const std::vector<std::string>& predicted) {
  if (gold.size() != predicted.size())
    throw ling::LengthMismatch("gold and predicted tag counts differ");
  if (gold.empty()) return 0.0;
  long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i] == predicted[i]) ++correct;
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(gold.size());
}

double f_measure(double p, double r, double alpha) {
  if (p + r == 0.0) return 0.0;
  return (1.0 + alpha) * p * r / (alpha * p + r);
}

namespace {

// Spans including maximal O-runs as class "Other".
std::vector<ling::LabelSpan> spans_with_other(
    const std::vector<std::string>& tags) {
  auto spans = ling::iob_spans(tags);
  int i = 0;
  const int n = static_cast<int>(tags.size());
  while (i < n) {
    if (tags[i] == "O") {
      int j = i;
      while (j < n && tags[j] == "O") ++j;
      spans.push_back({"Other", i, j});
      i = j;
    } else {
      ++i;
    }
  }
  return spans;
}

void finish(ClassScore& s) {
  s.p = s.predicted == 0
            ? 0.0
            : 100.0 * static_cast<double>(s.correct) / s.predicted;
  s.r = s.gold == 0 ? 0.0 : 100.0 * static_cast<double>(s.correct) / s.gold;
  s.f = f_measure(s.p, s.r, 1.0);
}

}  // namespace

EvalReport phrase_prf(const std::vector<std::vector<std::string>>& gold,
                      const std::vector<std::vector<std::string>>& predicted) {
  if (gold.size() != predicted.size())
    throw ling::LengthMismatch("gold and predicted record counts differ");

  std::map<std::string, ClassScore> by_class;
  for (const auto cls : ling::kOpinionClasses)
    by_class[std::string(cls)].cls = std::string(cls);
  by_class["Other"].cls = "Other";

  EvalReport rep;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].size() != predicted[k].size())
      throw ling::LengthMismatch("record " + std::to_string(k) +
                                 ": tag counts differ");
    rep.tokens += static_cast<long>(gold[k].size());
    for (std::size_t i = 0; i < gold[k].size(); ++i)
      if (gold[k][i] == predicted[k][i]) ++rep.tokens_correct;

    auto gs = spans_with_other(gold[k]);
    auto ps = spans_with_other(predicted[k]);
    std::sort(gs.begin(), gs.end());
    std::sort(ps.begin(), ps.end());
    for (const auto& s : gs) ++by_class[s.cls].gold;
    for (const auto& s : ps) ++by_class[s.cls].predicted;
    std::vector<ling::LabelSpan> hit;
    std::set_intersection(gs.begin(), gs.end(), ps.begin(), ps.end(),
                          std::back_inserter(hit));
    for (const auto& s : hit) ++by_class[s.cls].correct;
  }

  rep.micro.cls = "Average(micro)";
  rep.macro.cls = "Average(macro)";
  int n_classes = 0;
  for (auto& [cls, score] : by_class) {
    finish(score);
    rep.micro.gold += score.gold;
    rep.micro.predicted += score.predicted;
    rep.micro.correct += score.correct;
    rep.macro.p += score.p;
    rep.macro.r += score.r;
    ++n_classes;
  }
  finish(rep.micro);
  rep.macro.p /= n_classes;
  rep.macro.r /= n_classes;
  rep.macro.f = f_measure(rep.macro.p, rep.macro.r, 1.0);
  rep.token_accuracy =
      rep.tokens == 0
          ? 0.0
          : 100.0 * static_cast<double>(rep.tokens_correct) / rep.tokens;

  // Stable row order: the five classes, then Other.
  for (const auto cls : ling::kOpinionClasses)
    rep.per_class.push_back(by_class[std::string(cls)]);
  rep.per_class.push_back(by_class["Other"]);
  return rep;
}

std::vector<ling::SentenceRecord> select_explicit(
    const std::vector<ling::SentenceRecord>& records) {
  std::vector<ling::SentenceRecord> out;
  for (const auto& r : records) {
    if (!r.labels) continue;
    bool agent = false, direct = false, expressive_or_obj = false;
    for (const auto& s : ling::iob_spans(*r.labels)) {
      if (s.cls == "agent") agent = true;
      if (s.cls == "direct-subjective") direct = true;
      if (s.cls == "expressive-subjectivity" ||
          s.cls == "objective-speech-event")
        expressive_or_obj = true;
    }
    if (agent && direct && expressive_or_obj) out.push_back(r);
  }
  return out;
}

std::vector<std::string> drop_target_tags(
    const std::vector<std::string>& tags) {
  std::vector<std::string> out = tags;
  for (auto& t : out)
    if (t == "B-target" || t == "I-target") t = "O";
  return out;
}

std::vector<ling::SentenceRecord> drop_target(
    const std::vector<ling::SentenceRecord>& records) {
  std::vector<ling::SentenceRecord> out = records;
  for (auto& r : out)
    if (r.labels) r.labels = drop_target_tags(*r.labels);
  return out;
}

std::pair<std::size_t, std::size_t> split_sizes(std::size_t n,
                                                double train_fraction) {
  auto train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * train_fraction));
  return {train, n - train};
}

std::pair<std::vector<ling::SentenceRecord>, std::vector<ling::SentenceRecord>>
split_heldout(const std::vector<ling::SentenceRecord>& records,
              double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("train_fraction must be in (0,1)");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the permutation is stable across
  // standard-library implementations.
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng() % i]);

  auto [n_train, n_test] = split_sizes(records.size(), train_fraction);
  std::pair<std::vector<ling::SentenceRecord>, std::vector<ling::SentenceRecord>>
      out;
  out.first.reserve(n_train);
  out.second.reserve(n_test);
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? out.first : out.second).push_back(records[order[i]]);
  return out;
}

void write_report(std::ostream& out, const EvalReport& rep) {
  out << "class\tp\tr\tF\tgold\tpredicted\tcorrect\n";
  char buf[160];
  auto row = [&](const ClassScore& s) {
    std::snprintf(buf, sizeof(buf), "%s\t%.2f\t%.2f\t%.2f\t%ld\t%ld\t%ld\n",
                  s.cls.c_str(), s.p, s.r, s.f, s.gold, s.predicted,
                  s.correct);
    out << buf;
  };
  for (const auto& s : rep.per_class) row(s);
  row(rep.micro);
  row(rep.macro);
  std::snprintf(buf, sizeof(buf), "token_accuracy\t%.2f\t(%ld/%ld)\n",
                rep.token_accuracy, rep.tokens_correct, rep.tokens);
  out << buf;
}

}  // namespace finmwe::eval
