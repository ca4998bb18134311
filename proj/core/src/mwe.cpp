#include "finmwe/mwe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "finmwe/textprep.hpp"
#include "finmwe/tree.hpp"

namespace finmwe::mwe {

namespace {

// Normalized entity class of one NER tag, after stripping B-/I- markers.
std::optional<std::string> entity_class(std::string_view tag) {
  std::string_view t = tag;
  if (t.size() > 2 && (t[0] == 'B' || t[0] == 'I') && t[1] == '-')
    t.remove_prefix(2);
  if (t == "PERSON" || t == "PER") return "PERSON";
  if (t == "ORGANIZATION" || t == "ORG") return "ORG";
  if (t == "LOCATION" || t == "LOC") return "LOC";
  return std::nullopt;
}

template <typename T>
std::vector<T> collapse_layer(const std::vector<T>& layer, int start, int end) {
  std::vector<T> out;
  out.reserve(layer.size() - (end - start) + 1);
  for (int i = 0; i < static_cast<int>(layer.size()); ++i)
    if (i <= start || i >= end) out.push_back(layer[i]);
  return out;
}

int remap_index(int i, int start, int end) {
  if (i < end && i > start) return start;
  return i >= end ? i - (end - start - 1) : i;
}

ling::SentenceRecord collapse_span(const ling::SentenceRecord& rec, int start,
                                   int end, const std::string& placeholder) {
  ling::SentenceRecord out;
  out.doc_id = rec.doc_id;
  out.tokens = collapse_layer(rec.tokens, start, end);
  out.tokens[start] = placeholder;
  if (rec.lemmas) {
    out.lemmas = collapse_layer(*rec.lemmas, start, end);
    (*out.lemmas)[start] = placeholder;
  }
  if (rec.pos) out.pos = collapse_layer(*rec.pos, start, end);
  if (rec.chunks) out.chunks = collapse_layer(*rec.chunks, start, end);
  if (rec.ner) {
    out.ner = collapse_layer(*rec.ner, start, end);
    (*out.ner)[start] = placeholder;
  }
  if (rec.labels) out.labels = collapse_layer(*rec.labels, start, end);
  if (rec.verb_cluster)
    out.verb_cluster = collapse_layer(*rec.verb_cluster, start, end);
  if (rec.frame) out.frame = collapse_layer(*rec.frame, start, end);

  if (rec.deps) {
    std::vector<ling::DepArc> deps;
    for (const auto& a : *rec.deps) {
      ling::DepArc na{remap_index(a.head, start, end),
                      remap_index(a.dep, start, end), a.rel};
      if (na.head == na.dep) continue;  // arc collapsed into the placeholder
      deps.push_back(std::move(na));
    }
    out.deps = std::move(deps);
  }
  if (rec.srl) {
    std::vector<ling::SrlFrame> frames;
    for (const auto& f : *rec.srl) {
      ling::SrlFrame nf;
      nf.predicate = remap_index(f.predicate, start, end);
      nf.voice = f.voice;
      for (const auto& arg : f.args) {
        int s = remap_index(arg.start, start, end);
        int e = remap_index(arg.end - 1, start, end) + 1;
        if (s < e) nf.args.push_back({s, e, arg.role});
      }
      frames.push_back(std::move(nf));
    }
    out.srl = std::move(frames);
  }
  if (rec.parse) {
    auto tree = feat::ConstituencyTree::parse(*rec.parse);
    out.parse = tree.collapse_leaves(start, end, placeholder).to_bracketed();
  }
  return out;
}

}  // namespace

ling::SentenceRecord mask_entities(const ling::SentenceRecord& rec) {
  if (!rec.ner) throw MissingNerLayer("mask_entities requires a ner layer");
  ling::SentenceRecord cur = rec;
  for (;;) {
    const auto& ner = *cur.ner;
    int start = -1, end = -1;
    std::string placeholder;
    for (int i = 0; i < static_cast<int>(ner.size()); ++i) {
      auto cls = entity_class(ner[i]);
      if (!cls) continue;
      if (*cls == ner[i] && ner[i] == cur.tokens[i]) continue;  // already masked
      int j = i + 1;
      while (j < static_cast<int>(ner.size())) {
        auto c2 = entity_class(ner[j]);
        if (!c2 || *c2 != *cls) break;
        if (ner[j].size() > 2 && ner[j][0] == 'B') break;  // new entity
        ++j;
      }
      start = i;
      end = j;
      placeholder = *cls;
      break;
    }
    if (start < 0) return cur;
    cur = collapse_span(cur, start, end, placeholder);
    // The placeholder token now equals its NER tag, so the scan above skips
    // it on the next pass.
  }
}

std::string canonical_text(const ling::SentenceRecord& rec, int start,
                           int end) {
  std::string out;
  for (int i = start; i < end; ++i) {
    if (i > start) out += ' ';
    const std::string& form =
        rec.lemmas && !(*rec.lemmas)[i].empty() ? (*rec.lemmas)[i]
                                                : rec.tokens[i];
    out += textprep::lowercase(form);
  }
  return out;
}

std::vector<MweEntry> harvest(const std::vector<ling::SentenceRecord>& records,
                              const std::optional<std::string>& class_filter) {
  std::map<std::pair<std::string, std::string>, MweEntry> table;
  for (const auto& rec : records) {
    if (!rec.labels) continue;
    std::string doc = rec.doc_id.value_or("");
    for (const auto& span : ling::iob_spans(*rec.labels)) {
      if (class_filter && span.cls != *class_filter) continue;
      std::string text = canonical_text(rec, span.start, span.end);
      auto& e = table[{span.cls, text}];
      e.cls = span.cls;
      e.text = text;
      ++e.total_freq;
      ++e.per_doc[doc];
    }
  }
  std::vector<MweEntry> out;
  out.reserve(table.size());
  for (auto& [key, e] : table) {
    e.doc_freq = static_cast<long>(e.per_doc.size());
    out.push_back(std::move(e));
  }
  return out;
}

double mwef_idf(double f_ij, long n_i, long N, const MwefIdfConfig& cfg) {
  if (f_ij == 0.0) return 0.0;
  if (f_ij < 0.0) throw DomainError("negative frequency");
  if (n_i <= 0) throw DomainError("n_i must be >= 1 when f_ij > 0");
  if (n_i > N) throw DomainError("n_i exceeds document count");
  double idf_arg = cfg.idf_boost_l * f_ij * static_cast<double>(N) /
                   static_cast<double>(n_i);
  return (f_ij / cfg.tf_scale_q) * std::log(std::max(1.0, idf_arg));
}

namespace {

bool contains_subsequence(const std::vector<std::string>& haystack,
                          const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size(); ++k)
      if (haystack[i + k] != needle[k]) {
        ok = false;
        break;
      }
    if (ok) return true;
  }
  return false;
}

}  // namespace

std::pair<long, long> cooccurrence(
    const std::vector<ling::SentenceRecord>& records,
    const std::vector<std::string>& agent_terms, const std::string& mwe_text) {
  std::vector<std::string> needle;
  for (const auto& t : textprep::tokenize(mwe_text))
    needle.push_back(textprep::lowercase(t));
  std::vector<std::string> terms;
  for (const auto& t : agent_terms) terms.push_back(textprep::lowercase(t));

  long total = 0;
  std::set<std::string> docs;
  for (const auto& rec : records) {
    if (!rec.labels) continue;
    bool agent_hit = false;
    for (const auto& span : ling::iob_spans(*rec.labels)) {
      if (span.cls != "agent") continue;
      std::string text = canonical_text(rec, span.start, span.end);
      if (std::find(terms.begin(), terms.end(), text) != terms.end()) {
        agent_hit = true;
        break;
      }
    }
    if (!agent_hit) continue;
    std::vector<std::string> canon;
    canon.reserve(rec.size());
    for (int i = 0; i < static_cast<int>(rec.size()); ++i)
      canon.push_back(canonical_text(rec, i, i + 1));
    if (!contains_subsequence(canon, needle)) continue;
    ++total;
    docs.insert(rec.doc_id.value_or(""));
  }
  return {total, static_cast<long>(docs.size())};
}

void sort_by_frequency(std::vector<MweEntry>& entries) {
  std::sort(entries.begin(), entries.end(),
            [](const MweEntry& a, const MweEntry& b) {
              if (a.total_freq != b.total_freq)
                return a.total_freq > b.total_freq;
              if (a.cls != b.cls) return a.cls < b.cls;
              return a.text < b.text;
            });
}

}  // namespace finmwe::mwe
