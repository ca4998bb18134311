#include "finmwe/record.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "finmwe/tree.hpp"

namespace finmwe::ling {

using nlohmann::json;

bool is_opinion_class(std::string_view cls) {
  return std::find(kOpinionClasses.begin(), kOpinionClasses.end(), cls) !=
         kOpinionClasses.end();
}

std::pair<char, std::string> split_iob_tag(std::string_view tag) {
  if (tag == "O") return {'O', ""};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-')
    return {tag[0], std::string(tag.substr(2))};
  throw MalformedLabel("bad IOB tag: " + std::string(tag));
}

std::vector<LabelSpan> iob_spans(const std::vector<std::string>& tags) {
  std::vector<LabelSpan> spans;
  std::string open_cls;
  int open_start = -1;
  auto close = [&](int end) {
    if (open_start >= 0) spans.push_back({open_cls, open_start, end});
    open_start = -1;
  };
  for (int i = 0; i < static_cast<int>(tags.size()); ++i) {
    auto [m, cls] = split_iob_tag(tags[i]);
    if (m == 'O') {
      close(i);
    } else if (m == 'B' || open_start < 0 || cls != open_cls) {
      // B opens; orphan I (or class switch) is repaired to B.
      close(i);
      open_cls = cls;
      open_start = i;
    }
  }
  close(static_cast<int>(tags.size()));
  return spans;
}

std::vector<std::string> spans_to_iob(const std::vector<LabelSpan>& spans,
                                      int length) {
  std::vector<std::string> tags(length, "O");
  std::vector<bool> used(length, false);
  for (const auto& s : spans) {
    if (s.start < 0 || s.end > length || s.start >= s.end)
      throw OverlappingSpans("span out of range");
    for (int i = s.start; i < s.end; ++i) {
      if (used[i]) throw OverlappingSpans("spans overlap at token " +
                                          std::to_string(i));
      used[i] = true;
      tags[i] = (i == s.start ? "B-" : "I-") + s.cls;
    }
  }
  return tags;
}

namespace {

std::vector<std::string> string_layer(const json& j, const char* key,
                                      std::size_t n) {
  const json& a = j.at(key);
  if (!a.is_array()) throw MalformedRecord(std::string(key) + " not an array");
  if (a.size() != n)
    throw LengthMismatch(std::string(key) + " has " +
                         std::to_string(a.size()) + " entries for " +
                         std::to_string(n) + " tokens");
  std::vector<std::string> out;
  out.reserve(a.size());
  for (const auto& v : a) out.push_back(v.get<std::string>());
  return out;
}

std::vector<std::optional<std::string>> sparse_layer(const json& j,
                                                     const char* key,
                                                     std::size_t n) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != n)
    throw LengthMismatch(std::string(key) + " misaligned");
  std::vector<std::optional<std::string>> out;
  out.reserve(a.size());
  for (const auto& v : a) {
    if (v.is_null())
      out.push_back(std::nullopt);
    else
      out.push_back(v.get<std::string>());
  }
  return out;
}

// Validates IOB shape and repairs orphan I-X to B-X in place.
void repair_iob(std::vector<std::string>& tags, bool restrict_classes) {
  std::string prev_cls;
  for (auto& t : tags) {
    auto [m, cls] = split_iob_tag(t);
    if (m == 'O') {
      prev_cls.clear();
      continue;
    }
    if (restrict_classes && !is_opinion_class(cls))
      throw MalformedLabel("unknown opinion class: " + cls);
    if (m == 'I' && cls != prev_cls) t[0] = 'B';
    prev_cls = cls;
  }
}

}  // namespace

SentenceRecord parse_record(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw MalformedRecord(std::string("bad JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("tokens"))
    throw MalformedRecord("record must be an object with \"tokens\"");

  SentenceRecord r;
  for (const auto& v : j.at("tokens")) r.tokens.push_back(v.get<std::string>());
  const std::size_t n = r.tokens.size();

  if (j.contains("lemmas")) r.lemmas = string_layer(j, "lemmas", n);
  if (j.contains("pos")) r.pos = string_layer(j, "pos", n);
  if (j.contains("chunks")) {
    r.chunks = string_layer(j, "chunks", n);
    repair_iob(*r.chunks, /*restrict_classes=*/false);
  }
  if (j.contains("ner")) r.ner = string_layer(j, "ner", n);
  if (j.contains("labels")) {
    r.labels = string_layer(j, "labels", n);
    repair_iob(*r.labels, /*restrict_classes=*/true);
  }
  if (j.contains("verb_cluster")) r.verb_cluster = sparse_layer(j, "verb_cluster", n);
  if (j.contains("frame")) r.frame = sparse_layer(j, "frame", n);
  if (j.contains("doc_id")) r.doc_id = j.at("doc_id").get<std::string>();

  if (j.contains("parse")) {
    r.parse = j.at("parse").get<std::string>();
    auto tree = feat::ConstituencyTree::parse(*r.parse);
    if (tree.leaf_count() != static_cast<int>(n))
      throw LengthMismatch("parse has " + std::to_string(tree.leaf_count()) +
                           " leaves for " + std::to_string(n) + " tokens");
  }
  if (j.contains("deps")) {
    std::vector<DepArc> deps;
    for (const auto& d : j.at("deps")) {
      if (!d.is_array() || d.size() != 3)
        throw MalformedRecord("dep arc must be [head, dep, rel]");
      DepArc a{d[0].get<int>(), d[1].get<int>(), d[2].get<std::string>()};
      if (a.head < 0 || a.head >= static_cast<int>(n) || a.dep < 0 ||
          a.dep >= static_cast<int>(n))
        throw MalformedRecord("dep arc index out of range");
      deps.push_back(std::move(a));
    }
    r.deps = std::move(deps);
  }
  if (j.contains("srl")) {
    std::vector<SrlFrame> frames;
    for (const auto& f : j.at("srl")) {
      SrlFrame fr;
      fr.predicate = f.at("predicate").get<int>();
      fr.voice = f.value("voice", "active");
      if (fr.predicate < 0 || fr.predicate >= static_cast<int>(n))
        throw MalformedRecord("srl predicate out of range");
      if (f.contains("args"))
        for (const auto& a : f.at("args")) {
          SrlArg arg{a.at(0).get<int>(), a.at(1).get<int>(),
                     a.at(2).get<std::string>()};
          if (arg.start < 0 || arg.end > static_cast<int>(n) ||
              arg.start >= arg.end)
            throw MalformedRecord("srl argument span out of range");
          fr.args.push_back(std::move(arg));
        }
      frames.push_back(std::move(fr));
    }
    r.srl = std::move(frames);
  }
  return r;
}

std::string serialize_record(const SentenceRecord& r) {
  json j;
  j["tokens"] = r.tokens;
  if (r.lemmas) j["lemmas"] = *r.lemmas;
  if (r.pos) j["pos"] = *r.pos;
  if (r.chunks) j["chunks"] = *r.chunks;
  if (r.ner) j["ner"] = *r.ner;
  if (r.parse) j["parse"] = *r.parse;
  if (r.deps) {
    json arr = json::array();
    for (const auto& d : *r.deps) arr.push_back({d.head, d.dep, d.rel});
    j["deps"] = std::move(arr);
  }
  if (r.srl) {
    json arr = json::array();
    for (const auto& f : *r.srl) {
      json jf{{"predicate", f.predicate}, {"voice", f.voice}};
      json args = json::array();
      for (const auto& a : f.args) args.push_back({a.start, a.end, a.role});
      jf["args"] = std::move(args);
      arr.push_back(std::move(jf));
    }
    j["srl"] = std::move(arr);
  }
  auto sparse = [](const std::vector<std::optional<std::string>>& v) {
    json arr = json::array();
    for (const auto& e : v)
      if (e)
        arr.push_back(*e);
      else
        arr.push_back(nullptr);
    return arr;
  };
  if (r.verb_cluster) j["verb_cluster"] = sparse(*r.verb_cluster);
  if (r.frame) j["frame"] = sparse(*r.frame);
  if (r.labels) j["labels"] = *r.labels;
  if (r.doc_id) j["doc_id"] = *r.doc_id;
  return j.dump();
}

std::vector<SentenceRecord> read_records(std::istream& in) {
  std::vector<SentenceRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_record(line));
  }
  return out;
}

std::vector<SentenceRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open record file: " + path);
  return read_records(in);
}

void write_records(std::ostream& out, const std::vector<SentenceRecord>& recs) {
  for (const auto& r : recs) out << serialize_record(r) << '\n';
}

void write_records_file(const std::string& path,
                        const std::vector<SentenceRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write record file: " + path);
  write_records(out, recs);
}

}  // namespace finmwe::ling
