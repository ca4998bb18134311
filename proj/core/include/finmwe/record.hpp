#ifndef FINMWE_RECORD_HPP
#define FINMWE_RECORD_HPP

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finmwe/errors.hpp"

namespace finmwe::ling {

FINMWE_DEFINE_ERROR(LengthMismatch);
FINMWE_DEFINE_ERROR(MalformedTree);
FINMWE_DEFINE_ERROR(MalformedLabel);
FINMWE_DEFINE_ERROR(MalformedRecord);
FINMWE_DEFINE_ERROR(OverlappingSpans);

/// The five opinion classes used for IOB labels.
inline constexpr std::array<std::string_view, 5> kOpinionClasses = {
    "agent", "direct-subjective", "expressive-subjectivity",
    "objective-speech-event", "target"};

bool is_opinion_class(std::string_view cls);

/// One dependency arc: head token -> dependent token with a relation name.
struct DepArc {
  int head = -1;
  int dep = -1;
  std::string rel;

  bool operator==(const DepArc&) const = default;
};

/// One semantic-role frame: predicate token, voice, labeled argument spans.
struct SrlArg {
  int start = 0;
  int end = 0;  // exclusive
  std::string role;

  bool operator==(const SrlArg&) const = default;
};

struct SrlFrame {
  int predicate = -1;
  std::string voice;  // "active" | "passive"
  std::vector<SrlArg> args;

  bool operator==(const SrlFrame&) const = default;
};

/// One sentence with all annotation layers. Per-token layers, when present,
/// have exactly tokens.size() entries; the parse, when present, has one leaf
/// per token. Immutable by convention once parsed.
struct SentenceRecord {
  std::vector<std::string> tokens;
  std::optional<std::vector<std::string>> lemmas;
  std::optional<std::vector<std::string>> pos;
  std::optional<std::vector<std::string>> chunks;  // IOB chunk tags
  std::optional<std::vector<std::string>> ner;
  std::optional<std::string> parse;  // bracketed Penn-style tree
  std::optional<std::vector<DepArc>> deps;
  std::optional<std::vector<SrlFrame>> srl;
  std::optional<std::vector<std::optional<std::string>>> verb_cluster;
  std::optional<std::vector<std::optional<std::string>>> frame;
  std::optional<std::vector<std::string>> labels;  // IOB opinion tags
  std::optional<std::string> doc_id;

  std::size_t size() const { return tokens.size(); }

  bool operator==(const SentenceRecord&) const = default;
};

/// A contiguous labeled span, end exclusive.
struct LabelSpan {
  std::string cls;
  int start = 0;
  int end = 0;

  bool operator==(const LabelSpan&) const = default;
  auto operator<=>(const LabelSpan&) const = default;
};

/// Parses one JSON-Lines record. Validates layer lengths, tag shapes and the
/// parse leaf count; repairs orphan I-X tags to B-X in IOB layers.
SentenceRecord parse_record(const std::string& line);

/// Inverse of parse_record. parse_record(serialize_record(r)) == r for all
/// valid records.
std::string serialize_record(const SentenceRecord& rec);

std::vector<SentenceRecord> read_records(std::istream& in);
std::vector<SentenceRecord> read_records_file(const std::string& path);
void write_records(std::ostream& out, const std::vector<SentenceRecord>& recs);
void write_records_file(const std::string& path,
                        const std::vector<SentenceRecord>& recs);

/// Decodes an IOB tag sequence into maximal spans. Orphan I-X (no preceding
/// B-X/I-X of the same class) is treated as B-X.
std::vector<LabelSpan> iob_spans(const std::vector<std::string>& tags);

/// Encodes spans back to IOB tags. Throws OverlappingSpans.
std::vector<std::string> spans_to_iob(const std::vector<LabelSpan>& spans,
                                      int length);

/// Splits an IOB tag into (marker, class); marker is 'B', 'I' or 'O'.
std::pair<char, std::string> split_iob_tag(std::string_view tag);

}  // namespace finmwe::ling

#endif
