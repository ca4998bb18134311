#include "finmwe/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace finmwe::textprep {

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)); }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)); }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)); }

char to_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

// Tag name, lowercased, starting at s[i] == '<'. Empty if not a tag opener.
std::string tag_name(std::string_view s, std::size_t i) {
  ++i;
  if (i < s.size() && s[i] == '/') ++i;
  std::string name;
  while (i < s.size() && (is_alnum(s[i]) || s[i] == '!')) {
    name += to_lower(s[i]);
    ++i;
  }
  return name;
}

bool looks_like_tag(std::string_view s, std::size_t i) {
  if (i + 1 >= s.size()) return false;
  char c = s[i + 1];
  return is_alpha(c) || c == '/' || c == '!' || c == '?';
}

const std::set<std::string> kBlockTags = {
    "p",  "div", "br",  "tr",    "li", "ul", "ol", "h1", "h2",    "h3",
    "h4", "h5",  "h6",  "table", "hr", "dt", "dd", "dl", "title", "body",
    "td", "th",  "pre", "blockquote"};

// Containers whose entire content is dropped.
const std::set<std::string> kDropTags = {"script", "style", "table", "head"};

void decode_entity(std::string_view s, std::size_t& i, std::string& out) {
  // s[i] == '&'. Decode a small set of named and numeric entities; anything
  // unrecognized is copied through verbatim.
  static const std::map<std::string, std::string> kNamed = {
      {"amp", "&"},  {"lt", "<"},    {"gt", ">"},    {"quot", "\""},
      {"apos", "'"}, {"nbsp", " "},  {"ndash", "-"}, {"mdash", "-"},
      {"sect", ""},  {"rsquo", "'"}, {"lsquo", "'"}, {"ldquo", "\""},
      {"rdquo", "\""}};
  std::size_t semi = s.find(';', i + 1);
  if (semi == std::string_view::npos || semi - i > 10) {
    out += s[i++];
    return;
  }
  std::string body(s.substr(i + 1, semi - i - 1));
  if (!body.empty() && body[0] == '#') {
    long code = 0;
    try {
      code = (body.size() > 1 && (body[1] == 'x' || body[1] == 'X'))
                 ? std::stol(body.substr(2), nullptr, 16)
                 : std::stol(body.substr(1));
    } catch (...) {
      out += s[i++];
      return;
    }
    if (code == 160)
      out += ' ';
    else if (code >= 32 && code < 127)
      out += static_cast<char>(code);
    i = semi + 1;
    return;
  }
  auto it = kNamed.find(body);
  if (it == kNamed.end()) {
    out += s[i++];
    return;
  }
  out += it->second;
  i = semi + 1;
}

}  // namespace

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string strip_markup(std::string_view html) {
  std::string text;
  text.reserve(html.size());
  std::size_t i = 0;
  std::vector<std::string> drop_stack;

  while (i < html.size()) {
    char c = html[i];
    if (c == '<' && looks_like_tag(html, i)) {
      if (html.compare(i, 4, "<!--") == 0) {
        std::size_t end = html.find("-->", i + 4);
        i = (end == std::string_view::npos) ? html.size() : end + 3;
        continue;
      }
      std::string name = tag_name(html, i);
      bool closing = i + 1 < html.size() && html[i + 1] == '/';
      std::size_t gt = html.find('>', i);
      i = (gt == std::string_view::npos) ? html.size() : gt + 1;
      if (kDropTags.count(name)) {
        if (closing) {
          if (!drop_stack.empty() && drop_stack.back() == name)
            drop_stack.pop_back();
        } else {
          drop_stack.push_back(name);
        }
        if (drop_stack.empty()) text += '\n';
        continue;
      }
      if (drop_stack.empty() && kBlockTags.count(name)) text += '\n';
      continue;
    }
    if (!drop_stack.empty()) {
      ++i;
      continue;
    }
    if (c == '&') {
      decode_entity(html, i, text);
      continue;
    }
    text += c;
    ++i;
  }

  // Normalize: collapse horizontal whitespace, trim lines, drop blank lines.
  std::string out;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::string norm;
    bool pending_space = false;
    for (char ch : line) {
      if (is_space(ch)) {
        pending_space = !norm.empty();
      } else {
        if (pending_space) norm += ' ';
        pending_space = false;
        norm += ch;
      }
    }
    if (!norm.empty()) {
      out += norm;
      out += '\n';
    }
  }
  if (!out.empty()) out.pop_back();
  if (out.empty()) throw EmptyDocument("no text content after markup removal");
  return out;
}

std::vector<std::string> clean_lines(std::string_view text,
                                     const CleanConfig& cfg) {
  std::vector<std::string> kept;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    if (line.empty()) continue;
    long alpha = std::count_if(line.begin(), line.end(), is_alpha);
    double ratio =
        1.0 - static_cast<double>(alpha) / static_cast<double>(line.size());
    if (alpha < cfg.min_alpha) continue;
    if (ratio > cfg.max_nonalpha_ratio) continue;
    kept.emplace_back(line);
  }
  return kept;
}

const std::set<std::string>& default_abbreviations() {
  static const std::set<std::string> abbrevs = {
      "inc",  "corp", "co",   "ltd",  "llc",  "l.p",  "mr",   "mrs",  "ms",
      "dr",   "prof", "sr",   "jr",   "st",   "vs",   "etc",  "e.g",  "i.e",
      "u.s",  "u.k",  "no",   "nos",  "fig",  "figs", "sec",  "approx",
      "dept", "est",  "jan",  "feb",  "mar",  "apr",  "jun",  "jul",  "aug",
      "sep",  "sept", "oct",  "nov",  "dec",  "vol",  "rev",  "gen",  "col",
      "univ", "assn", "bros", "ph.d", "a.m",  "p.m"};
  return abbrevs;
}

namespace {

// Token of letters/periods immediately before position `dot` (exclusive of
// the final '.'), lowercased.
std::string preceding_token(std::string_view s, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && (is_alpha(s[b - 1]) || s[b - 1] == '.')) --b;
  std::string tok;
  for (std::size_t k = b; k < dot; ++k) tok += to_lower(s[k]);
  while (!tok.empty() && tok.back() == '.') tok.pop_back();
  while (!tok.empty() && tok.front() == '.') tok.erase(tok.begin());
  return tok;
}

}  // namespace

std::vector<std::string> segment_sentences(
    std::string_view text, const std::set<std::string>& abbreviations) {
  std::vector<std::string> sentences;
  std::string cur;

  auto flush = [&] {
    std::size_t b = cur.find_first_not_of(" \t\n\r");
    if (b == std::string::npos) {
      cur.clear();
      return;
    }
    std::size_t e = cur.find_last_not_of(" \t\n\r");
    sentences.push_back(cur.substr(b, e - b + 1));
    cur.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    cur += c;
    if (c != '.' && c != '!' && c != '?') continue;

    if (c == '.') {
      bool digit_before = i > 0 && is_digit(text[i - 1]);
      bool digit_after = i + 1 < text.size() && is_digit(text[i + 1]);
      if (digit_before && digit_after) continue;  // decimal point
      std::string tok = preceding_token(text, i);
      if (!tok.empty()) {
        if (abbreviations.count(tok)) continue;
        if (tok.size() == 1) continue;  // single-letter initial
      }
    }
    // Consume a run of closing punctuation after the terminator.
    std::size_t j = i + 1;
    while (j < text.size() &&
           (text[j] == '"' || text[j] == '\'' || text[j] == ')' ||
            text[j] == '.' || text[j] == '!' || text[j] == '?')) {
      cur += text[j];
      ++j;
    }
    bool at_end = j >= text.size();
    bool boundary = at_end;
    if (!at_end && is_space(text[j])) {
      std::size_t k = j;
      while (k < text.size() && is_space(text[k])) ++k;
      boundary = k >= text.size() || std::isupper(static_cast<unsigned char>(
                                         text[k])) != 0 ||
                 is_digit(text[k]) || text[k] == '"' || text[k] == '(';
    }
    i = j - 1;
    if (boundary) flush();
  }
  flush();
  return sentences;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    if (is_alnum(s[i])) {
      std::string tok;
      while (i < s.size()) {
        if (is_alnum(s[i])) {
          tok += s[i++];
        } else if ((s[i] == '.' || s[i] == ',' || s[i] == '\'' ||
                    s[i] == '-') &&
                   i + 1 < s.size() && is_alnum(s[i + 1])) {
          tok += s[i++];
        } else {
          break;
        }
      }
      tokens.push_back(std::move(tok));
    } else {
      tokens.push_back(std::string(1, s[i++]));
    }
  }
  return tokens;
}

int word_count(const std::vector<std::string>& tokens) {
  return static_cast<int>(
      std::count_if(tokens.begin(), tokens.end(), [](const std::string& t) {
        return !t.empty() && is_alnum(t[0]);
      }));
}

void Lexicon::add_word(std::string_view word) {
  if (!word.empty()) words_.insert(lowercase(word));
}

void Lexicon::load(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::size_t tab = line.find('\t');
    std::string word = (tab == std::string::npos) ? line : line.substr(0, tab);
    while (!word.empty() && is_space(word.back())) word.pop_back();
    std::size_t b = 0;
    while (b < word.size() && is_space(word[b])) ++b;
    add_word(std::string_view(word).substr(b));
  }
}

void Lexicon::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file: " + path);
  load(in);
}

void Lexicon::set_lemma_map(std::map<std::string, std::string> lemmas) {
  lemma_map_ = std::move(lemmas);
}

bool Lexicon::contains(std::string_view word) const {
  std::string w = lowercase(word);
  if (words_.count(w)) return true;
  auto it = lemma_map_.find(w);
  return it != lemma_map_.end() && words_.count(it->second) > 0;
}

std::vector<CandidateSentence> filter_candidates(
    const std::vector<std::string>& sentences, const Lexicon& lexicon,
    int min_tokens, int max_tokens, const std::string& company_id,
    int fiscal_year) {
  if (lexicon.empty()) throw Error("filter_candidates: empty lexicon");
  std::vector<CandidateSentence> out;
  for (int index = 0; index < static_cast<int>(sentences.size()); ++index) {
    const auto& s = sentences[index];
    auto toks = tokenize(s);
    int words = word_count(toks);
    if (words < min_tokens || words > max_tokens) continue;
    bool hit = std::any_of(toks.begin(), toks.end(), [&](const std::string& t) {
      return !t.empty() && is_alnum(t[0]) && lexicon.contains(t);
    });
    if (!hit) continue;
    out.push_back({s, words, company_id, fiscal_year, index});
  }
  return out;
}

}  // namespace finmwe::textprep
