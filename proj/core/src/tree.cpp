#include "finmwe/tree.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "finmwe/record.hpp"

namespace finmwe::feat {

namespace {

void skip_ws(std::string_view s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

std::string read_atom(std::string_view s, std::size_t& i) {
  std::size_t b = i;
  while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) &&
         s[i] != '(' && s[i] != ')')
    ++i;
  return std::string(s.substr(b, i - b));
}

}  // namespace

ConstituencyTree ConstituencyTree::parse(std::string_view s) {
  ConstituencyTree t;
  std::size_t i = 0;
  int token = 0;

  // Recursive-descent over "(CAT child child ...)" where a child is either a
  // parenthesized node or a bare word (terminal).
  auto parse_node = [&](auto&& self, int parent) -> int {
    skip_ws(s, i);
    if (i >= s.size() || s[i] != '(')
      throw ling::MalformedTree("expected '('");
    ++i;
    skip_ws(s, i);
    Node n;
    n.category = read_atom(s, i);
    if (n.category.empty()) throw ling::MalformedTree("node without category");
    n.parent = parent;
    int id = static_cast<int>(t.nodes_.size());
    t.nodes_.push_back(std::move(n));
    t.nodes_[id].start = token;
    for (;;) {
      skip_ws(s, i);
      if (i >= s.size()) throw ling::MalformedTree("unbalanced brackets");
      if (s[i] == ')') {
        ++i;
        break;
      }
      if (s[i] == '(') {
        int child = self(self, id);
        t.nodes_[id].children.push_back(child);
      } else {
        std::string w = read_atom(s, i);
        Node leaf;
        leaf.category = std::move(w);
        leaf.parent = id;
        leaf.terminal = true;
        leaf.start = token;
        leaf.end = token + 1;
        ++token;
        int lid = static_cast<int>(t.nodes_.size());
        t.nodes_.push_back(std::move(leaf));
        t.nodes_[id].children.push_back(lid);
      }
    }
    if (t.nodes_[id].children.empty())
      throw ling::MalformedTree("empty node: " + t.nodes_[id].category);
    t.nodes_[id].end = token;
    return id;
  };

  skip_ws(s, i);
  if (i >= s.size()) throw ling::MalformedTree("empty tree");
  t.root_ = parse_node(parse_node, -1);
  skip_ws(s, i);
  if (i != s.size()) throw ling::MalformedTree("trailing text after tree");
  t.index_leaves();
  return t;
}

void ConstituencyTree::index_leaves() {
  leaves_.clear();
  for (int id = 0; id < static_cast<int>(nodes_.size()); ++id)
    if (nodes_[id].terminal) leaves_.push_back(id);
  std::sort(leaves_.begin(), leaves_.end(),
            [&](int a, int b) { return nodes_[a].start < nodes_[b].start; });
}

std::string ConstituencyTree::to_bracketed() const {
  std::string out;
  auto emit = [&](auto&& self, int id) -> void {
    const Node& n = nodes_[id];
    if (n.terminal) {
      out += n.category;
      return;
    }
    out += '(';
    out += n.category;
    for (int c : n.children) {
      out += ' ';
      self(self, c);
    }
    out += ')';
  };
  emit(emit, root_);
  return out;
}

ConstituencyTree ConstituencyTree::collapse_leaves(
    int start, int end, const std::string& replacement) const {
  // Rebuild recursively, dropping terminals in (start,end) and renaming the
  // terminal at `start`; interior nodes whose children all vanish are pruned.
  std::string out;
  auto emit = [&](auto&& self, int id) -> bool {
    const Node& n = nodes_[id];
    if (n.terminal) {
      if (n.start > start && n.start < end) return false;
      out += (n.start == start) ? replacement : n.category;
      return true;
    }
    std::string saved = std::move(out);
    out.clear();
    out += '(';
    out += n.category;
    bool any = false;
    for (int c : n.children) {
      std::string before = out;
      out += ' ';
      if (self(self, c))
        any = true;
      else
        out = std::move(before);
    }
    out += ')';
    if (!any) {
      out = std::move(saved);
      return false;
    }
    out = saved + out;
    return true;
  };
  if (!emit(emit, root_)) throw ling::MalformedTree("collapse emptied tree");
  return parse(out);
}

namespace {

HeadDir parse_dir(const std::string& d) {
  if (d == "left") return HeadDir::Left;
  if (d == "right") return HeadDir::Right;
  if (d == "leftdis") return HeadDir::LeftDis;
  if (d == "rightdis") return HeadDir::RightDis;
  throw Error("bad head-rule direction: " + d);
}

}  // namespace

std::optional<std::size_t> HeadRules::find(const std::string& cat) const {
  for (std::size_t k = 0; k < rules_.size(); ++k)
    if (rules_[k].first == cat) return k;
  return std::nullopt;
}

HeadRules HeadRules::load(std::istream& in) {
  HeadRules hr;
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string cat, dir;
    if (!(ls >> cat >> dir)) continue;
    Rule r;
    r.dir = parse_dir(dir);
    std::string p;
    while (ls >> p) r.priorities.push_back(p);
    auto at = hr.find(cat);
    if (!at) {
      hr.rules_.emplace_back(cat, std::vector<Rule>{});
      at = hr.rules_.size() - 1;
    }
    hr.rules_[*at].second.push_back(std::move(r));
  }
  return hr;
}

HeadRules HeadRules::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open head-rule file: " + path);
  return load(in);
}

int HeadRules::head_child(const ConstituencyTree& t, int node) const {
  const auto& n = t.node(node);
  if (n.terminal) throw Error("head_child of terminal");
  const auto& kids = n.children;
  if (kids.size() == 1) return kids[0];

  auto cat_of = [&](int id) -> const std::string& {
    return t.node(id).category;
  };
  auto at = find(n.category);
  if (!at) return kids.front();

  for (const Rule& r : rules_[*at].second) {
    switch (r.dir) {
      case HeadDir::Left:
        for (const auto& want : r.priorities)
          for (int k : kids)
            if (cat_of(k) == want) return k;
        break;
      case HeadDir::Right:
        for (const auto& want : r.priorities)
          for (auto it = kids.rbegin(); it != kids.rend(); ++it)
            if (cat_of(*it) == want) return *it;
        break;
      case HeadDir::LeftDis:
        for (int k : kids)
          for (const auto& want : r.priorities)
            if (cat_of(k) == want) return k;
        break;
      case HeadDir::RightDis:
        for (auto it = kids.rbegin(); it != kids.rend(); ++it)
          for (const auto& want : r.priorities)
            if (cat_of(*it) == want) return *it;
        break;
    }
  }
  // No priority matched: fall back by the first rule's direction.
  return rules_[*at].second.front().dir == HeadDir::Left ||
                 rules_[*at].second.front().dir == HeadDir::LeftDis
             ? kids.front()
             : kids.back();
}

int HeadRules::head_token(const ConstituencyTree& t, int node) const {
  int id = node;
  while (!t.node(id).terminal) {
    if (t.is_preterminal(id))
      id = t.node(id).children[0];
    else
      id = head_child(t, id);
  }
  return t.node(id).start;
}

}  // namespace finmwe::feat
