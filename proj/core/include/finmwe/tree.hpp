#ifndef FINMWE_TREE_HPP
#define FINMWE_TREE_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finmwe/errors.hpp"

namespace finmwe::feat {

FINMWE_DEFINE_ERROR(NoGoverningVP);

/// Constituency tree over a tokenized sentence. Leaves are terminals (words)
/// aligned left to right with token indices; a preterminal is a leaf's parent
/// (its POS node). Spans are token intervals, end exclusive.
class ConstituencyTree {
 public:
  struct Node {
    std::string category;  // syntactic category, or the word for terminals
    int parent = -1;
    std::vector<int> children;
    int start = 0;
    int end = 0;     // exclusive token span
    bool terminal = false;
  };

  /// Parses a bracketed Penn-style string. Throws ling::MalformedTree (by
  /// message via finmwe::Error) on unbalanced brackets or empty nodes.
  static ConstituencyTree parse(std::string_view bracketed);

  const Node& node(int id) const { return nodes_[id]; }
  int root() const { return root_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int leaf_count() const { return static_cast<int>(leaves_.size()); }

  /// Terminal node id for token index i.
  int leaf(int token) const { return leaves_[token]; }
  /// Preterminal (POS) node id for token index i.
  int preterminal(int token) const { return nodes_[leaves_[token]].parent; }
  const std::string& word(int token) const {
    return nodes_[leaves_[token]].category;
  }
  const std::string& pos(int token) const {
    return nodes_[preterminal(token)].category;
  }

  bool is_preterminal(int id) const {
    return nodes_[id].children.size() == 1 &&
           nodes_[nodes_[id].children[0]].terminal;
  }

  /// Serializes back to a bracketed string.
  std::string to_bracketed() const;

  /// Returns a copy with token span [start,end) collapsed to one terminal
  /// carrying `replacement`; interior nodes left empty are pruned.
  ConstituencyTree collapse_leaves(int start, int end,
                                   const std::string& replacement) const;

 private:
  std::vector<Node> nodes_;
  std::vector<int> leaves_;
  int root_ = -1;

  void index_leaves();
};

/// Direction of a head-rule priority scan.
enum class HeadDir { Left, Right, LeftDis, RightDis };

/// Head-percolation tables in the style of Collins' parser. A category maps
/// to an ordered list of (direction, priority list) rules; the first rule
/// that matches picks the head child.
class HeadRules {
 public:
  struct Rule {
    HeadDir dir = HeadDir::Left;
    std::vector<std::string> priorities;
  };

  /// Built-in tables (Collins', with TO demoted below VP in the VP row so
  /// infinitival verb phrases percolate the lexical verb).
  static const HeadRules& collins();

  /// Loads tables from a data file: lines "CATEGORY<TAB>dir<TAB>cat cat ...",
  /// dir in {left,right,leftdis,rightdis}; repeated CATEGORY lines form an
  /// ordered rule list. '#' starts a comment.
  static HeadRules load(std::istream& in);
  static HeadRules load_file(const std::string& path);

  /// Head child (node id) of an internal node.
  int head_child(const ConstituencyTree& t, int node) const;

  /// Lexical head: percolates to the terminal's token index.
  int head_token(const ConstituencyTree& t, int node) const;

 private:
  std::vector<std::pair<std::string, std::vector<Rule>>> rules_;
  std::optional<std::size_t> find(const std::string& cat) const;
};

}  // namespace finmwe::feat

#endif
