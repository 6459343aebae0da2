#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace optbench {

enum class BlockKind { Entry, Exit, Straight, Branch, LoopHead, Call };
enum class EdgeKind { Fallthrough, True, False, Back };

std::string to_string(BlockKind k);
std::string to_string(EdgeKind k);

struct BasicBlock {
  int id = 0;
  BlockKind kind = BlockKind::Straight;
  int stmt_count = 0;
};

struct CfgEdge {
  int from = 0;
  int to = 0;
  EdgeKind kind = EdgeKind::Fallthrough;
  bool operator==(const CfgEdge&) const = default;
};

// Intraprocedural control-flow graph. Node ids are dense: nodes[i].id == i.
// Node 0 is Entry and node 1 is Exit.
struct Cfg {
  std::vector<BasicBlock> nodes;
  std::vector<CfgEdge> edges;

  std::size_t size() const { return nodes.size(); }
  int out_degree(int id) const;
  std::size_t count(BlockKind k) const;
  std::size_t count(EdgeKind k) const;
};

// Token-level CFG extraction for C-like sources. The graph is rooted at
// `main` (falling back to the first function definition, then to the whole
// text as one body). Functions defined in the same translation unit and called
// from a statement are merged in once, behind a Call node.
// Throws Error{EmptySource} or Error{UnbalancedBraces}.
Cfg build_cfg(std::string_view source);

// Graphviz rendering, handy when eyeballing extracted graphs.
std::string to_dot(const Cfg& cfg);

}  // namespace optbench
