#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evnet/config.hpp"
#include "evnet/netcore.hpp"
#include "evnet/snetkat.hpp"

// Compilation of state-free policies to per-switch rule tables, and the
// trie-based configuration-id assignment that floats rules shared between
// configurations up to wildcard-guarded table entries.

namespace evnet {

struct CompileOutput {
  Configuration config;
  std::vector<std::string> diagnostics;  // paths the table model cannot express
};

// Symbolic path enumeration: every AST path segment ending at a link emits a
// rule at the link's source switch matching the accumulated tests (including
// knowledge carried over earlier hops) and applying the accumulated writes.
// Overlapping matches are closed under intersection with unioned actions so
// that first-match evaluation reproduces union semantics.
CompileOutput compile_config(const Topology& topo, const Program& state_free, int id);

// Structural rule identity ignoring the configuration guard.
std::string rule_key(const Topology& topo, SwitchId sw, const Rule& r);

using RuleSet = std::set<std::string>;

struct TrieNode {
  RuleSet rules;           // intersection of children; leaf: its configuration
  int left = -1, right = -1;
  int leaf_config = -1;    // index into the padded input list; -1 for interior
  bool has_real = false;   // subtree contains a non-dummy configuration
  int depth = 0;
};

struct Trie {
  std::vector<TrieNode> nodes;  // nodes.back() is the root
  int root = -1;
  int bits = 0;                      // guard width k
  std::vector<int> leaf_order;       // config index per leaf slot, -1 = dummy
  std::vector<size_t> leaf_node;     // node index per leaf slot
};

// Bottom-up pairing maximizing the sum of intersection cardinalities per
// level; exact maximum-weight matching up to 16 nodes, greedy best-pair-first
// above. Inputs are padded to a power of two with dummy full sets.
Trie trie_assign(const std::vector<RuleSet>& configs);

// Builds the complete trie over an explicit leaf order (identity order when
// `order` lists 0..n-1).
Trie trie_from_order(const std::vector<RuleSet>& configs, const std::vector<int>& order);

struct WildcardRule {
  std::string guard;  // k characters over {0,1,*}
  std::string rule;
  auto operator<=>(const WildcardRule&) const = default;
};

// Each rule surfaces at the highest node whose subtree still needs it; rules
// attributable only to dummy leaves are not emitted. Resolving the guards per
// leaf id reproduces every configuration's rule set exactly.
std::vector<WildcardRule> emit_wildcard_rules(const Trie& trie);

// Exhaustive search over leaf permutations; at most 8 configurations.
size_t brute_force_optimal(const std::vector<RuleSet>& configs);

size_t naive_rule_count(const std::vector<RuleSet>& configs);

}  // namespace evnet
