#include "evnet/flowopt.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>

namespace evnet {

// ---------------------------------------------------------------------------
// Policy compilation
// ---------------------------------------------------------------------------

namespace {

constexpr int kUnrollCap = 64;

// Symbolic state of one enumeration path. Constraints are relative to the
// packet entering the current segment (i.e. what the rule will match on);
// `known`/`known_ne` track the packet's concrete state for carry-over into
// later segments.
struct PathCtx {
  bool has_switch = false;
  SwitchId seg_switch = 0;
  std::optional<Value> sw_eq;  // sw tests before the first link
  std::vector<Value> sw_ne;
  PortMatch in_port;
  bool pt_written = false;
  PortId pt_value = 0;
  std::map<FieldId, Value> known;
  std::map<FieldId, std::set<Value>> known_ne;
  TestConjunction match;
  std::set<FieldId> written;
  bool emitted_any = false;

  auto operator<=>(const PathCtx&) const = default;
};

struct PendingRule {
  SwitchId sw;
  PortMatch in_port;
  TestConjunction match;
  Action action;
};

struct Compiler {
  const Topology& topo;
  std::vector<PendingRule> rules;
  std::vector<std::string> diagnostics;

  std::vector<PathCtx> apply_test(PathCtx ctx, const TestPtr& t, bool positive) {
    switch (t->kind) {
      case Test::Kind::True:
        if (positive) return {std::move(ctx)};
        return {};
      case Test::Kind::False:
        if (positive) return {};
        return {std::move(ctx)};
      case Test::Kind::FieldEq: {
        auto it = ctx.known.find(t->field);
        if (it != ctx.known.end()) {
          bool eq = it->second == t->value;
          if (eq == positive) return {std::move(ctx)};
          return {};
        }
        auto& nes = ctx.known_ne[t->field];
        if (positive) {
          if (nes.count(t->value)) return {};
          if (!ctx.match.add(Literal{t->field, Rel::Eq, t->value})) return {};
          ctx.known[t->field] = t->value;
          ctx.known_ne.erase(t->field);
        } else {
          if (!ctx.match.add(Literal{t->field, Rel::Ne, t->value})) return {};
          nes.insert(t->value);
        }
        return {std::move(ctx)};
      }
      case Test::Kind::PtEq: {
        PortId p = static_cast<PortId>(t->value);
        if (ctx.pt_written) {
          bool eq = ctx.pt_value == p;
          if (eq == positive) return {std::move(ctx)};
          return {};
        }
        bool ok = positive ? ctx.in_port.add_eq(p) : ctx.in_port.add_ne(p);
        if (!ok) return {};
        return {std::move(ctx)};
      }
      case Test::Kind::SwEq: {
        SwitchId s = static_cast<SwitchId>(t->value);
        if (ctx.has_switch) {
          bool eq = ctx.seg_switch == s;
          if (eq == positive) return {std::move(ctx)};
          return {};
        }
        if (positive) {
          if (ctx.sw_eq && *ctx.sw_eq != s) return {};
          if (std::find(ctx.sw_ne.begin(), ctx.sw_ne.end(), s) != ctx.sw_ne.end()) return {};
          ctx.sw_eq = s;
        } else {
          if (ctx.sw_eq && *ctx.sw_eq == s) return {};
          if (!ctx.sw_eq) ctx.sw_ne.push_back(s);
        }
        return {std::move(ctx)};
      }
      case Test::Kind::StateEq:
        throw SemanticError("table compilation requires a state-free program");
      case Test::Kind::And: {
        std::vector<PathCtx> out;
        if (positive) {
          for (auto& c1 : apply_test(ctx, t->a, true))
            for (auto& c2 : apply_test(c1, t->b, true)) out.push_back(std::move(c2));
        } else {  // !(a & b) = !a | !b
          out = apply_test(ctx, t->a, false);
          for (auto& c : apply_test(ctx, t->b, false)) out.push_back(std::move(c));
        }
        return out;
      }
      case Test::Kind::Or: {
        std::vector<PathCtx> out;
        if (positive) {
          out = apply_test(ctx, t->a, true);
          for (auto& c : apply_test(ctx, t->b, true)) out.push_back(std::move(c));
        } else {  // !(a | b) = !a & !b
          for (auto& c1 : apply_test(ctx, t->a, false))
            for (auto& c2 : apply_test(c1, t->b, false)) out.push_back(std::move(c2));
        }
        return out;
      }
      case Test::Kind::Not: return apply_test(std::move(ctx), t->a, !positive);
    }
    return {};
  }

  Action segment_action(const PathCtx& ctx, PortId out) const {
    Action a;
    for (FieldId f : ctx.written) a.writes.emplace_back(f, ctx.known.at(f));
    std::sort(a.writes.begin(), a.writes.end());
    a.out_port = out;
    return a;
  }

  // Begins the segment following a link arrival, carrying packet knowledge
  // into the new rule match so tables stay self-contained per switch.
  static PathCtx next_segment(const PathCtx& ctx, Location arrival) {
    PathCtx n;
    n.has_switch = true;
    n.seg_switch = arrival.sw;
    n.in_port.add_eq(arrival.pt);
    n.known = ctx.known;
    n.known_ne = ctx.known_ne;
    for (const auto& [f, v] : n.known) n.match.add(Literal{f, Rel::Eq, v});
    for (const auto& [f, vs] : n.known_ne)
      for (Value v : vs) n.match.add(Literal{f, Rel::Ne, v});
    n.emitted_any = ctx.emitted_any;
    return n;
  }

  std::vector<PathCtx> traverse_link(PathCtx ctx, Location src, Location dst) {
    auto linked = topo.link_from(src);
    if (!linked || *linked != dst) {
      diagnostics.push_back("program link " + src.str() + " -> " + dst.str() +
                            " is not a topology link");
      return {};
    }
    if (ctx.has_switch) {
      if (ctx.seg_switch != src.sw) return {};
    } else {
      if (ctx.sw_eq && *ctx.sw_eq != src.sw) return {};
      if (std::find(ctx.sw_ne.begin(), ctx.sw_ne.end(), src.sw) != ctx.sw_ne.end()) return {};
      ctx.has_switch = true;
      ctx.seg_switch = src.sw;
    }
    if (ctx.pt_written) {
      if (ctx.pt_value != src.pt) return {};
    } else {
      if (!ctx.in_port.add_eq(src.pt)) return {};
    }
    rules.push_back(PendingRule{src.sw, ctx.in_port, ctx.match, segment_action(ctx, src.pt)});
    PathCtx next = next_segment(ctx, dst);
    next.emitted_any = true;
    return {std::move(next)};
  }

  std::vector<PathCtx> exec(PathCtx ctx, const CmdPtr& c) {
    switch (c->kind) {
      case Cmd::Kind::TestC: return apply_test(std::move(ctx), c->test, true);
      case Cmd::Kind::AssignField:
        ctx.known[c->field] = c->value;
        ctx.known_ne.erase(c->field);
        ctx.written.insert(c->field);
        return {std::move(ctx)};
      case Cmd::Kind::AssignPt:
        ctx.pt_written = true;
        ctx.pt_value = static_cast<PortId>(c->value);
        return {std::move(ctx)};
      case Cmd::Kind::Union: {
        auto out = exec(ctx, c->a);
        for (auto& r : exec(std::move(ctx), c->b)) out.push_back(std::move(r));
        return out;
      }
      case Cmd::Kind::Seq: {
        std::vector<PathCtx> out;
        for (auto& mid : exec(std::move(ctx), c->a))
          for (auto& r : exec(std::move(mid), c->b)) out.push_back(std::move(r));
        return out;
      }
      case Cmd::Kind::Star: {
        std::set<PathCtx> seen;
        std::vector<PathCtx> out;
        std::vector<PathCtx> frontier{std::move(ctx)};
        for (int round = 0; !frontier.empty(); ++round) {
          if (round >= kUnrollCap)
            throw SemanticError("table compilation: star did not stabilize within " +
                                std::to_string(kUnrollCap) + " unrollings");
          std::vector<PathCtx> next;
          for (auto& f : frontier) {
            if (!seen.insert(f).second) continue;
            out.push_back(f);
            for (auto& r : exec(f, c->a)) next.push_back(std::move(r));
          }
          frontier = std::move(next);
        }
        return out;
      }
      case Cmd::Kind::Link: return traverse_link(std::move(ctx), c->lsrc, c->ldst);
      case Cmd::Kind::LinkState:
        throw SemanticError("table compilation requires a state-free program");
    }
    return {};
  }

  void finish_path(const PathCtx& ctx) {
    if (!ctx.emitted_any) {
      diagnostics.push_back("policy path with no link cannot be placed on a switch");
      return;
    }
    if (!ctx.pt_written) {
      if (!ctx.written.empty())
        diagnostics.push_back("policy path writes fields after its final hop without delivering");
      return;  // path ends at the arrival port; the packet is absorbed there
    }
    Location fin{ctx.seg_switch, ctx.pt_value};
    if (!topo.is_host_location(fin)) {
      diagnostics.push_back("policy path ends at non-host port " + fin.str());
      return;
    }
    rules.push_back(
        PendingRule{ctx.seg_switch, ctx.in_port, ctx.match, segment_action(ctx, ctx.pt_value)});
  }
};

}  // namespace

CompileOutput compile_config(const Topology& topo, const Program& state_free, int id) {
  if (mentions_state(state_free.root))
    throw SemanticError("compile_config requires a state-free program");
  Compiler comp{topo};
  for (const auto& fin : comp.exec(PathCtx{}, state_free.root)) comp.finish_path(fin);

  // Merge identical match regions (multicast union), then close overlapping
  // regions under intersection so that first-match lookup returns the union
  // of every applicable path's actions.
  using Key = std::tuple<SwitchId, PortMatch, TestConjunction>;
  std::map<Key, std::set<Action>> merged;
  for (const auto& pr : comp.rules) merged[{pr.sw, pr.in_port, pr.match}].insert(pr.action);

  bool changed = true;
  int guard = 0;
  while (changed) {
    changed = false;
    if (++guard > 64) throw SemanticError("rule intersection closure failed to stabilize");
    std::vector<std::pair<Key, std::set<Action>>> items(merged.begin(), merged.end());
    for (size_t i = 0; i < items.size(); ++i) {
      for (size_t j = i + 1; j < items.size(); ++j) {
        const auto& [ki, ai] = items[i];
        const auto& [kj, aj] = items[j];
        if (std::get<0>(ki) != std::get<0>(kj)) continue;
        auto port = std::get<1>(ki).conjoin(std::get<1>(kj));
        if (!port) continue;
        TestConjunction m = std::get<2>(ki).conjoin(std::get<2>(kj));
        if (!m.satisfiable()) continue;
        Key inter{std::get<0>(ki), *port, m};
        auto& acts = merged[inter];
        size_t before = acts.size();
        acts.insert(ai.begin(), ai.end());
        acts.insert(aj.begin(), aj.end());
        if (acts.size() != before) changed = true;
      }
    }
  }

  // Priority order: a strictly more specific region must shadow the regions
  // it refines, so sort by refinement depth, then canonically.
  struct Entry {
    Key key;
    std::set<Action> actions;
    int depth = 0;
  };
  std::vector<Entry> entries;
  for (auto& [k, a] : merged) entries.push_back(Entry{k, a, 0});
  auto refines = [](const Key& a, const Key& b) {
    return std::get<0>(a) == std::get<0>(b) && std::get<1>(a).implies(std::get<1>(b)) &&
           std::get<2>(a).implies(std::get<2>(b));
  };
  for (auto& e : entries)
    for (const auto& o : entries)
      if (!(e.key == o.key) && refines(e.key, o.key)) ++e.depth;
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (std::get<0>(a.key) != std::get<0>(b.key)) return std::get<0>(a.key) < std::get<0>(b.key);
    if (a.depth != b.depth) return a.depth > b.depth;
    return a.key < b.key;
  });

  CompileOutput out;
  out.config.id = id;
  out.diagnostics = std::move(comp.diagnostics);
  std::map<SwitchId, uint32_t> prio;
  for (auto& e : entries) {
    Rule r;
    r.in_port = std::get<1>(e.key);
    r.match = std::get<2>(e.key);
    r.actions.assign(e.actions.begin(), e.actions.end());
    r.priority = prio[std::get<0>(e.key)]++;
    out.config.tables[std::get<0>(e.key)].push_back(std::move(r));
  }
  std::sort(out.diagnostics.begin(), out.diagnostics.end());
  out.diagnostics.erase(std::unique(out.diagnostics.begin(), out.diagnostics.end()),
                        out.diagnostics.end());
  return out;
}

std::string rule_key(const Topology& topo, SwitchId sw, const Rule& r) {
  std::ostringstream os;
  os << "sw" << sw << " p" << r.priority << " " << r.in_port.str() << " " << r.match.str(topo)
     << " ->";
  for (const auto& a : r.actions) {
    for (auto [f, v] : a.writes) os << " " << topo.field_name(f) << ":=" << v;
    os << " out" << a.out_port << ";";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Trie-based configuration-id assignment
// ---------------------------------------------------------------------------

namespace {

RuleSet intersect(const RuleSet& a, const RuleSet& b) {
  RuleSet out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
  return out;
}

size_t isect_size(const RuleSet& a, const RuleSet& b) {
  size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib)
      ++ia;
    else if (*ib < *ia)
      ++ib;
    else
      ++n, ++ia, ++ib;
  }
  return n;
}

// Pads with dummy configurations holding every rule, so dummies never reduce
// sharing at interior nodes.
std::vector<RuleSet> pad_to_power(const std::vector<RuleSet>& configs, int& bits,
                                  std::vector<bool>& is_dummy) {
  size_t n = std::max<size_t>(configs.size(), 1);
  bits = 0;
  while ((size_t{1} << bits) < n) ++bits;
  RuleSet all;
  for (const auto& c : configs) all.insert(c.begin(), c.end());
  std::vector<RuleSet> padded = configs;
  is_dummy.assign(size_t{1} << bits, false);
  while (padded.size() < (size_t{1} << bits)) {
    is_dummy[padded.size()] = true;
    padded.push_back(all);
  }
  return padded;
}

// Exact maximum-weight perfect matching on <= 16 nodes via subset DP.
std::vector<std::pair<int, int>> match_exact(const std::vector<RuleSet>& sets) {
  const int n = static_cast<int>(sets.size());
  std::vector<std::vector<size_t>> w(n, std::vector<size_t>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) w[i][j] = isect_size(sets[i], sets[j]);
  const size_t full = size_t{1} << n;
  std::vector<int64_t> best(full, -1);
  std::vector<std::pair<int, int>> choice(full, {-1, -1});
  best[0] = 0;
  for (size_t mask = 1; mask < full; ++mask) {
    int i = std::countr_zero(mask);
    for (int j = i + 1; j < n; ++j) {
      if (!(mask >> j & 1)) continue;
      size_t rest = mask & ~(size_t{1} << i) & ~(size_t{1} << j);
      if (best[rest] < 0) continue;
      int64_t cand = best[rest] + static_cast<int64_t>(w[i][j]);
      if (cand > best[mask]) {
        best[mask] = cand;
        choice[mask] = {i, j};
      }
    }
  }
  std::vector<std::pair<int, int>> pairs;
  size_t mask = full - 1;
  while (mask) {
    auto [i, j] = choice[mask];
    pairs.emplace_back(i, j);
    mask &= ~(size_t{1} << i) & ~(size_t{1} << j);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::vector<std::pair<int, int>> match_greedy(const std::vector<RuleSet>& sets) {
  const int n = static_cast<int>(sets.size());
  std::vector<bool> used(n, false);
  std::vector<std::pair<int, int>> pairs;
  for (int round = 0; round < n / 2; ++round) {
    size_t best = 0;
    std::pair<int, int> pick{-1, -1};
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (used[j]) continue;
        size_t v = isect_size(sets[i], sets[j]);
        if (pick.first < 0 || v > best) {
          best = v;
          pick = {i, j};
        }
      }
    }
    used[pick.first] = used[pick.second] = true;
    pairs.push_back(pick);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

Trie build_tree(const std::vector<RuleSet>& padded, const std::vector<bool>& is_dummy, int bits,
                const std::vector<int>& leaf_slots) {
  Trie trie;
  trie.bits = bits;
  std::vector<int> level;
  for (int slot : leaf_slots) {
    TrieNode leaf;
    leaf.rules = padded[slot];
    leaf.leaf_config = slot;
    leaf.has_real = !is_dummy[slot];
    leaf.depth = bits;
    trie.nodes.push_back(std::move(leaf));
    level.push_back(static_cast<int>(trie.nodes.size()) - 1);
  }
  int depth = bits;
  while (level.size() > 1) {
    --depth;
    std::vector<int> next;
    for (size_t i = 0; i + 1 < level.size(); i += 2) {
      TrieNode n;
      n.left = level[i];
      n.right = level[i + 1];
      n.rules = intersect(trie.nodes[n.left].rules, trie.nodes[n.right].rules);
      n.has_real = trie.nodes[n.left].has_real || trie.nodes[n.right].has_real;
      n.depth = depth;
      trie.nodes.push_back(std::move(n));
      next.push_back(static_cast<int>(trie.nodes.size()) - 1);
    }
    level = std::move(next);
  }
  trie.root = level.front();
  // In-order leaves define the binary ids.
  std::vector<int> visit{trie.root};
  while (!visit.empty()) {
    int v = visit.back();
    visit.pop_back();
    const TrieNode& n = trie.nodes[v];
    if (n.left < 0) {
      trie.leaf_order.push_back(is_dummy[n.leaf_config] ? -1 : n.leaf_config);
      trie.leaf_node.push_back(v);
    } else {
      visit.push_back(n.right);
      visit.push_back(n.left);
    }
  }
  return trie;
}

}  // namespace

Trie trie_from_order(const std::vector<RuleSet>& configs, const std::vector<int>& order) {
  int bits = 0;
  std::vector<bool> is_dummy;
  auto padded = pad_to_power(configs, bits, is_dummy);
  std::vector<int> slots = order;
  for (size_t i = slots.size(); i < padded.size(); ++i) slots.push_back(static_cast<int>(i));
  return build_tree(padded, is_dummy, bits, slots);
}

Trie trie_assign(const std::vector<RuleSet>& configs) {
  int bits = 0;
  std::vector<bool> is_dummy;
  auto padded = pad_to_power(configs, bits, is_dummy);

  // Group representation while pairing: a group is an ordered slot list plus
  // its intersection set.
  struct Group {
    std::vector<int> slots;
    RuleSet rules;
  };
  std::vector<Group> groups;
  for (size_t i = 0; i < padded.size(); ++i) groups.push_back(Group{{static_cast<int>(i)}, padded[i]});
  while (groups.size() > 1) {
    std::vector<RuleSet> sets;
    for (const auto& g : groups) sets.push_back(g.rules);
    auto pairs = sets.size() <= 16 ? match_exact(sets) : match_greedy(sets);
    std::vector<Group> next;
    for (auto [i, j] : pairs) {
      Group g;
      g.slots = groups[i].slots;
      g.slots.insert(g.slots.end(), groups[j].slots.begin(), groups[j].slots.end());
      g.rules = intersect(groups[i].rules, groups[j].rules);
      next.push_back(std::move(g));
    }
    groups = std::move(next);
  }
  return build_tree(padded, is_dummy, bits, groups.front().slots);
}

std::vector<WildcardRule> emit_wildcard_rules(const Trie& trie) {
  std::vector<WildcardRule> out;
  struct Item {
    int node;
    std::string prefix;
    const RuleSet* parent_rules;
  };
  static const RuleSet kEmpty;
  std::vector<Item> stack{{trie.root, "", &kEmpty}};
  while (!stack.empty()) {
    auto [v, prefix, parent] = stack.back();
    stack.pop_back();
    const TrieNode& n = trie.nodes[v];
    if (n.has_real) {
      std::string guard = prefix + std::string(trie.bits - prefix.size(), '*');
      for (const auto& r : n.rules)
        if (!parent->count(r)) out.push_back(WildcardRule{guard, r});
    }
    if (n.left >= 0) {
      stack.push_back({n.right, prefix + "1", &n.rules});
      stack.push_back({n.left, prefix + "0", &n.rules});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

size_t naive_rule_count(const std::vector<RuleSet>& configs) {
  size_t n = 0;
  for (const auto& c : configs) n += c.size();
  return n;
}

size_t brute_force_optimal(const std::vector<RuleSet>& configs) {
  if (configs.size() > 8) throw SemanticError("brute_force_optimal supports at most 8 configurations");
  int bits = 0;
  std::vector<bool> is_dummy;
  auto padded = pad_to_power(configs, bits, is_dummy);
  std::vector<int> order(padded.size());
  std::iota(order.begin(), order.end(), 0);
  size_t best = SIZE_MAX;
  do {
    Trie t = build_tree(padded, is_dummy, bits, order);
    best = std::min(best, emit_wildcard_rules(t).size());
  } while (std::next_permutation(order.begin(), order.end()));
  return best;
}

}  // namespace evnet
