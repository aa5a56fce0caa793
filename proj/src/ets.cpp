#include "evnet/ets.hpp"

#include <algorithm>
#include <sstream>

#include "evnet/flowopt.hpp"

namespace evnet {

namespace {
constexpr size_t kPathCap = 1u << 20;
}

std::string mask_str(EventMask m, const std::vector<Event>& events, const Topology& topo) {
  std::string out = "{";
  bool first = true;
  for (uint32_t i = 0; i < events.size(); ++i) {
    if (!(m >> i & 1)) continue;
    if (!first) out += ", ";
    first = false;
    out += events[i].str(topo);
  }
  return out + "}";
}

Ets build_ets(const Topology& topo, const Program& p, const StateVec& k0) {
  Ets ets;
  ets.v0 = k0;

  struct Pending {
    StateVec src, dst;
    TestConjunction phi;
    Location at;
    int pos;
  };
  std::vector<Pending> pending;
  std::set<StateVec> seen{k0};
  std::vector<StateVec> work{k0};
  int dropped = 0;
  TestConjunction top;
  while (!work.empty()) {
    StateVec k = work.back();
    work.pop_back();
    ExtractResult ex = extract_edges(p, k, top);
    dropped += ex.dropped_self_loops;
    for (const auto& e : ex.edges) {
      StateVec dst = e.src;
      dst[e.st_index] = e.st_value;
      pending.push_back(Pending{e.src, dst, e.phi, e.at, e.pos});
      if (seen.insert(dst).second) work.push_back(dst);
    }
  }
  if (dropped > 0)
    ets.diagnostics.push_back("dropped " + std::to_string(dropped) +
                              " identity edge(s): state assignment writes the current value");

  // Event identity is (guard, location, positional id); the same syntactic
  // link firing from several states with the same guard denotes one event.
  std::set<std::tuple<int, TestConjunction, Location>> distinct;
  for (const auto& pe : pending) distinct.insert({pe.pos, pe.phi, pe.at});
  if (distinct.size() > 64) throw SemanticError("more than 64 distinct events are not supported");
  std::map<std::tuple<int, TestConjunction, Location>, uint32_t> index;
  for (const auto& key : distinct) {
    Event ev;
    ev.phi = std::get<1>(key);
    ev.sw = std::get<2>(key).sw;
    ev.pt = std::get<2>(key).pt;
    ev.eid = "L" + std::to_string(std::get<0>(key));
    index[key] = static_cast<uint32_t>(ets.events.size());
    ets.events.push_back(std::move(ev));
  }
  std::set<EtsEdge> edges;
  for (const auto& pe : pending)
    edges.insert(EtsEdge{pe.src, pe.dst, index.at({pe.pos, pe.phi, pe.at})});
  ets.edges.assign(edges.begin(), edges.end());

  for (const auto& k : seen) {
    Program proj = project_config(p, k);
    CompileOutput co = compile_config(topo, proj, 0);
    for (const auto& d : co.diagnostics)
      ets.diagnostics.push_back("state " + state_str(k) + ": " + d);
    ets.vertices.emplace(k, std::move(co.config));
  }
  std::sort(ets.diagnostics.begin(), ets.diagnostics.end());
  ets.diagnostics.erase(std::unique(ets.diagnostics.begin(), ets.diagnostics.end()),
                        ets.diagnostics.end());
  return ets;
}

std::string Ets::dump(const Topology& topo) const {
  std::ostringstream os;
  for (const auto& [k, c] : vertices) {
    os << "vertex " << state_str(k) << " rules " << c.rule_count();
    if (k == v0) os << " initial";
    os << "\n";
  }
  for (const auto& e : edges)
    os << "edge " << state_str(e.src) << " -> " << state_str(e.dst) << " on "
       << events[e.event].str(topo) << "\n";
  return os.str();
}

LoopCheck check_loop_free(const Ets& ets) {
  std::map<StateVec, std::vector<const EtsEdge*>> out;
  for (const auto& e : ets.edges) out[e.src].push_back(&e);
  std::map<StateVec, int> color;  // 0 new, 1 active, 2 done
  std::vector<StateVec> stack;
  LoopCheck res;

  auto dfs = [&](auto&& self, const StateVec& v) -> bool {
    color[v] = 1;
    stack.push_back(v);
    for (const EtsEdge* e : out[v]) {
      int c = color.count(e->dst) ? color[e->dst] : 0;
      if (c == 1) {
        auto it = std::find(stack.begin(), stack.end(), e->dst);
        res.cycle.assign(it, stack.end());
        res.cycle.push_back(e->dst);
        return false;
      }
      if (c == 0 && !self(self, e->dst)) return false;
    }
    color[v] = 2;
    stack.pop_back();
    return true;
  };
  for (const auto& [v, _] : ets.vertices) {
    int c = color.count(v) ? color[v] : 0;
    if (c == 0 && !dfs(dfs, v)) {
      res.ok = false;
      return res;
    }
  }
  return res;
}

EventSetFamily event_set_family(const Topology& topo, const Ets& ets) {
  LoopCheck lc = check_loop_free(ets);
  if (!lc.ok) throw SemanticError("event_set_family requires a loop-free transition system");

  std::map<StateVec, std::vector<const EtsEdge*>> out;
  for (const auto& e : ets.edges) out[e.src].push_back(&e);
  for (auto& [v, es] : out)
    std::sort(es.begin(), es.end(),
              [](const EtsEdge* a, const EtsEdge* b) { return *a < *b; });

  EventSetFamily family;
  size_t paths = 0;

  struct Frame {
    StateVec at;
    EventMask mask;
    std::vector<uint32_t> path;
  };
  std::vector<Frame> stack{{ets.v0, 0, {}}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (++paths > kPathCap)
      throw SemanticError("path enumeration exceeded " + std::to_string(kPathCap) +
                          " paths; transition system too large for desk-scale analysis");
    auto [it, fresh] = family.entries.try_emplace(f.mask);
    const Configuration& cfg = ets.vertices.at(f.at);
    it->second.terminal_keys.insert(cfg.canonical_key(topo));
    if (fresh) {
      it->second.terminal_vertex = f.at;
      it->second.witness_path = f.path;
    }
    for (const EtsEdge* e : out[f.at]) {
      Frame g;
      g.at = e->dst;
      g.mask = f.mask | (EventMask{1} << e->event);
      g.path = f.path;
      g.path.push_back(e->event);
      stack.push_back(std::move(g));
    }
  }
  return family;
}

UniqueConfigCheck check_unique_config(const EventSetFamily& family) {
  UniqueConfigCheck res;
  for (const auto& [mask, entry] : family.entries) {
    if (entry.terminal_keys.size() > 1) {
      res.ok = false;
      res.offending = mask;
      res.keys.assign(entry.terminal_keys.begin(), entry.terminal_keys.end());
      return res;
    }
  }
  return res;
}

FiniteCompleteCheck check_finite_complete(const EventSetFamily& family) {
  FiniteCompleteCheck res;
  std::vector<EventMask> masks;
  masks.reserve(family.entries.size());
  for (const auto& [m, _] : family.entries) masks.push_back(m);
  for (EventMask a : masks) {
    for (EventMask b : masks) {
      if (b <= a) continue;
      EventMask u = a | b;
      if (family.entries.count(u)) continue;
      for (EventMask upper : masks) {
        if ((u & upper) == u) {
          res.ok = false;
          res.a = a;
          res.b = b;
          res.missing_union = u;
          res.upper = upper;
          return res;
        }
      }
    }
  }
  return res;
}

}  // namespace evnet
