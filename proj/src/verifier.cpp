#include "evnet/verifier.hpp"

#include <algorithm>
#include <sstream>

namespace evnet {

std::string Verdict::str() const {
  std::ostringstream os;
  if (accepted) {
    os << "verdict accept\n";
    os << "events";
    if (witness_events.empty()) os << " (none)";
    for (const auto& e : witness_events) os << " " << e;
    os << "\n";
    for (const auto& [t, c] : tree_config) os << "tree t" << t << " config " << c << "\n";
  } else {
    os << "verdict reject\n";
    os << "clause " << clause << "\n";
    if (tree) os << "tree t" << *tree << "\n";
    if (!detail.empty()) os << "detail " << detail << "\n";
  }
  return os.str();
}

std::optional<std::vector<uint32_t>> first_occurrences(const Topology& topo,
                                                       const NetworkTrace& ntr,
                                                       const UpdateSequence& u) {
  std::vector<uint32_t> ks;
  int64_t prev = -1;
  for (size_t i = 0; i < u.events.size(); ++i) {
    std::optional<uint32_t> k;
    for (uint32_t j = static_cast<uint32_t>(prev + 1); j < ntr.lps.size(); ++j) {
      if (matches(ntr.lps[j], u.events[i])) {
        k = j;
        break;
      }
    }
    if (!k) return std::nullopt;
    // The triggering packet must be producible in the preceding configuration.
    bool triggered = false;
    for (uint32_t ti : ntr.trees_containing(*k)) {
      if (trace_producible(topo, *u.configs[i], ntr.path_packets(ntr.trees[ti]))) {
        triggered = true;
        break;
      }
    }
    if (!triggered) return std::nullopt;
    ks.push_back(*k);
    prev = *k;
  }
  for (uint32_t j = static_cast<uint32_t>(prev + 1); j < ntr.lps.size(); ++j)
    for (const auto& e : u.universe)
      if (matches(ntr.lps[j], e)) return std::nullopt;
  return ks;
}

namespace {

// Tree indices ordered by smallest root for stable reporting.
std::vector<uint32_t> ordered_trees(const NetworkTrace& ntr) {
  std::vector<uint32_t> order(ntr.trees.size());
  for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return ntr.trees[a] < ntr.trees[b];
  });
  return order;
}

}  // namespace

Verdict check_ecu(const Topology& topo, const NetworkTrace& ntr, const UpdateSequence& u) {
  Verdict v;
  auto fo = first_occurrences(topo, ntr, u);
  if (!fo) {
    v.clause = "no-first-occurrence";
    v.detail = "the event sequence does not occur as required";
    return v;
  }
  HappensBefore hb(ntr);
  const int last_config = static_cast<int>(u.events.size());  // C0..C(n+1)

  for (uint32_t ti : ordered_trees(ntr)) {
    const auto& t = ntr.trees[ti];
    std::vector<int> admissible;
    for (int c = 0; c <= last_config; ++c)
      if (trace_producible(topo, *u.configs[c], ntr.path_packets(t))) admissible.push_back(c);
    if (admissible.empty()) {
      v.clause = "a";
      v.tree = ti;
      v.detail = "packet trace fits no configuration of the sequence";
      return v;
    }
    int hi = last_config, lo = 0;
    for (size_t i = 0; i < fo->size(); ++i) {
      uint32_t k = (*fo)[i];
      bool all_before = true, all_after = true;
      for (uint32_t j : t) {
        if (!hb.before(j, k)) all_before = false;
        if (!hb.before(k, j)) all_after = false;
      }
      if (all_before) hi = std::min(hi, static_cast<int>(i));
      if (all_after) lo = std::max(lo, static_cast<int>(i) + 1);
    }
    int chosen = -1;
    for (int c : admissible) {
      if (c >= lo && c <= hi) {
        chosen = c;
        break;
      }
    }
    if (chosen < 0) {
      bool b_ok = std::any_of(admissible.begin(), admissible.end(),
                              [&](int c) { return c <= hi; });
      v.clause = b_ok ? "c" : "b";
      v.tree = ti;
      v.detail = b_ok ? "the whole trace follows an update but only earlier configurations fit"
                      : "the whole trace precedes an update but only later configurations fit";
      return v;
    }
    v.tree_config[ti] = chosen;
  }
  v.accepted = true;
  for (const auto& e : u.events) v.witness_events.push_back(e.eid);
  return v;
}

Verdict check_trace(const Topology& topo, const NetworkTrace& ntr, const Nes& nes) {
  const auto& events = nes.events();
  auto seqs = nes.allowed_sequences(events.size());
  std::optional<Verdict> best_reject;
  size_t best_progress = 0;
  for (const auto& seq : seqs) {
    UpdateSequence u;
    EventMask m = 0;
    u.configs.push_back(&nes.config_of(m));
    for (uint32_t e : seq) {
      u.events.push_back(events[e]);
      m |= EventMask{1} << e;
      u.configs.push_back(&nes.config_of(m));
    }
    u.universe = events;
    Verdict v = check_ecu(topo, ntr, u);
    if (v.accepted) return v;
    size_t progress = v.clause == "no-first-occurrence" ? seq.size() : seq.size() + 1000;
    if (!best_reject || progress > best_progress) {
      best_reject = std::move(v);
      best_progress = progress;
    }
  }
  return *best_reject;  // allowed_sequences always contains the empty sequence
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

namespace {

// Happens-before re-derived directly: generator pairs, then a plain
// Floyd-Warshall closure.
std::vector<std::vector<bool>> oracle_hb(const NetworkTrace& ntr) {
  const size_t n = ntr.lps.size();
  std::vector<std::vector<bool>> rel(n, std::vector<bool>(n, false));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (ntr.lps[i].loc.sw == ntr.lps[j].loc.sw) rel[i][j] = true;
  for (const auto& t : ntr.trees)
    for (size_t a = 0; a < t.size(); ++a)
      for (size_t b = a + 1; b < t.size(); ++b) rel[t[a]][t[b]] = true;
  for (size_t m = 0; m < n; ++m)
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        if (rel[i][m] && rel[m][j]) rel[i][j] = true;
  return rel;
}

void enumerate_sequences(size_t n_events, std::vector<std::vector<uint32_t>>& out) {
  out.push_back({});
  std::vector<uint32_t> cur;
  std::vector<bool> used(n_events, false);
  auto rec = [&](auto&& self) -> void {
    if (cur.size() == n_events) return;
    for (uint32_t e = 0; e < n_events; ++e) {
      if (used[e]) continue;
      used[e] = true;
      cur.push_back(e);
      out.push_back(cur);
      self(self);
      cur.pop_back();
      used[e] = false;
    }
  };
  rec(rec);
}

}  // namespace

Verdict brute_force_oracle(const Topology& topo, const NetworkTrace& ntr, const Nes& nes) {
  if (ntr.lps.size() > 12) throw SemanticError("oracle bound exceeded: more than 12 packets");
  if (nes.events().size() > 4) throw SemanticError("oracle bound exceeded: more than 4 events");

  const auto& events = nes.events();
  auto hb = oracle_hb(ntr);
  std::vector<std::vector<uint32_t>> seqs;
  enumerate_sequences(events.size(), seqs);

  Verdict reject;
  reject.clause = "no-witness";
  reject.detail = "no allowed event sequence makes the trace consistent";

  for (const auto& seq : seqs) {
    // Allowed-by check straight from the definitions.
    bool allowed = true;
    EventMask m = 0;
    for (uint32_t e : seq) {
      if (!nes.entails(m, e) || !nes.consistent(m | (EventMask{1} << e))) {
        allowed = false;
        break;
      }
      m |= EventMask{1} << e;
    }
    if (!allowed) continue;

    std::vector<EventMask> prefix_sets{0};
    m = 0;
    for (uint32_t e : seq) {
      m |= EventMask{1} << e;
      prefix_sets.push_back(m);
    }

    // First occurrences, re-derived.
    std::vector<uint32_t> ks;
    bool fo_ok = true;
    int64_t prev = -1;
    for (size_t i = 0; i < seq.size() && fo_ok; ++i) {
      int64_t found = -1;
      for (uint32_t j = static_cast<uint32_t>(prev + 1); j < ntr.lps.size(); ++j) {
        if (matches(ntr.lps[j], events[seq[i]])) {
          found = j;
          break;
        }
      }
      if (found < 0) {
        fo_ok = false;
        break;
      }
      bool trig = false;
      for (uint32_t ti : ntr.trees_containing(static_cast<uint32_t>(found)))
        if (trace_producible(topo, nes.config_of(prefix_sets[i]), ntr.path_packets(ntr.trees[ti])))
          trig = true;
      if (!trig) {
        fo_ok = false;
        break;
      }
      ks.push_back(static_cast<uint32_t>(found));
      prev = found;
    }
    if (fo_ok) {
      for (uint32_t j = static_cast<uint32_t>(prev + 1); j < ntr.lps.size() && fo_ok; ++j)
        for (const auto& e : events)
          if (matches(ntr.lps[j], e)) fo_ok = false;
    }
    if (!fo_ok) continue;

    // Per-tree configuration assignment, enumerated exhaustively.
    bool all_trees_ok = true;
    std::map<uint32_t, int> assign;
    for (uint32_t ti = 0; ti < ntr.trees.size() && all_trees_ok; ++ti) {
      const auto& t = ntr.trees[ti];
      int found = -1;
      for (size_t c = 0; c < prefix_sets.size() && found < 0; ++c) {
        if (!trace_producible(topo, nes.config_of(prefix_sets[c]), ntr.path_packets(t))) continue;
        bool ok = true;
        for (size_t i = 0; i < ks.size() && ok; ++i) {
          bool all_before = true, all_after = true;
          for (uint32_t j : t) {
            if (!hb[j][ks[i]]) all_before = false;
            if (!hb[ks[i]][j]) all_after = false;
          }
          if (all_before && c > i) ok = false;
          if (all_after && c < i + 1) ok = false;
        }
        if (ok) found = static_cast<int>(c);
      }
      if (found < 0)
        all_trees_ok = false;
      else
        assign[ti] = found;
    }
    if (all_trees_ok) {
      Verdict v;
      v.accepted = true;
      for (uint32_t e : seq) v.witness_events.push_back(events[e].eid);
      v.tree_config = std::move(assign);
      return v;
    }
  }
  return reject;
}

}  // namespace evnet
