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

// Event-driven transition systems: state-vector vertices labeled with
// compiled configurations, event-labeled edges, and the structural checks
// that license conversion to a network event structure.

namespace evnet {

struct EtsEdge {
  StateVec src;
  StateVec dst;
  uint32_t event = 0;  // index into Ets::events
  auto operator<=>(const EtsEdge&) const = default;
};

struct Ets {
  std::map<StateVec, Configuration> vertices;  // reachable from v0
  std::vector<Event> events;                   // canonical order; ids fit in 64 bits
  std::vector<EtsEdge> edges;
  StateVec v0;
  std::vector<std::string> diagnostics;  // dropped self-loops etc.

  std::string dump(const Topology& topo) const;
};

// Projects and compiles a configuration per reachable state vector and
// extracts the event edges between them. Events take their guard and location
// from the extraction and a stable positional identifier; identity edges are
// dropped with a diagnostic.
Ets build_ets(const Topology& topo, const Program& p, const StateVec& k0);

struct LoopCheck {
  bool ok = true;
  std::vector<StateVec> cycle;  // witness when !ok
};
LoopCheck check_loop_free(const Ets& ets);

using EventMask = uint64_t;

struct FamilyEntry {
  std::set<std::string> terminal_keys;  // canonical configuration keys
  StateVec terminal_vertex;             // witness terminal for g
  std::vector<uint32_t> witness_path;   // events along one witness path
};

struct EventSetFamily {
  std::map<EventMask, FamilyEntry> entries;
};

// Enumerates all paths from v0 (including the empty one) and groups terminal
// configurations per collected event set. Requires a loop-free ETS.
EventSetFamily event_set_family(const Topology& topo, const Ets& ets);

struct UniqueConfigCheck {
  bool ok = true;
  EventMask offending = 0;
  std::vector<std::string> keys;
};
UniqueConfigCheck check_unique_config(const EventSetFamily& family);

struct FiniteCompleteCheck {
  bool ok = true;
  EventMask a = 0, b = 0;      // witness subfamily
  EventMask missing_union = 0; // a|b, absent from the family
  EventMask upper = 0;         // family member containing both
};
// Pairwise bounded-union closure; equivalent to the general condition by
// induction on subfamily size (tests confirm against brute force).
FiniteCompleteCheck check_finite_complete(const EventSetFamily& family);

std::string mask_str(EventMask m, const std::vector<Event>& events, const Topology& topo);

}  // namespace evnet
