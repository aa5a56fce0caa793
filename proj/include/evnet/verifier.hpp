#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evnet/config.hpp"
#include "evnet/nes.hpp"
#include "evnet/netcore.hpp"
#include "evnet/trace.hpp"

// Trace correctness: first-occurrence computation, the event-driven
// consistent-update clauses, acceptance against a network event structure,
// and a small brute-force oracle used to cross-check the checker.

namespace evnet {

struct UpdateSequence {
  std::vector<const Configuration*> configs;  // C0 .. C(n+1)
  std::vector<Event> events;                  // e0 .. en
  std::vector<Event> universe;
};

// The unique index sequence where each event first matches, each occurrence
// is triggered by a packet producible in the immediately preceding
// configuration, and no universe event matches afterwards.
std::optional<std::vector<uint32_t>> first_occurrences(const Topology& topo,
                                                       const NetworkTrace& ntr,
                                                       const UpdateSequence& u);

struct Verdict {
  bool accepted = false;
  std::vector<std::string> witness_events;   // eids, in order
  std::map<uint32_t, int> tree_config;       // tree index -> configuration index
  std::string clause;                        // violated clause when rejected
  std::optional<uint32_t> tree;              // offending tree (by smallest root)
  std::string detail;

  std::string str() const;
};

// A trace is accepted when the first occurrences exist and every root-to-leaf
// packet trace can be assigned a single configuration that is producible,
// no later than any update the whole trace precedes, and no earlier than any
// update that precedes the whole trace.
Verdict check_ecu(const Topology& topo, const NetworkTrace& ntr, const UpdateSequence& u);

// Correctness against a structure: some allowed event sequence (the empty one
// included) makes the induced update sequence accept the trace.
Verdict check_trace(const Topology& topo, const NetworkTrace& ntr, const Nes& nes);

// Exhaustive re-derivation from the definitions with its own happens-before
// closure and clause evaluation; restricted to 12 packets and 4 events.
// Must agree with check_trace everywhere in bounds.
Verdict brute_force_oracle(const Topology& topo, const NetworkTrace& ntr, const Nes& nes);

}  // namespace evnet
