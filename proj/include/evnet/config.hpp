#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evnet/netcore.hpp"

// Static forwarding state: prioritized per-switch match-action tables, and the
// induced one-step relation on located packets (switch processing fused with
// link traversal).

namespace evnet {

// Ingress-port constraint of a rule.
struct PortMatch {
  std::optional<PortId> eq;
  std::vector<PortId> ne;  // sorted
  bool admits(PortId p) const;
  bool add_eq(PortId p);  // false on contradiction
  bool add_ne(PortId p);
  bool implies(const PortMatch& other) const;
  std::optional<PortMatch> conjoin(const PortMatch& other) const;
  auto operator<=>(const PortMatch&) const = default;
  std::string str() const;
};

// One output copy: field writes applied in order, then emission on out_port.
struct Action {
  std::vector<std::pair<FieldId, Value>> writes;  // sorted by field
  PortId out_port = 0;
  auto operator<=>(const Action&) const = default;
};

struct Rule {
  PortMatch in_port;
  TestConjunction match;
  std::vector<Action> actions;  // sorted, deduplicated; multicast when >1
  uint32_t priority = 0;        // lower value = matched first
  auto operator<=>(const Rule&) const = default;
};

class Configuration {
 public:
  int id = 0;
  std::map<SwitchId, std::vector<Rule>> tables;  // rules in priority order

  // Structural identity ignoring id; used to compare vertex labels.
  std::string canonical_key(const Topology& topo) const;
  bool same_behavior(const Configuration& other, const Topology& topo) const {
    return canonical_key(topo) == other.canonical_key(topo);
  }
  size_t rule_count() const;
  std::string dump(const Topology& topo) const;
};

// All one-step successors of lp under C: the first matching rule's outputs,
// carried across links where out ports are link sources; packets that match
// no rule drift across a link when sitting at a link source, mirroring the
// relation's unconditional link clause.
std::vector<LocatedPacket> apply_config(const Topology& topo, const Configuration& c,
                                        const LocatedPacket& lp);

// All maximal forwarding traces of length <= bound starting at lp0 (which
// must be host-attached). bound == 0 is an error.
std::vector<std::vector<LocatedPacket>> packet_traces(const Topology& topo, const Configuration& c,
                                                      const LocatedPacket& lp0, size_t bound);

// Membership of a recorded packet trace: starts at a host and every
// consecutive pair is a one-step successor. Prefixes of longer traces count.
bool trace_producible(const Topology& topo, const Configuration& c,
                      const std::vector<LocatedPacket>& lps);

}  // namespace evnet
