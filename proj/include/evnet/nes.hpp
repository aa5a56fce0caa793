#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evnet/config.hpp"
#include "evnet/ets.hpp"
#include "evnet/netcore.hpp"

// Network event structures: consistency predicate and enabling relation over
// a finite family of event sets, the configuration map g and dense integer
// ids per event set.

namespace evnet {

class Nes {
 public:
  // Builds the structure from an explicit family (closed-world): con(X) holds
  // iff X is covered by a family member, and X |- e iff some member contains
  // e and is otherwise contained in X.
  Nes(std::vector<Event> events, std::vector<EventMask> family,
      std::map<EventMask, Configuration> g);

  const std::vector<Event>& events() const { return events_; }
  const std::vector<EventMask>& family() const { return family_; }
  const Configuration& config_of(EventMask x) const;
  uint32_t id_of(EventMask x) const;
  EventMask mask_of_id(uint32_t id) const;
  size_t set_count() const { return family_.size(); }
  int guard_bits() const;  // ceil(log2(set_count))

  bool consistent(EventMask x) const;
  bool entails(EventMask x, uint32_t e) const;
  bool is_event_set(EventMask x) const;
  // Event sets per the reachability definition; equals the family for
  // structures built from transition systems.
  std::vector<EventMask> event_sets() const;
  // Events e not in x with x |- e and con(x | e); errors if x is not an
  // event set.
  EventMask enabled_events(EventMask x) const;
  std::vector<std::vector<uint32_t>> allowed_sequences(size_t maxlen) const;

  std::vector<EventMask> minimally_inconsistent_sets() const;

  struct Locality {
    bool ok = true;
    EventMask witness = 0;
  };
  // Accepts iff every minimally-inconsistent set happens at one switch.
  Locality locally_determined() const;

  std::string dump(const Topology& topo) const;

 private:
  std::vector<Event> events_;
  std::vector<EventMask> family_;  // sorted, includes 0
  std::map<EventMask, Configuration> g_;
  std::map<EventMask, uint32_t> ids_;
};

// Validates the three conversion conditions and assembles the structure; any
// failed check raises with the witness rendered into the message.
Nes build_nes(const Topology& topo, const Ets& ets);

}  // namespace evnet
