#include "evnet/nes.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <sstream>

namespace evnet {

Nes::Nes(std::vector<Event> events, std::vector<EventMask> family,
         std::map<EventMask, Configuration> g)
    : events_(std::move(events)), family_(std::move(family)), g_(std::move(g)) {
  std::sort(family_.begin(), family_.end());
  family_.erase(std::unique(family_.begin(), family_.end()), family_.end());
  if (family_.empty() || family_.front() != 0)
    throw SemanticError("event-set family must contain the empty set");
  for (EventMask m : family_)
    if (!g_.count(m)) throw SemanticError("g undefined on an event set of the structure");

  // Dense ids in breadth-first order from the empty set; the empty set gets
  // id 0 so version tags start at the initial configuration.
  std::deque<EventMask> queue{0};
  ids_[0] = 0;
  while (!queue.empty()) {
    EventMask x = queue.front();
    queue.pop_front();
    EventMask en = enabled_events(x);
    for (uint32_t e = 0; e < events_.size(); ++e) {
      if (!(en >> e & 1)) continue;
      EventMask y = x | (EventMask{1} << e);
      if (!std::binary_search(family_.begin(), family_.end(), y)) continue;
      if (ids_.emplace(y, static_cast<uint32_t>(ids_.size())).second) queue.push_back(y);
    }
  }
  for (EventMask m : family_)  // defensive: synthetic families may have
    ids_.emplace(m, static_cast<uint32_t>(ids_.size()));  // enabling-unreachable members
}

const Configuration& Nes::config_of(EventMask x) const {
  auto it = g_.find(x);
  if (it == g_.end()) throw SemanticError("g applied to a non event-set");
  return it->second;
}

uint32_t Nes::id_of(EventMask x) const {
  auto it = ids_.find(x);
  if (it == ids_.end()) throw SemanticError("id requested for a non event-set");
  return it->second;
}

EventMask Nes::mask_of_id(uint32_t id) const {
  for (const auto& [m, i] : ids_)
    if (i == id) return m;
  throw SemanticError("unknown configuration id " + std::to_string(id));
}

int Nes::guard_bits() const {
  int bits = 0;
  while ((size_t{1} << bits) < family_.size()) ++bits;
  return bits;
}

bool Nes::consistent(EventMask x) const {
  for (EventMask m : family_)
    if ((x & m) == x) return true;
  return false;
}

bool Nes::entails(EventMask x, uint32_t e) const {
  const EventMask bit = EventMask{1} << e;
  for (EventMask m : family_)
    if ((m & bit) && ((m & ~bit) & ~x) == 0) return true;
  return false;
}

bool Nes::is_event_set(EventMask x) const {
  if (!consistent(x)) return false;
  // Greedy securing: enabling is superset-closed, so the fixpoint covers
  // every securable event.
  EventMask got = 0;
  bool grew = true;
  while (grew) {
    grew = false;
    for (uint32_t e = 0; e < events_.size(); ++e) {
      EventMask bit = EventMask{1} << e;
      if (!(x & bit) || (got & bit)) continue;
      if (entails(got, e)) {
        got |= bit;
        grew = true;
      }
    }
  }
  return got == x;
}

std::vector<EventMask> Nes::event_sets() const {
  std::vector<EventMask> out;
  const EventMask full = events_.empty() ? 0 : (~EventMask{0} >> (64 - events_.size()));
  for (EventMask x = 0;; ++x) {
    if ((x & full) == x && is_event_set(x)) out.push_back(x);
    if (x == full) break;
  }
  return out;
}

EventMask Nes::enabled_events(EventMask x) const {
  if (!std::binary_search(family_.begin(), family_.end(), x) && !is_event_set(x))
    throw SemanticError("enabled_events: argument is not an event set");
  EventMask out = 0;
  for (uint32_t e = 0; e < events_.size(); ++e) {
    EventMask bit = EventMask{1} << e;
    if (x & bit) continue;
    if (entails(x, e) && consistent(x | bit)) out |= bit;
  }
  return out;
}

std::vector<std::vector<uint32_t>> Nes::allowed_sequences(size_t maxlen) const {
  std::vector<std::vector<uint32_t>> out{{}};
  struct Frame {
    EventMask set;
    std::vector<uint32_t> seq;
  };
  std::vector<Frame> stack{{0, {}}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.seq.size() >= maxlen) continue;
    EventMask en = enabled_events(f.set);
    for (uint32_t e = events_.size(); e-- > 0;) {
      if (!(en >> e & 1)) continue;
      Frame g;
      g.set = f.set | (EventMask{1} << e);
      g.seq = f.seq;
      g.seq.push_back(e);
      out.push_back(g.seq);
      stack.push_back(std::move(g));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EventMask> Nes::minimally_inconsistent_sets() const {
  std::vector<EventMask> out;
  const EventMask full = events_.empty() ? 0 : (~EventMask{0} >> (64 - events_.size()));
  for (EventMask x = 1;; ++x) {
    if (x > full) break;
    if ((x & full) != x) continue;
    if (consistent(x)) continue;
    bool minimal = true;
    for (uint32_t e = 0; e < events_.size() && minimal; ++e) {
      EventMask bit = EventMask{1} << e;
      if ((x & bit) && !consistent(x & ~bit)) minimal = false;
    }
    if (minimal) out.push_back(x);
  }
  return out;
}

Nes::Locality Nes::locally_determined() const {
  for (EventMask x : minimally_inconsistent_sets()) {
    std::optional<SwitchId> sw;
    for (uint32_t e = 0; e < events_.size(); ++e) {
      if (!(x >> e & 1)) continue;
      if (!sw) {
        sw = events_[e].sw;
      } else if (*sw != events_[e].sw) {
        return Locality{false, x};
      }
    }
  }
  return Locality{};
}

std::string Nes::dump(const Topology& topo) const {
  std::ostringstream os;
  os << "events:\n";
  for (uint32_t i = 0; i < events_.size(); ++i) os << "  e" << i << " = " << events_[i].str(topo) << "\n";
  os << "event-sets:\n";
  std::vector<std::pair<uint32_t, EventMask>> by_id;
  for (EventMask m : family_) by_id.emplace_back(id_of(m), m);
  std::sort(by_id.begin(), by_id.end());
  for (auto [id, m] : by_id)
    os << "  id " << id << " " << mask_str(m, events_, topo) << " rules "
       << config_of(m).rule_count() << "\n";
  return os.str();
}

Nes build_nes(const Topology& topo, const Ets& ets) {
  LoopCheck lc = check_loop_free(ets);
  if (!lc.ok) {
    std::string msg = "transition system has a cycle:";
    for (const auto& v : lc.cycle) msg += " " + state_str(v);
    throw SemanticError(msg);
  }
  EventSetFamily family = event_set_family(topo, ets);
  UniqueConfigCheck uc = check_unique_config(family);
  if (!uc.ok)
    throw SemanticError("event set " + mask_str(uc.offending, ets.events, topo) +
                        " reaches more than one configuration");
  FiniteCompleteCheck fc = check_finite_complete(family);
  if (!fc.ok)
    throw SemanticError("family is not finite-complete: " + mask_str(fc.a, ets.events, topo) +
                        " and " + mask_str(fc.b, ets.events, topo) + " are bounded by " +
                        mask_str(fc.upper, ets.events, topo) + " but their union " +
                        mask_str(fc.missing_union, ets.events, topo) + " is absent");

  std::vector<EventMask> masks;
  std::map<EventMask, Configuration> g;
  for (const auto& [mask, entry] : family.entries) {
    masks.push_back(mask);
    g.emplace(mask, ets.vertices.at(entry.terminal_vertex));
  }
  return Nes(ets.events, std::move(masks), std::move(g));
}

}  // namespace evnet
