#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "evnet/nes.hpp"
#include "evnet/netcore.hpp"
#include "evnet/trace.hpp"

// Interleaving simulator for the switch/controller runtime: packets carry a
// version tag selecting guarded tables and a digest spreading event
// knowledge; one scheduler-chosen rule fires per step. The uncoordinated mode
// drops the tagging machinery and swaps whole configurations after a delay.

namespace evnet {

enum class SimMode { Nes, Uncoordinated };

struct Injection {
  uint32_t host = 0;  // index into Topology::hosts
  Packet pkt;
};

// Barrier markers in the scenario split injections into phases; a phase opens
// only once packet queues have drained (and, in tagged mode, the controller
// has caught up). Pending uncoordinated pushes deliberately keep racing.
struct Scenario {
  std::vector<std::vector<Injection>> phases;
};

Scenario parse_scenario(const Topology& topo, const std::string& text);
Scenario load_scenario(const Topology& topo, const std::string& path);

struct SimOptions {
  uint64_t seed = 0;
  SimMode mode = SimMode::Nes;
  uint64_t delay_steps = 10;  // uncoordinated: detection-to-push delay
  bool ctrl_broadcast = false;
  uint64_t max_steps = 200000;
};

struct InjectionOutcome {
  uint32_t phase = 0;
  uint32_t index = 0;  // within the phase
  uint32_t host = 0;
  uint32_t root_entry = 0;
  std::vector<Location> delivered;
};

struct LearnRecord {
  SwitchId sw = 0;
  uint32_t event = 0;
  uint64_t step = 0;
  auto operator<=>(const LearnRecord&) const = default;
};

struct SimStats {
  uint64_t steps = 0;
  bool complete = true;                // quiesced before the step cap
  bool global_consistency_ok = true;   // controller queue+set stays consistent
  bool local_sets_ok = true;           // switch sets stay event sets
  std::vector<InjectionOutcome> outcomes;
  std::vector<LearnRecord> learn;
  uint64_t delivered_count = 0;
  uint64_t dropped_count = 0;

  std::optional<uint64_t> max_learn_step() const;
  std::string summary(const Topology& topo) const;
};

struct SimResult {
  NetworkTrace trace;
  SimStats stats;
};

// Refuses structures that are not locally determined (they cannot be
// implemented without synchronizing switches).
SimResult simulate(const Topology& topo, const Nes& nes, const Scenario& scenario,
                   const SimOptions& opts);

// Injections delivered under `reference` but dropped under `run`, matched by
// (phase, index).
uint64_t count_incorrect_drops(const SimStats& reference, const SimStats& run);

// Platform-stable bounded draw (uniform_int_distribution is not portable).
size_t uniform_below(std::mt19937_64& rng, size_t n);

}  // namespace evnet
