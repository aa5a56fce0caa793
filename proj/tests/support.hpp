#pragma once

// Shared fixtures for the test suites: corpus loading, packet construction
// and the random-trace generator used to cross-check the verifier.

#include <random>
#include <string>
#include <vector>

#include "evnet/config.hpp"
#include "evnet/ets.hpp"
#include "evnet/nes.hpp"
#include "evnet/netcore.hpp"
#include "evnet/simulator.hpp"
#include "evnet/snetkat.hpp"
#include "evnet/trace.hpp"

namespace testsup {

using namespace evnet;

inline std::string corpus(const std::string& name) {
  return std::string(EVNET_CORPUS_DIR) + "/" + name;
}

struct Case {
  std::string name;
  Topology topo;
  Program program;
  Ets ets;
  Nes nes;
  std::string scenario_path;
};

inline Case load_case(const std::string& program_file, const std::string& topo_file,
                      const std::string& scenario_file = "") {
  Case c{program_file, load_topology(corpus(topo_file)), {}, {}, Nes({}, {0}, {{0, {}}}), ""};
  c.program = load_program(corpus(program_file), c.topo);
  c.ets = build_ets(c.topo, c.program, initial_state(c.program));
  c.nes = build_nes(c.topo, c.ets);
  if (!scenario_file.empty()) c.scenario_path = corpus(scenario_file);
  return c;
}

inline std::vector<Case> load_corpus() {
  std::vector<Case> out;
  out.push_back(load_case("firewall.snk", "pair.topo", "firewall_pattern.scn"));
  out.push_back(load_case("learning.snk", "triple.topo", "learning_pattern.scn"));
  out.push_back(load_case("auth.snk", "star.topo", "auth_pattern.scn"));
  out.push_back(load_case("bwcap.snk", "pair.topo", "bwcap_pattern.scn"));
  out.push_back(load_case("ids.snk", "star.topo", "ids_pattern.scn"));
  return out;
}

inline Packet mk_packet(const Topology& topo, Value src, Value dst) {
  Packet p;
  p.set(*topo.field_id("ip_src"), src);
  p.set(*topo.field_id("ip_dst"), dst);
  return p;
}

inline LocatedPacket at(const Packet& p, SwitchId sw, PortId pt) {
  return LocatedPacket{p, Location{sw, pt}};
}

// Random network traces within the oracle bounds: per tree a random walk
// under one or several configurations (mixing configurations manufactures
// traces no single configuration can produce), randomly interleaved.
inline NetworkTrace random_trace(const Topology& topo, const Nes& nes, std::mt19937_64& rng) {
  std::vector<const Configuration*> configs;
  for (EventMask m : nes.family()) configs.push_back(&nes.config_of(m));
  std::vector<Value> addrs;
  for (const auto& h : topo.hosts) addrs.push_back(h.addr);
  addrs.push_back(9);  // junk destination

  const size_t n_trees = 1 + rng() % 3;
  std::vector<std::vector<LocatedPacket>> paths;
  for (size_t t = 0; t < n_trees; ++t) {
    const Host& h = topo.hosts[rng() % topo.hosts.size()];
    Packet pkt = mk_packet(topo, addrs[rng() % addrs.size()], addrs[rng() % addrs.size()]);
    LocatedPacket lp{pkt, h.loc};
    std::vector<LocatedPacket> path{lp};
    const Configuration* cfg = configs[rng() % configs.size()];
    while (path.size() < 4 && rng() % 4 != 0) {
      auto succ = apply_config(topo, *cfg, path.back());
      if (succ.empty()) break;
      path.push_back(succ[rng() % succ.size()]);
      if (rng() % 3 == 0) cfg = configs[rng() % configs.size()];
    }
    paths.push_back(std::move(path));
  }

  NetworkTrace ntr;
  ntr.trees.assign(paths.size(), {});
  std::vector<size_t> cursor(paths.size(), 0);
  while (true) {
    std::vector<size_t> open;
    for (size_t t = 0; t < paths.size(); ++t)
      if (cursor[t] < paths[t].size()) open.push_back(t);
    if (open.empty()) break;
    size_t t = open[rng() % open.size()];
    ntr.trees[t].push_back(static_cast<uint32_t>(ntr.lps.size()));
    ntr.lps.push_back(paths[t][cursor[t]++]);
  }
  return ntr;
}

}  // namespace testsup
