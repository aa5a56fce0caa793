#include <algorithm>
#include <random>

#include "doctest.h"
#include "evnet/config.hpp"
#include "evnet/flowopt.hpp"
#include "evnet/snetkat.hpp"
#include "evnet/trace.hpp"
#include "support.hpp"

using namespace evnet;
using testsup::at;
using testsup::corpus;
using testsup::mk_packet;

TEST_CASE("topology parsing") {
  Topology topo = load_topology(corpus("pair.topo"));
  CHECK(topo.fields == std::vector<std::string>{"ip_src", "ip_dst"});
  CHECK(topo.switches.size() == 2);
  CHECK(topo.switches.at(4).count(2) == 1);
  CHECK(topo.host_named("H4")->addr == 4);
  CHECK(topo.host_named("H4")->loc == Location{4, 2});
  CHECK(topo.is_host_location(Location{1, 2}));
  CHECK(!topo.is_host_location(Location{1, 1}));
  CHECK(topo.link_from(Location{1, 1}) == Location{4, 1});
  CHECK(topo.resolve_value("H1") == 1);
  CHECK(topo.resolve_value("17") == 17);
  CHECK_THROWS_AS(topo.resolve_value("H9"), ParseError);
  CHECK_THROWS_AS(parse_topology("host X at 1:1"), SemanticError);
  CHECK_THROWS_AS(parse_topology("switch 1 ports 1\nlink 1:1 -> 2:2"), SemanticError);
}

TEST_CASE("conjunctions") {
  TestConjunction c;
  CHECK(c.add(Literal{0, Rel::Eq, 4}));
  CHECK(!c.conjoin([] {
           TestConjunction d;
           d.add(Literal{0, Rel::Eq, 5});
           return d;
         }()).satisfiable());
  TestConjunction d;
  d.add(Literal{0, Rel::Ne, 5});
  CHECK(c.implies(d));  // f=4 entails f!=5
  CHECK(!d.implies(c));
  TestConjunction e;
  e.add(Literal{1, Rel::Ne, 2});
  CHECK(!c.implies(e));
  CHECK(c.conjoin(e).satisfiable());

  // Unsatisfiable after contradictory inequality.
  TestConjunction f;
  f.add(Literal{0, Rel::Ne, 4});
  CHECK(!c.conjoin(f).satisfiable());

  Packet pkt;
  pkt.set(0, 4);
  CHECK(c.satisfied_by(pkt));
  CHECK(d.satisfied_by(pkt));
  Packet empty;
  CHECK(!c.satisfied_by(empty));  // absent-field equality fails
  CHECK(d.satisfied_by(empty));   // absent-field inequality holds
}

TEST_CASE("event matching") {
  Topology topo = load_topology(corpus("pair.topo"));
  Event e;
  e.phi.add(Literal{*topo.field_id("ip_dst"), Rel::Eq, 4});
  e.sw = 4;
  e.pt = 1;
  Packet to_h4 = mk_packet(topo, 1, 4);
  Packet to_h1 = mk_packet(topo, 4, 1);
  CHECK(matches(at(to_h4, 4, 1), e));
  CHECK(!matches(at(to_h4, 4, 3), e));  // location mismatch
  CHECK(!matches(at(to_h1, 4, 1), e));  // guard fails
}

namespace {

Configuration firewall_config(const Topology& topo, const Program& p, Value state) {
  return compile_config(topo, project_config(p, {state}), static_cast<int>(state)).config;
}

}  // namespace

TEST_CASE("one-step successors") {
  Topology topo = load_topology(corpus("pair.topo"));
  Program fw = load_program(corpus("firewall.snk"), topo);
  Configuration c0 = firewall_config(topo, fw, 0);

  Packet to_h4 = mk_packet(topo, 1, 4);
  // Pure link traversal for a packet sitting at a link source.
  auto fromlink = apply_config(topo, c0, at(to_h4, 1, 1));
  REQUIRE(fromlink.size() == 1);
  CHECK(fromlink[0] == at(to_h4, 4, 1));

  // No matching rule and no link: dropped.
  Packet to_h1 = mk_packet(topo, 4, 1);
  CHECK(apply_config(topo, c0, at(to_h1, 4, 2)).empty());

  CHECK_THROWS_AS(apply_config(topo, c0, at(to_h1, 7, 1)), SemanticError);

  // Multicast flood in the learning switch's initial configuration.
  Topology topo3 = load_topology(corpus("triple.topo"));
  Program ls = load_program(corpus("learning.snk"), topo3);
  Configuration lc0 = firewall_config(topo3, ls, 0);
  Packet flood = mk_packet(topo3, 4, 1);
  auto succ = apply_config(topo3, lc0, at(flood, 4, 2));
  REQUIRE(succ.size() == 2);
  CHECK(succ[0] == at(flood, 1, 1));
  CHECK(succ[1] == at(flood, 2, 1));
}

TEST_CASE("packet traces") {
  Topology topo = load_topology(corpus("pair.topo"));
  Program fw = load_program(corpus("firewall.snk"), topo);
  Configuration c0 = firewall_config(topo, fw, 0);

  Packet to_h4 = mk_packet(topo, 1, 4);
  auto traces = packet_traces(topo, c0, at(to_h4, 1, 2), 8);
  REQUIRE(traces.size() == 1);
  CHECK(traces[0] == std::vector<LocatedPacket>{at(to_h4, 1, 2), at(to_h4, 4, 1), at(to_h4, 4, 2)});

  Packet to_h1 = mk_packet(topo, 4, 1);
  auto dropped = packet_traces(topo, c0, at(to_h1, 4, 2), 8);
  REQUIRE(dropped.size() == 1);
  CHECK(dropped[0] == std::vector<LocatedPacket>{at(to_h1, 4, 2)});

  CHECK_THROWS_AS(packet_traces(topo, c0, at(to_h4, 1, 2), 0), SemanticError);
  CHECK_THROWS_AS(packet_traces(topo, c0, at(to_h4, 1, 1), 8), SemanticError);

  Topology topo3 = load_topology(corpus("triple.topo"));
  Program ls = load_program(corpus("learning.snk"), topo3);
  Configuration lc0 = firewall_config(topo3, ls, 0);
  Packet flood = mk_packet(topo3, 4, 1);
  auto branches = packet_traces(topo3, lc0, at(flood, 4, 2), 8);
  CHECK(branches.size() == 2);  // one branch toward each host

  CHECK(trace_producible(topo, c0, {at(to_h4, 1, 2), at(to_h4, 4, 1)}));   // prefix counts
  CHECK(!trace_producible(topo, c0, {at(to_h1, 4, 2), at(to_h1, 1, 1)}));  // dropped traffic
}

TEST_CASE("network trace structure") {
  Topology topo = load_topology(corpus("pair.topo"));
  Program fw = load_program(corpus("firewall.snk"), topo);
  Configuration c0 = firewall_config(topo, fw, 0);
  std::vector<const Configuration*> configs{&c0};

  CHECK(is_network_trace(topo, NetworkTrace{}, configs));

  Packet to_h4 = mk_packet(topo, 1, 4);
  NetworkTrace good;
  good.lps = {at(to_h4, 1, 2), at(to_h4, 4, 1), at(to_h4, 4, 2)};
  good.trees = {{0, 1, 2}};
  CHECK(is_network_trace(topo, good, configs));

  NetworkTrace uncovered = good;
  uncovered.trees = {{0, 1}};  // index 2 in no path
  CHECK(!is_network_trace(topo, uncovered, configs));

  NetworkTrace midstart = good;
  midstart.trees = {{1, 2}, {0, 1, 2}};  // a path rooted away from a host
  CHECK(!is_network_trace(topo, midstart, configs));

  NetworkTrace two_parents = good;
  two_parents.lps.push_back(at(to_h4, 1, 2));
  two_parents.trees = {{0, 1, 2}, {3, 1}};  // strictly-increasing violated
  CHECK(!is_network_trace(topo, two_parents, configs));
}

TEST_CASE("happens-before") {
  Topology topo = load_topology(corpus("pair.topo"));
  Packet a = mk_packet(topo, 1, 4), b = mk_packet(topo, 4, 1);

  NetworkTrace ntr;
  ntr.lps = {at(a, 1, 2), at(b, 4, 2), at(a, 4, 1), at(a, 4, 2)};
  ntr.trees = {{0, 2, 3}, {1}};
  HappensBefore hb(ntr);
  CHECK(hb.before(1, 2));   // same switch, earlier index
  CHECK(!hb.before(2, 1));  // antisymmetric
  CHECK(hb.before(0, 2));   // same tree
  CHECK(hb.before(0, 3));   // transitive through the tree
  CHECK(hb.before(1, 3));   // switch order then tree order
  CHECK(!hb.before(0, 1));  // different switch, different tree
  for (uint32_t i = 0; i < 4; ++i) CHECK(!hb.before(i, i));
}

TEST_CASE("happens-before is a strict partial order on random traces") {
  auto cases = testsup::load_corpus();
  std::mt19937_64 rng(7);
  for (int round = 0; round < 60; ++round) {
    const auto& c = cases[round % cases.size()];
    NetworkTrace ntr = testsup::random_trace(c.topo, c.nes, rng);
    REQUIRE(is_network_trace(c.topo, ntr, {}));
    HappensBefore hb(ntr);
    const uint32_t n = static_cast<uint32_t>(ntr.lps.size());
    // Oracle: naive closure over the generator pairs.
    std::vector<std::vector<bool>> ref(n, std::vector<bool>(n, false));
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t j = i + 1; j < n; ++j)
        if (ntr.lps[i].loc.sw == ntr.lps[j].loc.sw) ref[i][j] = true;
    for (const auto& t : ntr.trees)
      for (size_t x = 0; x < t.size(); ++x)
        for (size_t y = x + 1; y < t.size(); ++y) ref[t[x]][t[y]] = true;
    for (uint32_t m = 0; m < n; ++m)
      for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < n; ++j)
          if (ref[i][m] && ref[m][j]) ref[i][j] = true;
    for (uint32_t i = 0; i < n; ++i) {
      CHECK(!hb.before(i, i));
      for (uint32_t j = 0; j < n; ++j) {
        CHECK(hb.before(i, j) == ref[i][j]);
        if (hb.before(i, j)) CHECK(!hb.before(j, i));
      }
    }
  }
}

TEST_CASE("trace serialization round-trips") {
  Topology topo = load_topology(corpus("triple.topo"));
  Program ls = load_program(corpus("learning.snk"), topo);
  Configuration c0 = firewall_config(topo, ls, 0);
  Packet flood = mk_packet(topo, 4, 1);
  NetworkTrace ntr;
  ntr.lps = {at(flood, 4, 2), at(flood, 1, 1), at(flood, 2, 1)};
  ntr.trees = {{0, 1}, {0, 2}};
  std::string text = serialize_trace(topo, ntr);
  NetworkTrace back = parse_trace(topo, text);
  CHECK(back.lps == ntr.lps);
  CHECK(back.trees == ntr.trees);
  CHECK(serialize_trace(topo, back) == text);
}
