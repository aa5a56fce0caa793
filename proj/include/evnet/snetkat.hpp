#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evnet/netcore.hpp"

// Stateful NetKAT: abstract syntax, concrete-syntax parser, per-state
// configuration projection, policy evaluation, and event-edge extraction.

namespace evnet {

using StateVec = std::vector<Value>;
std::string state_str(const StateVec& k);

struct Test;
using TestPtr = std::shared_ptr<const Test>;

struct Test {
  enum class Kind { True, False, FieldEq, PtEq, SwEq, StateEq, And, Or, Not };
  Kind kind = Kind::True;
  FieldId field = 0;
  uint32_t index = 0;  // state vector index
  Value value = 0;
  TestPtr a, b;

  static TestPtr mk_true();
  static TestPtr mk_false();
  static TestPtr field_eq(FieldId f, Value v);
  static TestPtr pt_eq(Value v);
  static TestPtr sw_eq(Value v);
  static TestPtr state_eq(uint32_t idx, Value v);
  static TestPtr negate(TestPtr t);
  static TestPtr conj(TestPtr a, TestPtr b);
  static TestPtr disj(TestPtr a, TestPtr b);
};

struct Cmd;
using CmdPtr = std::shared_ptr<const Cmd>;

struct Cmd {
  enum class Kind { TestC, AssignField, AssignPt, Union, Seq, Star, Link, LinkState };
  Kind kind = Kind::TestC;
  TestPtr test;
  FieldId field = 0;
  Value value = 0;
  CmdPtr a, b;
  Location lsrc, ldst;
  uint32_t st_index = 0;  // LinkState target index
  Value st_value = 0;     // LinkState assigned value
  int pos = 0;            // stable syntactic position of Link/LinkState nodes

  static CmdPtr test_c(TestPtr t);
  static CmdPtr assign_field(FieldId f, Value v);
  static CmdPtr assign_pt(Value v);
  static CmdPtr seq(CmdPtr a, CmdPtr b);
  static CmdPtr uni(CmdPtr a, CmdPtr b);
  static CmdPtr star(CmdPtr a);
  static CmdPtr link(Location s, Location d, int pos);
  static CmdPtr link_state(Location s, Location d, uint32_t m, Value n, int pos);
};

struct Program {
  CmdPtr root;
  size_t state_len = 0;  // max state index + 1 (0 for stateless programs)
  // Per-index values appearing in state tests and assignments.
  std::vector<std::set<Value>> state_values;
  bool has_state() const { return state_len > 0; }
};

// Concrete syntax: `&`, `|`, `!`, `;`, `+`, postfix `*`, `x<-n`,
// `(a:b)->(c:d)` and `(a:b)->(c:d)<state(m)<-n>`; `state=[v,...]` sugars the
// per-index conjunction and `state<-[v]` a single-index assignment. Host
// names resolve to addresses through the topology.
Program parse_program(const std::string& text, const Topology& topo);
Program load_program(const std::string& path, const Topology& topo);
std::string print_program(const Program& p, const Topology& topo);

// Rewrites state tests to true/false under k and drops state assignments from
// links; the result contains no state constructs.
Program project_config(const Program& p, const StateVec& k);

// Syntactic scan used by tests and validation.
bool mentions_state(const CmdPtr& c);

struct EvalResult {
  LocatedPacket lp;                 // end-to-end result
  std::vector<LocatedPacket> trail;  // ingress, each link arrival, final hop
  auto operator<=>(const EvalResult&) const = default;
};

// Standard policy semantics on located packets for state-free programs.
// Star is a finite fixpoint; exceeding the iteration cap is an error.
std::vector<EvalResult> eval_policy(const Topology& topo, const Program& p,
                                    const LocatedPacket& lp);

struct RawEdge {
  StateVec src;
  TestConjunction phi;
  Location at;  // event location: the link destination
  uint32_t st_index = 0;
  Value st_value = 0;
  int pos = 0;
  auto operator<=>(const RawEdge&) const = default;
};

struct ExtractResult {
  std::vector<RawEdge> edges;
  std::set<TestConjunction> conjs;
  int dropped_self_loops = 0;
};

// Walks the program from state k threading the running test conjunction phi;
// emits an event edge at every live state-assigning link. Location tests
// behave as true, field assignments strip and re-pin their field, and star
// iterates to a fixpoint (error past the cap).
ExtractResult extract_edges(const Program& p, const StateVec& k, const TestConjunction& phi);

struct StateSpace {
  std::vector<StateVec> all;        // value-set product, k0 included
  std::vector<StateVec> reachable;  // reachable from k0 via extracted edges
};

StateSpace state_space(const Program& p, const StateVec& k0);

// All-zero vector of the program's state length.
StateVec initial_state(const Program& p);

}  // namespace evnet
