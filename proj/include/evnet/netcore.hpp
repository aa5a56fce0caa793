#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

// Core network model: packets, locations, topologies, events and the
// field-test conjunctions shared by rule matches and event guards.

namespace evnet {

using SwitchId = uint32_t;
using PortId = uint32_t;
using FieldId = uint32_t;
using Value = uint64_t;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SemanticError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Location {
  SwitchId sw = 0;
  PortId pt = 0;
  auto operator<=>(const Location&) const = default;
  std::string str() const;
};

struct Host {
  std::string name;
  Location loc;
  Value addr = 0;
};

// Declares the field universe, switches with their ports, host attachment
// points and directed links. Host names double as numeric field values.
class Topology {
 public:
  std::vector<std::string> fields;
  std::map<SwitchId, std::set<PortId>> switches;
  std::vector<Host> hosts;
  std::map<Location, Location> links;

  std::optional<FieldId> field_id(const std::string& name) const;
  const std::string& field_name(FieldId f) const { return fields.at(f); }
  const Host* host_named(const std::string& name) const;
  const Host* host_at(Location loc) const;
  bool has_location(Location loc) const;
  bool is_host_location(Location loc) const;
  std::optional<Location> link_from(Location loc) const;

  // Resolves an identifier appearing in value position (host name) or a
  // numeric literal.
  Value resolve_value(const std::string& token) const;
};

// Line-oriented format:
//   fields f1,f2,...
//   switch <id> ports <p1,p2,...>
//   host <name> at <sw>:<pt> [addr <n>]
//   link <sw>:<pt> -> <sw>:<pt>
Topology parse_topology(const std::string& text);
Topology load_topology(const std::string& path);

// A packet is a finite map from declared fields to numeric values. Tests on
// absent fields fail.
class Packet {
 public:
  Packet() = default;
  std::optional<Value> get(FieldId f) const;
  void set(FieldId f, Value v);
  const std::vector<std::pair<FieldId, Value>>& entries() const { return fields_; }
  auto operator<=>(const Packet&) const = default;
  std::string str(const Topology& topo) const;

 private:
  std::vector<std::pair<FieldId, Value>> fields_;  // sorted by field id
};

struct LocatedPacket {
  Packet pkt;
  Location loc;
  auto operator<=>(const LocatedPacket&) const = default;
};

enum class Rel : uint8_t { Eq, Ne };

struct Literal {
  FieldId field = 0;
  Rel rel = Rel::Eq;
  Value value = 0;
  auto operator<=>(const Literal&) const = default;
};

// Conjunction of field literals in canonical form. Contradictory literal
// pairs make the conjunction unsatisfiable, which callers either prune or
// treat as an always-false match.
class TestConjunction {
 public:
  TestConjunction() = default;

  // Returns false if the added literal contradicts an existing one.
  bool add(Literal lit);
  bool satisfiable() const { return sat_; }
  const std::vector<Literal>& literals() const { return lits_; }

  bool satisfied_by(const Packet& pkt) const;
  // Conjunction of *this and other; unsatisfiable result has sat()==false.
  TestConjunction conjoin(const TestConjunction& other) const;
  // True when every packet satisfying *this also satisfies other.
  bool implies(const TestConjunction& other) const;
  bool entails_literal(const Literal& lit) const;
  // Removes every literal mentioning f.
  TestConjunction without_field(FieldId f) const;

  auto operator<=>(const TestConjunction&) const = default;
  std::string str(const Topology& topo) const;

 private:
  std::vector<Literal> lits_;  // sorted, deduplicated
  bool sat_ = true;
};

struct Event {
  TestConjunction phi;
  SwitchId sw = 0;
  PortId pt = 0;
  std::string eid;
  auto operator<=>(const Event&) const = default;
  std::string str(const Topology& topo) const;
};

// Location equality plus guard satisfaction; event identifiers do not
// participate in matching.
bool matches(const LocatedPacket& lp, const Event& e);

}  // namespace evnet
