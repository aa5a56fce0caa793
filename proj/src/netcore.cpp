#include "evnet/netcore.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace evnet {

std::string Location::str() const {
  return std::to_string(sw) + ":" + std::to_string(pt);
}

std::optional<FieldId> Topology::field_id(const std::string& name) const {
  for (FieldId i = 0; i < fields.size(); ++i)
    if (fields[i] == name) return i;
  return std::nullopt;
}

const Host* Topology::host_named(const std::string& name) const {
  for (const auto& h : hosts)
    if (h.name == name) return &h;
  return nullptr;
}

const Host* Topology::host_at(Location loc) const {
  for (const auto& h : hosts)
    if (h.loc == loc) return &h;
  return nullptr;
}

bool Topology::has_location(Location loc) const {
  auto it = switches.find(loc.sw);
  return it != switches.end() && it->second.count(loc.pt) > 0;
}

bool Topology::is_host_location(Location loc) const { return host_at(loc) != nullptr; }

std::optional<Location> Topology::link_from(Location loc) const {
  auto it = links.find(loc);
  if (it == links.end()) return std::nullopt;
  return it->second;
}

Value Topology::resolve_value(const std::string& token) const {
  if (!token.empty() && std::isdigit(static_cast<unsigned char>(token[0])))
    return static_cast<Value>(std::stoull(token));
  if (const Host* h = host_named(token)) return h->addr;
  throw ParseError("unknown value identifier '" + token + "'");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

Location parse_loc(const std::string& tok) {
  auto parts = split(tok, ':');
  if (parts.size() != 2) throw ParseError("bad location '" + tok + "'");
  return Location{static_cast<SwitchId>(std::stoul(trim(parts[0]))),
                  static_cast<PortId>(std::stoul(trim(parts[1])))};
}

}  // namespace

Topology parse_topology(const std::string& text) {
  Topology topo;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    auto fail = [&](const std::string& msg) {
      throw ParseError("topology line " + std::to_string(lineno) + ": " + msg);
    };
    if (kw == "fields") {
      std::string rest;
      std::getline(ls, rest);
      for (auto& f : split(trim(rest), ',')) {
        f = trim(f);
        if (f.empty()) fail("empty field name");
        topo.fields.push_back(f);
      }
    } else if (kw == "switch") {
      SwitchId id;
      std::string portskw, rest;
      if (!(ls >> id >> portskw) || portskw != "ports") fail("expected: switch <id> ports <p,..>");
      std::getline(ls, rest);
      auto& ports = topo.switches[id];
      for (auto& p : split(trim(rest), ',')) ports.insert(static_cast<PortId>(std::stoul(trim(p))));
    } else if (kw == "host") {
      std::string name, atkw, loctok;
      if (!(ls >> name >> atkw >> loctok) || atkw != "at") fail("expected: host <name> at <sw:pt>");
      Host h;
      h.name = name;
      h.loc = parse_loc(loctok);
      h.addr = topo.hosts.size() + 1;
      std::string addrkw;
      if (ls >> addrkw) {
        if (addrkw != "addr") fail("expected 'addr'");
        Value v;
        if (!(ls >> v)) fail("expected address value");
        h.addr = v;
      }
      topo.hosts.push_back(h);
    } else if (kw == "link") {
      std::string a, arrow, b;
      if (!(ls >> a >> arrow >> b) || arrow != "->") fail("expected: link <sw:pt> -> <sw:pt>");
      topo.links[parse_loc(a)] = parse_loc(b);
    } else {
      fail("unknown directive '" + kw + "'");
    }
  }
  for (const auto& [src, dst] : topo.links) {
    if (!topo.has_location(src) || !topo.has_location(dst))
      throw SemanticError("link " + src.str() + " -> " + dst.str() + " uses undeclared location");
  }
  for (const auto& h : topo.hosts) {
    if (!topo.has_location(h.loc))
      throw SemanticError("host " + h.name + " attached to undeclared location " + h.loc.str());
    if (topo.links.count(h.loc))
      throw SemanticError("host " + h.name + " attached to a link source " + h.loc.str());
  }
  return topo;
}

Topology load_topology(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open topology file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_topology(ss.str());
}

std::optional<Value> Packet::get(FieldId f) const {
  for (const auto& [id, v] : fields_)
    if (id == f) return v;
  return std::nullopt;
}

void Packet::set(FieldId f, Value v) {
  for (auto& [id, val] : fields_) {
    if (id == f) {
      val = v;
      return;
    }
  }
  fields_.emplace_back(f, v);
  std::sort(fields_.begin(), fields_.end());
}

std::string Packet::str(const Topology& topo) const {
  std::string out = "{";
  bool first = true;
  for (const auto& [f, v] : fields_) {
    if (!first) out += ",";
    first = false;
    out += topo.field_name(f) + "=" + std::to_string(v);
  }
  return out + "}";
}

bool TestConjunction::add(Literal lit) {
  if (!sat_) return false;
  for (const auto& l : lits_) {
    if (l.field != lit.field) continue;
    if (l.rel == Rel::Eq && lit.rel == Rel::Eq && l.value != lit.value) {
      sat_ = false;
      return false;
    }
    if (l.rel == Rel::Eq && lit.rel == Rel::Ne) {
      if (l.value == lit.value) {
        sat_ = false;
        return false;
      }
      return true;  // entailed, nothing to add
    }
    if (l.rel == Rel::Ne && lit.rel == Rel::Eq && l.value == lit.value) {
      sat_ = false;
      return false;
    }
  }
  if (lit.rel == Rel::Eq) {
    // Drop now-redundant inequalities on the same field.
    std::erase_if(lits_, [&](const Literal& l) { return l.field == lit.field && l.rel == Rel::Ne; });
  }
  if (std::find(lits_.begin(), lits_.end(), lit) == lits_.end()) {
    lits_.push_back(lit);
    std::sort(lits_.begin(), lits_.end());
  }
  return true;
}

bool TestConjunction::satisfied_by(const Packet& pkt) const {
  if (!sat_) return false;
  for (const auto& l : lits_) {
    auto v = pkt.get(l.field);
    bool eq = v.has_value() && *v == l.value;
    if (l.rel == Rel::Eq ? !eq : eq) return false;
  }
  return true;
}

TestConjunction TestConjunction::conjoin(const TestConjunction& other) const {
  TestConjunction out = *this;
  if (!other.sat_) {
    out.sat_ = false;
    return out;
  }
  for (const auto& l : other.lits_)
    if (!out.add(l)) break;
  return out;
}

bool TestConjunction::entails_literal(const Literal& lit) const {
  if (!sat_) return true;
  for (const auto& l : lits_) {
    if (l.field != lit.field) continue;
    if (l == lit) return true;
    if (lit.rel == Rel::Ne && l.rel == Rel::Eq && l.value != lit.value) return true;
  }
  return false;
}

bool TestConjunction::implies(const TestConjunction& other) const {
  if (!sat_) return true;
  if (!other.sat_) return false;
  for (const auto& l : other.lits_)
    if (!entails_literal(l)) return false;
  return true;
}

TestConjunction TestConjunction::without_field(FieldId f) const {
  TestConjunction out;
  out.sat_ = sat_;
  for (const auto& l : lits_)
    if (l.field != f) out.lits_.push_back(l);
  return out;
}

std::string TestConjunction::str(const Topology& topo) const {
  if (!sat_) return "false";
  if (lits_.empty()) return "true";
  std::string out;
  for (const auto& l : lits_) {
    if (!out.empty()) out += " & ";
    out += topo.field_name(l.field) + (l.rel == Rel::Eq ? "=" : "!=") + std::to_string(l.value);
  }
  return out;
}

std::string Event::str(const Topology& topo) const {
  std::string out = "(" + phi.str(topo) + ", " + std::to_string(sw) + ":" + std::to_string(pt) + ")";
  if (!eid.empty()) out += "_" + eid;
  return out;
}

bool matches(const LocatedPacket& lp, const Event& e) {
  return lp.loc.sw == e.sw && lp.loc.pt == e.pt && e.phi.satisfied_by(lp.pkt);
}

}  // namespace evnet
