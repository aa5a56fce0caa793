#include "evnet/config.hpp"

#include <algorithm>
#include <sstream>

namespace evnet {

bool PortMatch::admits(PortId p) const {
  if (eq && *eq != p) return false;
  return std::find(ne.begin(), ne.end(), p) == ne.end();
}

bool PortMatch::add_eq(PortId p) {
  if (eq) return *eq == p;
  if (std::find(ne.begin(), ne.end(), p) != ne.end()) return false;
  eq = p;
  ne.clear();
  return true;
}

bool PortMatch::add_ne(PortId p) {
  if (eq) return *eq != p;
  if (std::find(ne.begin(), ne.end(), p) == ne.end()) {
    ne.push_back(p);
    std::sort(ne.begin(), ne.end());
  }
  return true;
}

bool PortMatch::implies(const PortMatch& other) const {
  if (other.eq) return eq && *eq == *other.eq;
  for (PortId p : other.ne) {
    if (eq && *eq != p) continue;
    if (!eq && std::find(ne.begin(), ne.end(), p) == ne.end()) return false;
    if (eq && *eq == p) return false;
  }
  return true;
}

std::optional<PortMatch> PortMatch::conjoin(const PortMatch& other) const {
  PortMatch out = *this;
  if (other.eq && !out.add_eq(*other.eq)) return std::nullopt;
  for (PortId p : other.ne)
    if (!out.add_ne(p)) return std::nullopt;
  return out;
}

std::string PortMatch::str() const {
  if (eq) return "pt=" + std::to_string(*eq);
  if (ne.empty()) return "pt=*";
  std::string out;
  for (PortId p : ne) out += (out.empty() ? "pt!=" : ",!=") + std::to_string(p);
  return out;
}

size_t Configuration::rule_count() const {
  size_t n = 0;
  for (const auto& [sw, rules] : tables) n += rules.size();
  return n;
}

std::string Configuration::canonical_key(const Topology& topo) const {
  std::ostringstream os;
  for (const auto& [sw, rules] : tables) {
    if (rules.empty()) continue;
    os << "sw" << sw << "[";
    for (const auto& r : rules) {
      os << r.in_port.str() << "&" << r.match.str(topo) << "->";
      for (const auto& a : r.actions) {
        for (auto [f, v] : a.writes) os << topo.field_name(f) << ":=" << v << ";";
        os << "out" << a.out_port << "|";
      }
      os << "#";
    }
    os << "]";
  }
  return os.str();
}

std::string Configuration::dump(const Topology& topo) const {
  std::ostringstream os;
  for (const auto& [sw, rules] : tables) {
    for (const auto& r : rules) {
      os << "switch " << sw << " prio " << r.priority << " " << r.in_port.str() << " "
         << r.match.str(topo) << " ->";
      for (const auto& a : r.actions) {
        os << " [";
        for (auto [f, v] : a.writes) os << topo.field_name(f) << "<-" << v << " ";
        os << "out " << a.out_port << "]";
      }
      os << "\n";
    }
  }
  return os.str();
}

std::vector<LocatedPacket> apply_config(const Topology& topo, const Configuration& c,
                                        const LocatedPacket& lp) {
  if (!topo.has_location(lp.loc))
    throw SemanticError("apply_config: unknown location " + lp.loc.str());
  std::set<LocatedPacket> out;
  const Rule* hit = nullptr;
  if (auto it = c.tables.find(lp.loc.sw); it != c.tables.end()) {
    for (const auto& r : it->second) {
      if (r.in_port.admits(lp.loc.pt) && r.match.satisfied_by(lp.pkt)) {
        hit = &r;
        break;
      }
    }
  }
  if (hit) {
    for (const auto& a : hit->actions) {
      Packet p = lp.pkt;
      for (auto [f, v] : a.writes) p.set(f, v);
      Location at{lp.loc.sw, a.out_port};
      if (auto dst = topo.link_from(at))
        out.insert(LocatedPacket{p, *dst});
      else
        out.insert(LocatedPacket{p, at});
    }
  } else if (auto dst = topo.link_from(lp.loc)) {
    out.insert(LocatedPacket{lp.pkt, *dst});
  }
  return std::vector<LocatedPacket>(out.begin(), out.end());
}

std::vector<std::vector<LocatedPacket>> packet_traces(const Topology& topo, const Configuration& c,
                                                      const LocatedPacket& lp0, size_t bound) {
  if (bound == 0) throw SemanticError("packet_traces: bound must be positive");
  if (!topo.is_host_location(lp0.loc))
    throw SemanticError("packet_traces: start location " + lp0.loc.str() + " is not host-attached");
  std::vector<std::vector<LocatedPacket>> done;
  std::vector<std::vector<LocatedPacket>> frontier{{lp0}};
  while (!frontier.empty()) {
    std::vector<std::vector<LocatedPacket>> next;
    for (auto& tr : frontier) {
      auto succ = apply_config(topo, c, tr.back());
      if (succ.empty() || tr.size() >= bound) {
        done.push_back(std::move(tr));
        continue;
      }
      for (const auto& s : succ) {
        auto ext = tr;
        ext.push_back(s);
        next.push_back(std::move(ext));
      }
    }
    frontier = std::move(next);
  }
  std::sort(done.begin(), done.end());
  return done;
}

bool trace_producible(const Topology& topo, const Configuration& c,
                      const std::vector<LocatedPacket>& lps) {
  if (lps.empty()) return true;
  if (!topo.is_host_location(lps.front().loc)) return false;
  for (size_t i = 0; i + 1 < lps.size(); ++i) {
    auto succ = apply_config(topo, c, lps[i]);
    if (std::find(succ.begin(), succ.end(), lps[i + 1]) == succ.end()) return false;
  }
  return true;
}

}  // namespace evnet
