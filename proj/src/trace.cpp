#include "evnet/trace.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace evnet {

std::vector<uint32_t> NetworkTrace::trees_containing(uint32_t idx) const {
  std::vector<uint32_t> out;
  for (uint32_t ti = 0; ti < trees.size(); ++ti)
    if (std::find(trees[ti].begin(), trees[ti].end(), idx) != trees[ti].end()) out.push_back(ti);
  return out;
}

std::vector<LocatedPacket> NetworkTrace::path_packets(const std::vector<uint32_t>& t) const {
  std::vector<LocatedPacket> out;
  out.reserve(t.size());
  for (uint32_t k : t) out.push_back(lps.at(k));
  return out;
}

bool is_network_trace(const Topology& topo, const NetworkTrace& ntr,
                      const std::vector<const Configuration*>& configs) {
  const uint32_t n = static_cast<uint32_t>(ntr.lps.size());
  std::vector<bool> covered(n, false);
  for (const auto& t : ntr.trees) {
    if (t.empty()) return false;
    for (size_t i = 0; i + 1 < t.size(); ++i)
      if (t[i] >= t[i + 1]) return false;
    for (uint32_t k : t) {
      if (k >= n) return false;
      covered[k] = true;
    }
    if (!topo.is_host_location(ntr.lps[t.front()].loc)) return false;
    if (!configs.empty()) {
      bool producible = false;
      for (const Configuration* c : configs) {
        if (trace_producible(topo, *c, ntr.path_packets(t))) {
          producible = true;
          break;
        }
      }
      if (!producible) return false;
    }
  }
  for (uint32_t i = 0; i < n; ++i)
    if (!covered[i]) return false;

  // Tree condition: each node has at most one parent, roots are the path
  // heads, and the edge graph is acyclic (guaranteed by increasing indices).
  std::map<uint32_t, std::set<uint32_t>> parents;
  std::set<uint32_t> roots;
  for (const auto& t : ntr.trees) {
    roots.insert(t.front());
    for (size_t i = 0; i + 1 < t.size(); ++i) parents[t[i + 1]].insert(t[i]);
  }
  for (const auto& [node, ps] : parents) {
    if (ps.size() > 1) return false;
    if (roots.count(node)) return false;
  }
  return true;
}

HappensBefore::HappensBefore(const NetworkTrace& ntr) {
  const size_t n = ntr.lps.size();
  const size_t words = (n + 63) / 64;
  rel_.assign(n, std::vector<uint64_t>(words, 0));
  auto set_bit = [&](size_t i, size_t j) { rel_[i][j >> 6] |= uint64_t{1} << (j & 63); };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (ntr.lps[i].loc.sw == ntr.lps[j].loc.sw) set_bit(i, j);
  for (const auto& t : ntr.trees)
    for (size_t a = 0; a < t.size(); ++a)
      for (size_t b = a + 1; b < t.size(); ++b) set_bit(t[a], t[b]);
  // Transitive closure; generators only point forward, so one pass from the
  // back suffices.
  for (size_t i = n; i-- > 0;) {
    for (size_t j = i + 1; j < n; ++j) {
      if (rel_[i][j >> 6] >> (j & 63) & 1) {
        for (size_t w = 0; w < rel_[i].size(); ++w) rel_[i][w] |= rel_[j][w];
      }
    }
  }
}

std::string serialize_trace(const Topology& topo, const NetworkTrace& ntr) {
  std::ostringstream os;
  for (uint32_t i = 0; i < ntr.lps.size(); ++i) {
    os << i << " ";
    auto ts = ntr.trees_containing(i);
    if (ts.empty()) {
      os << "-";
    } else {
      for (size_t k = 0; k < ts.size(); ++k) os << (k ? "," : "") << "t" << ts[k];
    }
    os << " " << ntr.lps[i].loc.str() << " " << ntr.lps[i].pkt.str(topo) << "\n";
  }
  os << "trees\n";
  for (uint32_t ti = 0; ti < ntr.trees.size(); ++ti) {
    os << "t" << ti << ":";
    for (uint32_t k : ntr.trees[ti]) os << " " << k;
    os << "\n";
  }
  return os.str();
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

Packet parse_packet(const Topology& topo, const std::string& body, int lineno) {
  Packet pkt;
  std::string cur;
  auto flush = [&] {
    cur = trim(cur);
    if (cur.empty()) return;
    auto eq = cur.find('=');
    if (eq == std::string::npos)
      throw ParseError("trace line " + std::to_string(lineno) + ": bad field binding '" + cur + "'");
    std::string fname = trim(cur.substr(0, eq));
    auto fid = topo.field_id(fname);
    if (!fid) throw ParseError("trace line " + std::to_string(lineno) + ": undeclared field '" + fname + "'");
    pkt.set(*fid, topo.resolve_value(trim(cur.substr(eq + 1))));
    cur.clear();
  };
  for (char c : body) {
    if (c == ',') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return pkt;
}

}  // namespace

NetworkTrace parse_trace(const Topology& topo, const std::string& text) {
  NetworkTrace ntr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool in_trees = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line == "trees") {
      in_trees = true;
      continue;
    }
    if (!in_trees) {
      std::istringstream ls(line);
      uint32_t idx;
      std::string treestok, loctok;
      if (!(ls >> idx >> treestok >> loctok))
        throw ParseError("trace line " + std::to_string(lineno) + ": expected <idx> <trees> <sw:pt> {..}");
      if (idx != ntr.lps.size())
        throw ParseError("trace line " + std::to_string(lineno) + ": indices must be consecutive");
      auto colon = loctok.find(':');
      if (colon == std::string::npos)
        throw ParseError("trace line " + std::to_string(lineno) + ": bad location");
      Location loc{static_cast<SwitchId>(std::stoul(loctok.substr(0, colon))),
                   static_cast<PortId>(std::stoul(loctok.substr(colon + 1)))};
      std::string rest;
      std::getline(ls, rest);
      rest = trim(rest);
      if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}')
        throw ParseError("trace line " + std::to_string(lineno) + ": expected {field=value,...}");
      ntr.lps.push_back(LocatedPacket{parse_packet(topo, rest.substr(1, rest.size() - 2), lineno), loc});
    } else {
      auto colon = line.find(':');
      if (colon == std::string::npos)
        throw ParseError("trace line " + std::to_string(lineno) + ": expected t<i>: indices");
      std::istringstream ls(line.substr(colon + 1));
      std::vector<uint32_t> t;
      uint32_t k;
      while (ls >> k) t.push_back(k);
      ntr.trees.push_back(std::move(t));
    }
  }
  return ntr;
}

NetworkTrace load_trace(const Topology& topo, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open trace file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_trace(topo, ss.str());
}

}  // namespace evnet
