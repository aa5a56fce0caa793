#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evnet/config.hpp"
#include "evnet/netcore.hpp"

// Network traces: an interleaved located-packet sequence plus the family of
// root-to-leaf index paths describing which entries belong to which packet.

namespace evnet {

struct NetworkTrace {
  std::vector<LocatedPacket> lps;
  // Each t is a strictly increasing index sequence; multicast packets appear
  // as several paths sharing a prefix. The induced graph must be a family of
  // trees rooted at the first indices.
  std::vector<std::vector<uint32_t>> trees;

  std::vector<uint32_t> trees_containing(uint32_t idx) const;
  std::vector<LocatedPacket> path_packets(const std::vector<uint32_t>& t) const;
};

// Checks the three structural conditions: every index covered, every path
// rooted at a host and producible by some configuration in `configs` (skipped
// when `configs` is empty, where any single-step relation would do), and the
// induced graph forming trees. Total: malformed inputs yield false.
bool is_network_trace(const Topology& topo, const NetworkTrace& ntr,
                      const std::vector<const Configuration*>& configs);

// Strict partial order over trace indices, generated by same-switch index
// order and same-path index order, closed under transitivity.
class HappensBefore {
 public:
  explicit HappensBefore(const NetworkTrace& ntr);
  bool before(uint32_t i, uint32_t j) const { return rel_[i][(j >> 6)] >> (j & 63) & 1; }
  size_t size() const { return rel_.size(); }

 private:
  std::vector<std::vector<uint64_t>> rel_;
};

// Text format: one entry per line `<idx> <t0,t1,...> <sw>:<pt> {f=v,...}`,
// then a `trees` section with one path per line `t<i>: i0 i1 ...`.
std::string serialize_trace(const Topology& topo, const NetworkTrace& ntr);
NetworkTrace parse_trace(const Topology& topo, const std::string& text);
NetworkTrace load_trace(const Topology& topo, const std::string& path);

}  // namespace evnet
