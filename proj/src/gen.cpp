#include "evnet/gen.hpp"

#include <sstream>
#include <stdexcept>

namespace evnet {

GeneratedCase gen_ring(int diameter) {
  if (diameter < 1 || diameter > 8) throw std::invalid_argument("ring diameter must be in 1..8");
  const int n = 2 * diameter;
  auto next = [n](int i) { return i % n + 1; };
  GeneratedCase out;

  std::ostringstream topo;
  topo << "fields ip_src,ip_dst\n";
  for (int i = 1; i <= n; ++i) {
    topo << "switch " << i << " ports 1,2";
    if (i == 1 || i == diameter + 1) topo << ",3";
    topo << "\n";
  }
  topo << "host H1 at 1:3 addr 1\n";
  topo << "host H2 at " << (diameter + 1) << ":3 addr 2\n";
  for (int i = 1; i <= n; ++i) {
    int j = next(i);
    // Port 2 of i faces port 1 of its successor; both directions are cabled.
    topo << "link " << i << ":2 -> " << j << ":1\n";
    topo << "link " << j << ":1 -> " << i << ":2\n";
  }
  out.topology = topo.str();

  std::ostringstream prog;
  // Clockwise route 1 -> 2 -> ... -> diameter+1, flipping state on arrival.
  prog << "pt=3 & ip_dst=H2; state=[0]";
  for (int i = 1; i <= diameter; ++i) {
    prog << "; pt<-2; (" << i << ":2)->(" << next(i) << ":1)";
    if (i == diameter) prog << "<state<-[1]>";
  }
  prog << "; pt<-3\n";
  // Counterclockwise route 1 -> n -> n-1 -> ... -> diameter+1.
  prog << "+ pt=3 & ip_dst=H2; state=[1]";
  for (int i = 1, hop = 0; hop < diameter; ++hop) {
    int prev = i == 1 ? n : i - 1;
    prog << "; pt<-1; (" << i << ":1)->(" << prev << ":2)";
    i = prev;
  }
  prog << "; pt<-3\n";
  // Reply path from H2 back to H1 through the counterclockwise half.
  prog << "+ pt=3 & ip_dst=H1";
  for (int i = diameter + 1; i != 1; i = next(i)) {
    prog << "; pt<-2; (" << i << ":2)->(" << next(i) << ":1)";
  }
  prog << "; pt<-3\n";
  out.program = prog.str();

  std::ostringstream scn;
  scn << "inject H1 {ip_src=H1,ip_dst=H2}\n";
  scn << "barrier\n";
  scn << "inject H2 {ip_src=H2,ip_dst=H1}\n";
  scn << "barrier\n";
  scn << "inject H1 {ip_src=H1,ip_dst=H2}\n";
  out.scenario = scn.str();
  return out;
}

GeneratedCase gen_cap(int limit) {
  if (limit < 1 || limit > 40) throw std::invalid_argument("cap must be in 1..40");
  GeneratedCase out;
  out.topology =
      "fields ip_src,ip_dst\n"
      "switch 1 ports 1,2\n"
      "switch 4 ports 1,2\n"
      "host H1 at 1:2 addr 1\n"
      "host H4 at 4:2 addr 4\n"
      "link 1:1 -> 4:1\n"
      "link 4:1 -> 1:1\n";
  std::ostringstream prog;
  prog << "pt=2 & ip_dst=H4; pt<-1; (\n";
  for (int i = 0; i <= limit; ++i)
    prog << (i ? "+ " : "  ") << "state=[" << i << "]; (1:1)->(4:1)<state<-[" << (i + 1) << "]>\n";
  prog << "+ state=[" << (limit + 1) << "]; (1:1)->(4:1)\n";
  prog << "); pt<-2\n";
  prog << "+ pt=2 & ip_dst=H1; state!=[" << (limit + 1) << "]; pt<-1; (4:1)->(1:1); pt<-2\n";
  out.program = prog.str();
  std::ostringstream scn;
  for (int r = 0; r <= limit; ++r) {
    if (r) scn << "barrier\n";
    scn << "inject H1 {ip_src=H1,ip_dst=H4}\n";
    scn << "barrier\n";
    scn << "inject H4 {ip_src=H4,ip_dst=H1}\n";
  }
  out.scenario = scn.str();
  return out;
}

}  // namespace evnet
