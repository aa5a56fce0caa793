#pragma once

#include <string>

// Generators for the synthetic experiment inputs: a ring network whose
// forwarding direction flips on a packet event, and the delivery-counting
// program parameterized by its cap.

namespace evnet {

struct GeneratedCase {
  std::string topology;
  std::string program;
  std::string scenario;
};

// Ring of 2*diameter switches with hosts on opposite sides. Clockwise
// forwarding initially; the arrival of the first H1->H2 packet at H2's switch
// flips the route to counterclockwise. The reply travels the other half of
// the ring, so every switch eventually hears about the event from traffic
// alone; controller broadcast shortcuts that.
GeneratedCase gen_ring(int diameter);

// Delivery cap program over the two-switch topology: the first `limit`
// deliveries to H4 keep the return path open, the next one closes it.
GeneratedCase gen_cap(int limit);

}  // namespace evnet
