#pragma once

#include <span>
#include <stdexcept>

#include "spaceverse/constellation.hpp"
#include "spaceverse/domain.hpp"

namespace spaceverse {

struct LinkSpec {
  double bandwidth_bps = 110.67e6;
  std::uint64_t per_message_overhead_bytes = 0;
};

struct TransmissionRecord {
  double release_s = 0;   // payload ready
  double start_s = 0;     // first bit on the air
  double complete_s = 0;  // last bit received
  ByteSize bytes = 0;     // payload size (overhead excluded)
};

// Thrown when a payload cannot finish inside the window horizon. Carries the
// partial progress made before the windows ran out.
struct HorizonExceeded : std::runtime_error {
  HorizonExceeded(double progressed, double sent_s, ByteSize bytes)
      : std::runtime_error("transmission exceeds contact-window horizon"),
        progressed_until_s(progressed),
        air_time_used_s(sent_s),
        bytes_total(bytes) {}
  double progressed_until_s;
  double air_time_used_s;
  ByteSize bytes_total;
};

// Schedules one payload on a satellite downlink. Bits flow only inside
// contact windows at the link rate; a payload spanning a window gap pauses
// and resumes. queue_tail_s is the completion time of the previous payload
// on the same satellite (strict FIFO).
TransmissionRecord schedule_transmission(ByteSize bytes, double release_s,
                                         std::span<const ContactWindow> windows,
                                         const LinkSpec& link,
                                         double queue_tail_s = 0.0);

// Per-satellite FIFO state: the only mutable piece of the link model.
struct LinkQueue {
  double tail_s = 0.0;

  TransmissionRecord push(ByteSize bytes, double release_s,
                          std::span<const ContactWindow> windows,
                          const LinkSpec& link) {
    TransmissionRecord rec =
        schedule_transmission(bytes, release_s, windows, link, tail_s);
    tail_s = rec.complete_s;
    return rec;
  }
};

}  // namespace spaceverse
