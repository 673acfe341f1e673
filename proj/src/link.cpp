#include "spaceverse/link.hpp"

#include <algorithm>

namespace spaceverse {

TransmissionRecord schedule_transmission(ByteSize bytes, double release_s,
                                         std::span<const ContactWindow> windows,
                                         const LinkSpec& link,
                                         double queue_tail_s) {
  if (link.bandwidth_bps <= 0.0)
    throw std::invalid_argument("bandwidth must be positive");
  if (release_s < 0.0) throw std::invalid_argument("release before t=0");

  const double air_needed =
      double(bytes + link.per_message_overhead_bytes) * 8.0 / link.bandwidth_bps;
  double cursor = std::max(release_s, queue_tail_s);
  double remaining = air_needed;
  double start = -1.0;
  double air_used = 0.0;

  for (const ContactWindow& w : windows) {
    if (w.end_s <= cursor) continue;
    const double at = std::max(cursor, w.start_s);
    if (start < 0.0) start = at;
    if (remaining <= 0.0)
      // Zero air time: completes instantly at the first in-window instant.
      return {release_s, at, at, bytes};
    const double available = w.end_s - at;
    if (available >= remaining) {
      const double complete = at + remaining;
      return {release_s, start, complete, bytes};
    }
    remaining -= available;
    air_used += available;
    cursor = w.end_s;
  }
  throw HorizonExceeded(cursor, air_used, bytes);
}

}  // namespace spaceverse
