#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spaceverse/domain.hpp"

namespace spaceverse {

enum class RegionDecision : std::uint8_t { Discard = 0, Downsample = 1, Preserve = 2 };

const char* to_string(RegionDecision d);

// Per-region attention scores with the filter decisions they imply.
struct RegionAttentionMap {
  std::vector<double> scores;
  double alpha = 0.35;
  double beta = 0.55;
  double max_factor = 0.0;  // 0 = cap so a region collapses to no less than 1x1
  std::vector<RegionDecision> decisions;
  std::vector<double> factors;  // downsampling factor per region (1 elsewhere)
};

// Piecewise filter rule: K < alpha discards, alpha <= K < beta downsamples
// with factor (beta - alpha) / (K - alpha), beta <= K preserves.
RegionDecision classify_region(double score, double alpha, double beta);
double downsample_factor(double score, double alpha, double beta,
                         double max_factor);

RegionAttentionMap make_attention_map(std::vector<double> scores, double alpha,
                                      double beta, double max_factor = 0.0);

// Box-average pooling by a real per-axis divisor c >= 1; output dimensions
// ceil(H/c) x ceil(W/c). c = 1 is the identity.
PixelGrid downsample(const PixelGrid& region, double factor);

struct FilteredRegion {
  RegionDecision decision = RegionDecision::Preserve;
  PixelGrid payload;  // empty when discarded
};

struct FilteredImage {
  int region_height = 0;
  int region_width = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  int image_height = 0;
  int image_width = 0;
  std::vector<FilteredRegion> regions;
  ByteSize total_bytes = 0;
  double retained_attention_mass = 1.0;
};

// Applies the per-region decisions of the map to the tiling.
FilteredImage apply_filter(const RegionGrid& grid, const RegionAttentionMap& map,
                           const ByteModel& model = {});

// Oracle baseline: preserves exactly the regions intersecting the ground
// truth box, discards everything else. Detection tasks only.
FilteredImage ideal_mask(const RegionGrid& grid, const BoxAnswer& box,
                         const ByteModel& model = {},
                         std::span<const double> scores = {});

// As above but with a byte budget: discards round(fraction * N) regions
// drawn (seeded) from outside the box, capped at the non-box region count.
FilteredImage budgeted_ideal_mask(const RegionGrid& grid, const BoxAnswer& box,
                                  double fraction, std::uint64_t seed,
                                  const ByteModel& model = {},
                                  std::span<const double> scores = {});

// Uniformly random region subset of size round(fraction * N) discarded.
FilteredImage random_mask(const RegionGrid& grid, double fraction,
                          std::uint64_t seed, const ByteModel& model = {},
                          std::span<const double> scores = {});

// Attention-ranked discard at a matched byte budget: drops the
// round(fraction * N) lowest-scoring regions, preserves the rest at full
// resolution.
FilteredImage rank_mask(const RegionGrid& grid, std::span<const double> scores,
                        double fraction, const ByteModel& model = {});

// Region indices intersecting a box (strict overlap; regions cover
// half-open pixel ranges).
std::vector<int> regions_intersecting_box(const RegionGrid& grid,
                                          const BoxAnswer& box);

// Share of the total positive attention mass surviving a discard pattern;
// 1.0 when no positive-score region exists.
double retained_mass(std::span<const double> scores,
                     std::span<const std::uint8_t> discarded);

// Wire format: per-region records (region_index u32, decision u8, dims
// 2 x u16, f64 pixel payload), little-endian. Used by the ground-side
// reconstructor; link latency accounting uses byte_size().
std::vector<std::uint8_t> encode_wire(const FilteredImage& image);
FilteredImage decode_wire(std::span<const std::uint8_t> bytes);

// Ground-side view: discarded regions zero-filled, downsampled regions
// upscaled by pixel repetition to the region size.
PixelGrid reconstruct_zero_fill(const FilteredImage& image);

}  // namespace spaceverse
