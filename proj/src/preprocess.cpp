#include "spaceverse/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "spaceverse/rng.hpp"

namespace spaceverse {

const char* to_string(RegionDecision d) {
  switch (d) {
    case RegionDecision::Discard: return "discard";
    case RegionDecision::Downsample: return "downsample";
    case RegionDecision::Preserve: return "preserve";
  }
  return "?";
}

RegionDecision classify_region(double score, double alpha, double beta) {
  if (score < alpha) return RegionDecision::Discard;
  if (score < beta) return RegionDecision::Downsample;
  return RegionDecision::Preserve;
}

double downsample_factor(double score, double alpha, double beta,
                         double max_factor) {
  const double span = beta - alpha;
  const double excess = score - alpha;
  double c = excess > 0.0 ? span / excess : max_factor;
  if (max_factor > 0.0) c = std::min(c, max_factor);
  return std::max(c, 1.0);
}

RegionAttentionMap make_attention_map(std::vector<double> scores, double alpha,
                                      double beta, double max_factor) {
  if (!(alpha < beta)) throw std::invalid_argument("alpha must be below beta");
  RegionAttentionMap map;
  map.scores = std::move(scores);
  map.alpha = alpha;
  map.beta = beta;
  map.max_factor = max_factor;
  map.decisions.resize(map.scores.size());
  map.factors.assign(map.scores.size(), 1.0);
  for (std::size_t r = 0; r < map.scores.size(); ++r) {
    map.decisions[r] = classify_region(map.scores[r], alpha, beta);
    if (map.decisions[r] == RegionDecision::Downsample)
      map.factors[r] = downsample_factor(map.scores[r], alpha, beta, max_factor);
  }
  return map;
}

PixelGrid downsample(const PixelGrid& region, double factor) {
  if (factor < 1.0) throw std::invalid_argument("downsample factor below 1");
  if (factor == 1.0) return region;
  const int oh = int(std::ceil(double(region.height) / factor));
  const int ow = int(std::ceil(double(region.width) / factor));
  PixelGrid out(oh, ow, 0.0);
  for (int i = 0; i < oh; ++i) {
    const int r0 = std::min(int(std::floor(i * factor)), region.height - 1);
    const int r1 = std::max(r0 + 1, std::min(int(std::ceil((i + 1) * factor)),
                                             region.height));
    for (int j = 0; j < ow; ++j) {
      const int c0 = std::min(int(std::floor(j * factor)), region.width - 1);
      const int c1 = std::max(c0 + 1, std::min(int(std::ceil((j + 1) * factor)),
                                               region.width));
      double sum = 0.0;
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) sum += region.at(r, c);
      out.at(i, j) = sum / double((r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

double retained_mass(std::span<const double> scores,
                     std::span<const std::uint8_t> discarded) {
  double total = 0.0, kept = 0.0;
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (scores[r] <= 0.0) continue;
    total += scores[r];
    if (r >= discarded.size() || !discarded[r]) kept += scores[r];
  }
  return total > 0.0 ? kept / total : 1.0;
}

namespace {

// Auto cap: a region never collapses below 1x1 per axis.
double effective_cap(const RegionGrid& grid, double max_factor) {
  if (max_factor > 0.0) return max_factor;
  return double(std::max(grid.region_height, grid.region_width));
}

FilteredImage from_discard_flags(const RegionGrid& grid,
                                 const std::vector<std::uint8_t>& discard,
                                 const ByteModel& model,
                                 std::span<const double> scores) {
  FilteredImage out;
  out.region_height = grid.region_height;
  out.region_width = grid.region_width;
  out.grid_rows = grid.grid_rows;
  out.grid_cols = grid.grid_cols;
  out.image_height = grid.image_height;
  out.image_width = grid.image_width;
  out.regions.resize(std::size_t(grid.count()));
  out.total_bytes = 0;
  for (int r = 0; r < grid.count(); ++r) {
    auto& fr = out.regions[std::size_t(r)];
    if (discard[std::size_t(r)]) {
      fr.decision = RegionDecision::Discard;
      out.total_bytes += byte_size(nullptr, model);
    } else {
      fr.decision = RegionDecision::Preserve;
      fr.payload = grid.regions[std::size_t(r)];
      out.total_bytes += byte_size(fr.payload, model);
    }
  }
  out.retained_attention_mass = retained_mass(scores, discard);
  return out;
}

}  // namespace

FilteredImage apply_filter(const RegionGrid& grid, const RegionAttentionMap& map,
                           const ByteModel& model) {
  if (int(map.scores.size()) != grid.count())
    throw std::invalid_argument("attention map does not cover every region");
  FilteredImage out;
  out.region_height = grid.region_height;
  out.region_width = grid.region_width;
  out.grid_rows = grid.grid_rows;
  out.grid_cols = grid.grid_cols;
  out.image_height = grid.image_height;
  out.image_width = grid.image_width;
  out.regions.resize(std::size_t(grid.count()));
  out.total_bytes = 0;

  const double cap = effective_cap(grid, map.max_factor);
  std::vector<std::uint8_t> discard(std::size_t(grid.count()), 0);
  for (int r = 0; r < grid.count(); ++r) {
    auto& fr = out.regions[std::size_t(r)];
    fr.decision = map.decisions[std::size_t(r)];
    switch (fr.decision) {
      case RegionDecision::Discard:
        discard[std::size_t(r)] = 1;
        out.total_bytes += byte_size(nullptr, model);
        break;
      case RegionDecision::Downsample: {
        const double c = std::min(map.factors[std::size_t(r)], cap);
        fr.payload = downsample(grid.regions[std::size_t(r)], c);
        out.total_bytes += byte_size(fr.payload, model);
        break;
      }
      case RegionDecision::Preserve:
        fr.payload = grid.regions[std::size_t(r)];
        out.total_bytes += byte_size(fr.payload, model);
        break;
    }
  }
  out.retained_attention_mass = retained_mass(map.scores, discard);
  return out;
}

std::vector<int> regions_intersecting_box(const RegionGrid& grid,
                                          const BoxAnswer& box) {
  std::vector<int> hits;
  for (int gr = 0; gr < grid.grid_rows; ++gr) {
    for (int gc = 0; gc < grid.grid_cols; ++gc) {
      const double y0 = double(gr) * grid.region_height;
      const double y1 = y0 + grid.region_height;
      const double x0 = double(gc) * grid.region_width;
      const double x1 = x0 + grid.region_width;
      if (box.x_min < x1 && box.x_max > x0 && box.y_min < y1 && box.y_max > y0)
        hits.push_back(gr * grid.grid_cols + gc);
    }
  }
  return hits;
}

FilteredImage ideal_mask(const RegionGrid& grid, const BoxAnswer& box,
                         const ByteModel& model, std::span<const double> scores) {
  std::vector<std::uint8_t> discard(std::size_t(grid.count()), 1);
  for (int r : regions_intersecting_box(grid, box)) discard[std::size_t(r)] = 0;
  return from_discard_flags(grid, discard, model, scores);
}

FilteredImage budgeted_ideal_mask(const RegionGrid& grid, const BoxAnswer& box,
                                  double fraction, std::uint64_t seed,
                                  const ByteModel& model,
                                  std::span<const double> scores) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("fraction must be in [0,1]");
  std::vector<std::uint8_t> in_box(std::size_t(grid.count()), 0);
  for (int r : regions_intersecting_box(grid, box)) in_box[std::size_t(r)] = 1;
  std::vector<int> outside;
  for (int r = 0; r < grid.count(); ++r)
    if (!in_box[std::size_t(r)]) outside.push_back(r);

  auto budget = std::size_t(std::llround(fraction * grid.count()));
  budget = std::min(budget, outside.size());
  Rng rng(mix64(seed, "ideal-mask"));
  for (std::size_t i = 0; i + 1 < outside.size(); ++i) {
    const std::size_t j = i + std::size_t(rng.below(outside.size() - i));
    std::swap(outside[i], outside[j]);
  }
  std::vector<std::uint8_t> discard(std::size_t(grid.count()), 0);
  for (std::size_t i = 0; i < budget; ++i) discard[std::size_t(outside[i])] = 1;
  return from_discard_flags(grid, discard, model, scores);
}

FilteredImage random_mask(const RegionGrid& grid, double fraction,
                          std::uint64_t seed, const ByteModel& model,
                          std::span<const double> scores) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("fraction must be in [0,1]");
  std::vector<int> order(std::size_t(grid.count()), 0);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix64(seed, "random-mask"));
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const std::size_t j = i + std::size_t(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  const auto budget = std::size_t(std::llround(fraction * grid.count()));
  std::vector<std::uint8_t> discard(std::size_t(grid.count()), 0);
  for (std::size_t i = 0; i < budget && i < order.size(); ++i)
    discard[std::size_t(order[i])] = 1;
  return from_discard_flags(grid, discard, model, scores);
}

FilteredImage rank_mask(const RegionGrid& grid, std::span<const double> scores,
                        double fraction, const ByteModel& model) {
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("fraction must be in [0,1]");
  if (int(scores.size()) != grid.count())
    throw std::invalid_argument("scores do not cover every region");
  std::vector<int> order(std::size_t(grid.count()), 0);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[std::size_t(a)] < scores[std::size_t(b)];
  });
  const auto budget = std::size_t(std::llround(fraction * grid.count()));
  std::vector<std::uint8_t> discard(std::size_t(grid.count()), 0);
  for (std::size_t i = 0; i < budget && i < order.size(); ++i)
    discard[std::size_t(order[i])] = 1;
  return from_discard_flags(grid, discard, model, scores);
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

template <typename T>
T take(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (offset + sizeof(T) > bytes.size())
    throw std::invalid_argument("truncated filtered-image record");
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_wire(const FilteredImage& image) {
  std::vector<std::uint8_t> out;
  put<std::uint16_t>(out, std::uint16_t(image.grid_rows));
  put<std::uint16_t>(out, std::uint16_t(image.grid_cols));
  put<std::uint16_t>(out, std::uint16_t(image.region_height));
  put<std::uint16_t>(out, std::uint16_t(image.region_width));
  put<std::uint32_t>(out, std::uint32_t(image.image_height));
  put<std::uint32_t>(out, std::uint32_t(image.image_width));
  for (std::size_t r = 0; r < image.regions.size(); ++r) {
    const auto& fr = image.regions[r];
    put<std::uint32_t>(out, std::uint32_t(r));
    put<std::uint8_t>(out, std::uint8_t(fr.decision));
    put<std::uint16_t>(out, std::uint16_t(fr.payload.height));
    put<std::uint16_t>(out, std::uint16_t(fr.payload.width));
    for (double p : fr.payload.pixels) put<double>(out, p);
  }
  return out;
}

FilteredImage decode_wire(std::span<const std::uint8_t> bytes) {
  std::size_t off = 0;
  FilteredImage image;
  image.grid_rows = take<std::uint16_t>(bytes, off);
  image.grid_cols = take<std::uint16_t>(bytes, off);
  image.region_height = take<std::uint16_t>(bytes, off);
  image.region_width = take<std::uint16_t>(bytes, off);
  image.image_height = int(take<std::uint32_t>(bytes, off));
  image.image_width = int(take<std::uint32_t>(bytes, off));
  image.regions.resize(std::size_t(image.grid_rows) * image.grid_cols);
  for (std::size_t r = 0; r < image.regions.size(); ++r) {
    const auto index = take<std::uint32_t>(bytes, off);
    if (index != r) throw std::invalid_argument("region records out of order");
    auto& fr = image.regions[r];
    fr.decision = RegionDecision(take<std::uint8_t>(bytes, off));
    const int h = take<std::uint16_t>(bytes, off);
    const int w = take<std::uint16_t>(bytes, off);
    fr.payload = PixelGrid(h, w, 0.0);
    for (auto& p : fr.payload.pixels) p = take<double>(bytes, off);
  }
  return image;
}

PixelGrid reconstruct_zero_fill(const FilteredImage& image) {
  PixelGrid out(image.image_height, image.image_width, 0.0);
  for (int gr = 0; gr < image.grid_rows; ++gr) {
    for (int gc = 0; gc < image.grid_cols; ++gc) {
      const auto& fr = image.regions[std::size_t(gr) * image.grid_cols + gc];
      if (fr.decision == RegionDecision::Discard || fr.payload.empty()) continue;
      const int r0 = gr * image.region_height;
      const int c0 = gc * image.region_width;
      const int rows = std::min(image.region_height, image.image_height - r0);
      const int cols = std::min(image.region_width, image.image_width - c0);
      const double sr = double(fr.payload.height) / double(image.region_height);
      const double sc = double(fr.payload.width) / double(image.region_width);
      for (int r = 0; r < rows; ++r) {
        const int pr = std::min(int(r * sr), fr.payload.height - 1);
        for (int c = 0; c < cols; ++c) {
          const int pc = std::min(int(c * sc), fr.payload.width - 1);
          out.at(r0 + r, c0 + c) = fr.payload.at(pr, pc);
        }
      }
    }
  }
  return out;
}

}  // namespace spaceverse
