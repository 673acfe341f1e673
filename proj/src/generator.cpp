#include "spaceverse/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spaceverse/parallel.hpp"
#include "spaceverse/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spaceverse {

namespace {

const char* kObjects[] = {"airplane", "bridge", "harbor",   "island",
                          "stadium",  "storage tank", "runway", "vehicle"};

TaskKind pick_kind(const GeneratorSpec& spec, Rng& rng) {
  const double total =
      spec.qa_weight + spec.classification_weight + spec.detection_weight;
  if (total <= 0.0) throw std::invalid_argument("task mix weights sum to zero");
  const double u = rng.uniform() * total;
  if (u < spec.qa_weight) return TaskKind::QA;
  if (u < spec.qa_weight + spec.classification_weight)
    return TaskKind::Classification;
  return TaskKind::Detection;
}

}  // namespace

Sample generate_sample(const GeneratorSpec& spec, int index) {
  if (spec.image_height < spec.region_height ||
      spec.image_width < spec.region_width)
    throw std::invalid_argument("image smaller than one region");

  Rng rng(mix64(mix64(spec.seed, "sample"), std::uint64_t(index)));
  Sample s;
  char idbuf[32];
  std::snprintf(idbuf, sizeof(idbuf), "s%05d", index);
  s.id = idbuf;
  s.task_kind = pick_kind(spec, rng);

  switch (s.task_kind) {
    case TaskKind::QA:
      s.difficulty = rng.uniform(spec.qa_difficulty_min, spec.qa_difficulty_max);
      break;
    case TaskKind::Classification:
      s.difficulty = rng.uniform(spec.classification_difficulty_min,
                                 spec.classification_difficulty_max);
      break;
    case TaskKind::Detection:
      s.difficulty = rng.uniform(spec.detection_difficulty_min,
                                 spec.detection_difficulty_max);
      break;
  }

  const int grid_rows =
      (spec.image_height + spec.region_height - 1) / spec.region_height;
  const int grid_cols =
      (spec.image_width + spec.region_width - 1) / spec.region_width;
  const int n_regions = grid_rows * grid_cols;
  s.region_relevance.assign(std::size_t(n_regions), 0.0);

  const char* object = kObjects[rng.below(std::size_t(std::size(kObjects)))];
  std::vector<int> relevant;

  if (s.task_kind == TaskKind::Detection) {
    // The ground-truth box covers a block of regions; those are the
    // relevant ones so the attention filter and the ideal mask agree.
    const int span_r = std::min(spec.detection_box_regions, grid_rows);
    const int span_c = std::min(spec.detection_box_regions, grid_cols);
    const int r0 = int(rng.below(std::uint64_t(grid_rows - span_r + 1)));
    const int c0 = int(rng.below(std::uint64_t(grid_cols - span_c + 1)));
    const double x_min = double(c0) * spec.region_width;
    const double y_min = double(r0) * spec.region_height;
    const double x_max =
        std::min(double(c0 + span_c) * spec.region_width, double(spec.image_width));
    const double y_max = std::min(double(r0 + span_r) * spec.region_height,
                                  double(spec.image_height));
    s.ground_truth = TaskAnswer{make_box(x_min, y_min, x_max, y_max)};
    for (int r = r0; r < r0 + span_r; ++r)
      for (int c = c0; c < c0 + span_c; ++c)
        relevant.push_back(r * grid_cols + c);
    s.prompt = std::string("locate the ") + object + " in the scene";
  } else {
    std::vector<int> order(std::size_t(n_regions), 0);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j = i + std::size_t(rng.below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    const auto n_rel = std::size_t(
        std::llround(spec.relevant_fraction * n_regions));
    relevant.assign(order.begin(), order.begin() + long(std::min(n_rel, order.size())));
    if (s.task_kind == TaskKind::Classification) {
      s.ground_truth =
          TaskAnswer{ClassAnswer{std::uint32_t(rng.below(spec.label_count))}};
      s.prompt = std::string("classify the scene containing the ") + object;
    } else {
      QaAnswer qa;
      qa.tokens.resize(spec.qa_answer_tokens);
      for (auto& t : qa.tokens) t = std::uint32_t(rng.next_u64());
      s.ground_truth = TaskAnswer{std::move(qa)};
      s.prompt = std::string("is there a ") + object + " visible here";
    }
  }
  s.prompt += " (#" + s.id + ")";

  for (int r : relevant)
    s.region_relevance[std::size_t(r)] =
        rng.uniform(spec.relevant_rho_min, spec.relevant_rho_max);

  // Mid band: drawn from the remaining regions.
  std::vector<int> rest;
  for (int r = 0; r < n_regions; ++r)
    if (s.region_relevance[std::size_t(r)] == 0.0) rest.push_back(r);
  for (std::size_t i = 0; i + 1 < rest.size(); ++i) {
    const std::size_t j = i + std::size_t(rng.below(rest.size() - i));
    std::swap(rest[i], rest[j]);
  }
  const auto n_mid =
      std::min(std::size_t(std::llround(spec.mid_fraction * n_regions)), rest.size());
  for (std::size_t i = 0; i < n_mid; ++i)
    s.region_relevance[std::size_t(rest[i])] =
        rng.uniform(spec.mid_rho_min, spec.mid_rho_max);
  for (std::size_t i = n_mid; i < rest.size(); ++i)
    s.region_relevance[std::size_t(rest[i])] =
        rng.uniform(0.0, spec.irrelevant_rho_max);

  // Pixels: base intensity tracks difficulty, relevance brightens a region,
  // plus per-pixel noise.
  s.image = PixelGrid(spec.image_height, spec.image_width, 0.0);
  for (int pr = 0; pr < spec.image_height; ++pr) {
    const int gr = pr / spec.region_height;
    for (int pc = 0; pc < spec.image_width; ++pc) {
      const int gc = pc / spec.region_width;
      const double rho = s.region_relevance[std::size_t(gr) * grid_cols + gc];
      const double v = spec.base_intensity +
                       spec.difficulty_intensity_gain * s.difficulty +
                       spec.relevance_intensity_gain * rho +
                       spec.pixel_noise * rng.gaussian();
      s.image.at(pr, pc) = std::clamp(v, 0.0, 1.0);
    }
  }
  return s;
}

std::vector<Sample> generate_samples(const GeneratorSpec& spec, int threads) {
  std::vector<Sample> samples(std::size_t(std::max(0, spec.count)));
  const int n = int(samples.size());
  const int nt = resolve_threads(threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (int i = 0; i < n; ++i) samples[std::size_t(i)] = generate_sample(spec, i);
  (void)nt;
  return samples;
}

}  // namespace spaceverse
