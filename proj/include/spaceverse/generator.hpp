#pragma once

#include <cstdint>
#include <vector>

#include "spaceverse/domain.hpp"

namespace spaceverse {

// Synthetic observation-task generator. Difficulty is visible in the pixel
// statistics (base intensity tracks it) so the confidence network has a
// learnable signal; planted region relevance drives the attention scores.
struct GeneratorSpec {
  int count = 1000;
  int image_height = 100;
  int image_width = 100;
  int region_height = 10;  // used to lay out detection boxes and relevance
  int region_width = 10;
  double qa_weight = 1.0;
  double classification_weight = 1.0;
  double detection_weight = 1.0;
  // Per-kind difficulty ranges.
  double qa_difficulty_min = 0.0, qa_difficulty_max = 0.55;
  double classification_difficulty_min = 0.2, classification_difficulty_max = 1.0;
  double detection_difficulty_min = 0.0, detection_difficulty_max = 0.55;
  // Planted relevance layout.
  double relevant_fraction = 0.15;
  double mid_fraction = 0.15;
  double relevant_rho_min = 0.60, relevant_rho_max = 0.95;
  double mid_rho_min = 0.32, mid_rho_max = 0.42;
  double irrelevant_rho_max = 0.08;
  int detection_box_regions = 2;  // box spans this many regions per axis
  // Pixel model.
  double base_intensity = 0.15;
  double difficulty_intensity_gain = 0.5;
  double relevance_intensity_gain = 0.25;
  double pixel_noise = 0.05;
  std::uint32_t label_count = 10;
  std::uint32_t qa_answer_tokens = 24;
  std::uint64_t seed = 11;
};

// Deterministic per index: sample k depends only on (spec, k), so batches
// may be generated in parallel.
Sample generate_sample(const GeneratorSpec& spec, int index);
std::vector<Sample> generate_samples(const GeneratorSpec& spec, int threads = 0);

}  // namespace spaceverse
