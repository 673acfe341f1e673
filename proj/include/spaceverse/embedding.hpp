#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "spaceverse/domain.hpp"

namespace spaceverse {

// Dense N x D token matrix, row-major. One row per token, all rows share the
// scenario embedding dimension.
struct TokenMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  TokenMatrix() = default;
  TokenMatrix(int r, int c) : rows(r), cols(c), data(std::size_t(r) * c, 0.0) {}
  double* row(int r) { return data.data() + std::size_t(r) * cols; }
  const double* row(int r) const { return data.data() + std::size_t(r) * cols; }
  bool operator==(const TokenMatrix&) const = default;
};

// Deterministic synthetic encoder standing in for a pretrained vision/text
// encoder pair sharing one feature space. Image-token rows mix a common
// alignment direction (weighted by the planted per-region relevance), a
// pixel-statistic direction, and seeded noise, so region attention scores
// are controllable in tests while still being a pure function of the image.
struct EncoderSpec {
  int embedding_dim = 64;     // D
  int tokens_per_region = 4;  // N_V
  int tokens_per_prompt = 8;  // N_E
  int token_embed_dim = 64;   // pooled output-token block dimension
  std::uint64_t seed = 1;
  double prompt_noise = 0.5;  // spread of prompt tokens around the alignment axis
  double pixel_gain = 0.6;    // weight of the region mean-intensity component
};

// The shared alignment axis u and the pixel-statistic axis w (orthogonal to u).
std::vector<double> alignment_direction(const EncoderSpec& spec);
std::vector<double> pixel_direction(const EncoderSpec& spec);

// Both axes, computed once for a batch of encode calls.
struct EncoderAxes {
  std::vector<double> alignment;
  std::vector<double> pixel;
};
EncoderAxes encoder_axes(const EncoderSpec& spec);

// N_V unit-norm rows; relevance in [0,1] is the planted region relevance.
TokenMatrix encode_region(const PixelGrid& region, const EncoderSpec& spec,
                          std::string_view sample_id, int region_index,
                          double relevance);
TokenMatrix encode_region(const PixelGrid& region, const EncoderSpec& spec,
                          const EncoderAxes& axes, std::string_view sample_id,
                          int region_index, double relevance);

// N_E unit-norm rows keyed by (seed, prompt hash).
TokenMatrix encode_prompt(std::string_view prompt, const EncoderSpec& spec);

// Text-image attention: sum over all (image token, text token) pairs of the
// cosine similarity. The normalized form divides by N_V * N_E and is the
// system default; the raw double sum is kept available.
double attention_score(const TokenMatrix& image_tokens,
                       const TokenMatrix& text_tokens, bool normalize = true);

// Per-region scores for a whole tiling; OpenMP across regions. The serial
// variant is the reference used by tests and the benchmark.
std::vector<double> region_attention_scores(
    const std::vector<TokenMatrix>& region_tokens, const TokenMatrix& prompt,
    bool normalize = true, int threads = 0);
std::vector<double> region_attention_scores_serial(
    const std::vector<TokenMatrix>& region_tokens, const TokenMatrix& prompt,
    bool normalize = true);

// Whole-image feature vector: mean pool of every region token row.
std::vector<double> mean_pool_features(
    const std::vector<TokenMatrix>& region_tokens);

// Encodes every region of a grid; OpenMP across regions.
std::vector<TokenMatrix> encode_grid(const RegionGrid& grid,
                                     const EncoderSpec& spec,
                                     std::string_view sample_id,
                                     std::span<const double> relevance,
                                     int threads = 0);

// Deterministic unit embedding of one generated token id (dimension
// token_embed_dim) and the mean pool of a token block. An empty block pools
// to the zero vector.
std::vector<double> token_embedding(std::uint32_t token, const EncoderSpec& spec);
std::vector<double> pool_token_block(std::span<const std::uint32_t> tokens,
                                     const EncoderSpec& spec);

// Seeded unit vector of the given dimension; shared helper.
std::vector<double> seeded_unit_vector(std::uint64_t seed, int dim);

}  // namespace spaceverse
