#include "spaceverse/embedding.hpp"

#include <cmath>
#include <stdexcept>

#include "spaceverse/parallel.hpp"
#include "spaceverse/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spaceverse {

std::vector<double> seeded_unit_vector(std::uint64_t seed, int dim) {
  Rng rng(seed);
  std::vector<double> v(std::size_t(dim), 0.0);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    norm2 += x * x;
  }
  if (norm2 == 0.0) {
    v[0] = 1.0;
    return v;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

std::vector<double> alignment_direction(const EncoderSpec& spec) {
  return seeded_unit_vector(mix64(spec.seed, "alignment"), spec.embedding_dim);
}

std::vector<double> pixel_direction(const EncoderSpec& spec) {
  const auto u = alignment_direction(spec);
  auto w = seeded_unit_vector(mix64(spec.seed, "pixel"), spec.embedding_dim);
  // Gram-Schmidt against u so the intensity component never leaks into the
  // prompt alignment axis.
  double proj = 0.0;
  for (int i = 0; i < spec.embedding_dim; ++i) proj += w[std::size_t(i)] * u[std::size_t(i)];
  double norm2 = 0.0;
  for (int i = 0; i < spec.embedding_dim; ++i) {
    w[std::size_t(i)] -= proj * u[std::size_t(i)];
    norm2 += w[std::size_t(i)] * w[std::size_t(i)];
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : w) x *= inv;
  return w;
}

EncoderAxes encoder_axes(const EncoderSpec& spec) {
  return EncoderAxes{alignment_direction(spec), pixel_direction(spec)};
}

TokenMatrix encode_region(const PixelGrid& region, const EncoderSpec& spec,
                          std::string_view sample_id, int region_index,
                          double relevance) {
  return encode_region(region, spec, encoder_axes(spec), sample_id,
                       region_index, relevance);
}

TokenMatrix encode_region(const PixelGrid& region, const EncoderSpec& spec,
                          const EncoderAxes& axes, std::string_view sample_id,
                          int region_index, double relevance) {
  if (region.empty()) throw std::invalid_argument("empty region");
  const int d = spec.embedding_dim;
  const auto& u = axes.alignment;
  const auto& w = axes.pixel;
  const double intensity = region.mean();
  const double rho = relevance;

  TokenMatrix m(spec.tokens_per_region, d);
  Rng rng(mix64(mix64(mix64(spec.seed, fnv1a64(sample_id)), "region"),
                std::uint64_t(region_index)));
  std::vector<double> noise(std::size_t(d), 0.0);
  for (int t = 0; t < spec.tokens_per_region; ++t) {
    // Unit-norm noise direction so the relevance mixture keeps its scale.
    double noise2 = 0.0;
    for (auto& x : noise) {
      x = rng.gaussian();
      noise2 += x * x;
    }
    const double noise_inv = 1.0 / std::sqrt(noise2);
    double* row = m.row(t);
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      row[i] = rho * u[std::size_t(i)] +
               (1.0 - rho) * (spec.pixel_gain * intensity * w[std::size_t(i)] +
                              noise[std::size_t(i)] * noise_inv);
      norm2 += row[i] * row[i];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < d; ++i) row[i] *= inv;
  }
  return m;
}

TokenMatrix encode_prompt(std::string_view prompt, const EncoderSpec& spec) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  const int d = spec.embedding_dim;
  const auto u = alignment_direction(spec);
  TokenMatrix m(spec.tokens_per_prompt, d);
  Rng rng(mix64(mix64(spec.seed, "prompt"), fnv1a64(prompt)));
  std::vector<double> noise(std::size_t(d), 0.0);
  for (int t = 0; t < spec.tokens_per_prompt; ++t) {
    double noise2 = 0.0;
    for (auto& x : noise) {
      x = rng.gaussian();
      noise2 += x * x;
    }
    const double noise_inv = spec.prompt_noise / std::sqrt(noise2);
    double* row = m.row(t);
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i) {
      row[i] = u[std::size_t(i)] + noise[std::size_t(i)] * noise_inv;
      norm2 += row[i] * row[i];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (int i = 0; i < d; ++i) row[i] *= inv;
  }
  return m;
}

double attention_score(const TokenMatrix& image_tokens,
                       const TokenMatrix& text_tokens, bool normalize) {
  if (image_tokens.cols != text_tokens.cols)
    throw std::invalid_argument("embedding dimension mismatch");
  const int d = image_tokens.cols;
  double sum = 0.0;
  for (int i = 0; i < image_tokens.rows; ++i) {
    const double* vi = image_tokens.row(i);
    double ni = 0.0;
    for (int k = 0; k < d; ++k) ni += vi[k] * vi[k];
    ni = std::sqrt(ni);
    if (ni == 0.0) throw std::invalid_argument("zero image token row");
    for (int j = 0; j < text_tokens.rows; ++j) {
      const double* ej = text_tokens.row(j);
      double nj = 0.0;
      for (int k = 0; k < d; ++k) nj += ej[k] * ej[k];
      nj = std::sqrt(nj);
      if (nj == 0.0) throw std::invalid_argument("zero text token row");
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += vi[k] * ej[k];
      sum += dot / (ni * nj);
    }
  }
  if (normalize) sum /= double(image_tokens.rows) * double(text_tokens.rows);
  return sum;
}

std::vector<double> region_attention_scores_serial(
    const std::vector<TokenMatrix>& region_tokens, const TokenMatrix& prompt,
    bool normalize) {
  std::vector<double> scores(region_tokens.size());
  for (std::size_t r = 0; r < region_tokens.size(); ++r)
    scores[r] = attention_score(region_tokens[r], prompt, normalize);
  return scores;
}

std::vector<double> region_attention_scores(
    const std::vector<TokenMatrix>& region_tokens, const TokenMatrix& prompt,
    bool normalize, int threads) {
  std::vector<double> scores(region_tokens.size());
  const int n = int(region_tokens.size());
  const int nt = resolve_threads(threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (int r = 0; r < n; ++r)
    scores[std::size_t(r)] = attention_score(region_tokens[std::size_t(r)], prompt, normalize);
  (void)nt;
  return scores;
}

std::vector<double> mean_pool_features(
    const std::vector<TokenMatrix>& region_tokens) {
  if (region_tokens.empty()) throw std::invalid_argument("no region tokens");
  const int d = region_tokens.front().cols;
  std::vector<double> pooled(std::size_t(d), 0.0);
  std::size_t rows = 0;
  for (const auto& m : region_tokens) {
    for (int r = 0; r < m.rows; ++r) {
      const double* row = m.row(r);
      for (int i = 0; i < d; ++i) pooled[std::size_t(i)] += row[i];
    }
    rows += std::size_t(m.rows);
  }
  for (auto& x : pooled) x /= double(rows);
  return pooled;
}

std::vector<TokenMatrix> encode_grid(const RegionGrid& grid,
                                     const EncoderSpec& spec,
                                     std::string_view sample_id,
                                     std::span<const double> relevance,
                                     int threads) {
  const int n = grid.count();
  const EncoderAxes axes = encoder_axes(spec);
  std::vector<TokenMatrix> tokens;
  tokens.resize(std::size_t(n));
  const int nt = resolve_threads(threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (int r = 0; r < n; ++r) {
    const double rho =
        std::size_t(r) < relevance.size() ? relevance[std::size_t(r)] : 0.0;
    tokens[std::size_t(r)] = encode_region(grid.regions[std::size_t(r)], spec,
                                           axes, sample_id, r, rho);
  }
  (void)nt;
  return tokens;
}

std::vector<double> token_embedding(std::uint32_t token, const EncoderSpec& spec) {
  return seeded_unit_vector(mix64(mix64(spec.seed, "token"), token),
                            spec.token_embed_dim);
}

std::vector<double> pool_token_block(std::span<const std::uint32_t> tokens,
                                     const EncoderSpec& spec) {
  std::vector<double> pooled(std::size_t(spec.token_embed_dim), 0.0);
  if (tokens.empty()) return pooled;
  for (std::uint32_t t : tokens) {
    const auto e = token_embedding(t, spec);
    for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += e[i];
  }
  for (auto& x : pooled) x /= double(tokens.size());
  return pooled;
}

}  // namespace spaceverse
