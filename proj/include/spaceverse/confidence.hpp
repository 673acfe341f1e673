#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace spaceverse {

// Progressive confidence network: one shared MLP trunk M plus per-stage
// linear input projections L_i. Stage i consumes the pooled image features
// concatenated with (i - 1) pooled output-token blocks, so the stage input
// dimension grows as onboard generation proceeds.
struct ConfidenceNetConfig {
  int stages = 2;                      // I
  int feature_dim = 64;                // pooled image feature dimension
  int token_embed_dim = 64;            // pooled token-block dimension
  int trunk_width = 64;
  int trunk_hidden_layers = 2;         // tanh layers in M
  int token_block = 8;                 // N_t tokens generated between stages
  std::vector<double> thresholds{0.5, 0.4};  // tau_i

  int stage_input_dim(int stage) const {
    return feature_dim + (stage - 1) * token_embed_dim;
  }
};

struct ProgressiveConfidenceNet {
  ConfidenceNetConfig cfg;
  std::vector<double> params;  // flat; layout in param_layout()

  static ProgressiveConfidenceNet init(const ConfidenceNetConfig& cfg,
                                       std::uint64_t seed);
};

// Flat-parameter layout offsets (per-stage projection, trunk, output head).
struct ParamLayout {
  std::vector<std::size_t> proj_w;  // per stage
  std::vector<std::size_t> proj_b;
  std::vector<std::size_t> trunk_w;  // per hidden layer
  std::vector<std::size_t> trunk_b;
  std::size_t out_w = 0;
  std::size_t out_b = 0;
  std::size_t total = 0;
};
ParamLayout param_layout(const ConfidenceNetConfig& cfg);

struct StageInput {
  std::vector<double> image_features;
  std::vector<std::vector<double>> token_blocks;  // exactly stage - 1 entries
};

enum class DecisionKind { Offload, Continue, AcceptOnboard };

struct ConfidenceDecision {
  DecisionKind kind = DecisionKind::Continue;
  int stage = 1;
};

// Scalar similarity prediction for one stage; unbounded linear output.
double estimate(const ProgressiveConfidenceNet& net, int stage,
                const StageInput& input);

// Threshold rule: score strictly below tau_i offloads; a tie continues
// (or accepts onboard at the final stage).
ConfidenceDecision decide(const ProgressiveConfidenceNet& net, int stage,
                          double score);

struct TrainRecord {
  std::vector<StageInput> stage_inputs;  // one per stage
  double target = 0.0;                   // Simi(sat output, ground output)
};

struct TrainOptions {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 7;
  int threads = 0;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean summed-stage MSE per epoch
};

// Mini-batch SGD with momentum on the summed-stage MSE loss. Per-record
// gradients are computed in parallel and reduced in record order, so the
// result is bit-identical at any thread count.
TrainResult train(ProgressiveConfidenceNet& net,
                  const std::vector<TrainRecord>& dataset,
                  const TrainOptions& options);

// Mean over records of the summed-stage squared error, plus its gradient
// with respect to the flat parameter vector. Exposed for the
// finite-difference gradient check.
double batch_loss_and_gradient(const ProgressiveConfidenceNet& net,
                               std::span<const TrainRecord> records,
                               std::vector<double>& gradient);
double dataset_loss(const ProgressiveConfidenceNet& net,
                    std::span<const TrainRecord> records);

// Flat binary serialization: "PCN1", little-endian u32 dimension header,
// f64 thresholds, then the row-major f64 parameter block.
void save_net(const ProgressiveConfidenceNet& net, const std::string& path);
ProgressiveConfidenceNet load_net(const std::string& path);

}  // namespace spaceverse
