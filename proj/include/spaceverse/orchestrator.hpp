#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spaceverse/confidence.hpp"
#include "spaceverse/constellation.hpp"
#include "spaceverse/embedding.hpp"
#include "spaceverse/generator.hpp"
#include "spaceverse/link.hpp"
#include "spaceverse/models.hpp"
#include "spaceverse/preprocess.hpp"

namespace spaceverse {

enum class Policy {
  SpaceVerse,                   // progressive confidence loop, early offload
  SatelliteOnly,                // compact onboard model answers everything
  GroundOnly,                   // every sample offloaded before generation
  ConfidenceAfterFullInference, // single confidence check after full output
  RandomOffload,                // seeded uniform offload at a fixed fraction
};

const char* to_string(Policy p);
Policy policy_from_string(const std::string& s);

struct PolicySpec {
  Policy kind = Policy::SpaceVerse;
  double random_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct PreprocessSpec {
  double alpha = 0.35;
  double beta = 0.55;
  int region_height = 10;
  int region_width = 10;
  double max_downsample_factor = 0.0;  // 0 = collapse to at most 1x1
  bool normalize_attention = true;
  ByteModel byte_model;
};

struct SimOptions {
  double horizon_s = 86400.0;
  double confidence_eval_s = 1e-3;  // per stage evaluation
  double window_step_s = 10.0;
  double window_refine_s = 0.1;
  bool poisson_arrivals = false;
  double poisson_rate_per_s = 1.0;
  std::uint64_t arrival_seed = 0;
  int threads = 0;  // 0 = all available
};

struct ConfidenceTrainingSpec {
  int sample_count = 1000;
  std::uint64_t generator_seed = 0;
  TrainOptions options;
};

struct OracleBackend {
  OracleSpec spec;
  std::string external_command;  // empty = synthetic oracle
};

struct ScenarioConfig {
  std::uint64_t master_seed = 42;
  std::vector<OrbitSpec> satellites;
  std::vector<GroundStationSpec> ground_stations;
  LinkSpec link;
  EncoderSpec encoder;
  ConfidenceNetConfig confidence;
  std::string net_path;          // PCN1 file; may not exist yet
  bool train_if_missing = true;
  std::uint64_t net_init_seed = 0;
  ConfidenceTrainingSpec training;
  PreprocessSpec preprocess;
  OracleBackend satellite_oracle;
  OracleBackend ground_oracle;
  GeneratorSpec generator;
  PolicySpec policy;
  SimOptions sim;
};

struct SampleTrace {
  std::string sample_id;
  std::string satellite_id;
  TaskKind kind = TaskKind::QA;
  double difficulty = 0.0;
  bool complete = true;
  bool offloaded = false;
  int offload_stage = 0;  // 0 = answered onboard
  std::vector<double> stage_scores;
  std::uint64_t onboard_tokens = 0;
  ByteSize bytes_original = 0;
  ByteSize bytes_sent = 0;
  double retained_mass = 1.0;
  double t_encode = 0, t_generate = 0, t_confidence = 0, t_queue_tx = 0,
         t_ground = 0;
  TaskAnswer answer;
  bool has_answer = false;
  double simi_to_truth = 0.0;

  double total_latency() const {
    return t_encode + t_generate + t_confidence + t_queue_tx + t_ground;
  }
};

struct ScenarioMetrics {
  std::size_t samples = 0, onboard = 0, ground = 0, incomplete = 0;
  double mean_simi = 0.0;
  double mean_latency = 0.0, p50_latency = 0.0, p95_latency = 0.0,
         p99_latency = 0.0;
  double offload_fraction = 0.0;
  double mean_compression_ratio = 1.0;
  double share_encode = 0, share_generate = 0, share_confidence = 0,
         share_queue_tx = 0, share_ground = 0;
};

struct ScenarioResult {
  ScenarioMetrics metrics;
  std::vector<SampleTrace> traces;
};

// Training-data generation and training for the confidence network: both
// oracles run on a training split at full retained mass and the target is
// the task similarity between their outputs.
std::vector<TrainRecord> build_training_dataset(const ScenarioConfig& cfg);
ProgressiveConfidenceNet train_confidence_net(const ScenarioConfig& cfg,
                                              TrainResult* result = nullptr);
// Loads net_path, or trains (and saves when net_path is set) if missing.
ProgressiveConfidenceNet obtain_net(const ScenarioConfig& cfg);

// Pooled token blocks feeding stage i: incremental N_t blocks for the
// intermediate stages, the remainder-to-end block at the final stage.
std::vector<std::vector<double>> stage_token_blocks(
    std::span<const std::uint32_t> tokens, int stage,
    const ConfidenceNetConfig& net_cfg, const EncoderSpec& encoder);

// Single-sample pipeline against an explicit window list and queue; the
// building block of run_scenario and of the hand-traced tests.
SampleTrace run_sample(const Sample& sample, const ScenarioConfig& cfg,
                       const ProgressiveConfidenceNet* net,
                       std::span<const ContactWindow> windows, LinkQueue& queue,
                       double arrival_s = 0.0);

// Full scenario: samples distributed round-robin across satellites,
// per-satellite pipelines independent (OpenMP), per-satellite FIFO downlink.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

struct SweepRow {
  double fraction = 0.0;
  double confidence_mean_simi = 0.0;
  double random_mean_simi = 0.0;
};
// Offload-volume sweep: for each fraction, offloads exactly that share,
// either the lowest final-stage confidence scores or a seeded uniform draw.
std::vector<SweepRow> sweep_offload(const ScenarioConfig& cfg,
                                    std::span<const double> fractions);

struct MaskRow {
  double fraction = 0.0;
  std::string strategy;  // random | ideal | attention
  double mean_simi = 0.0;
  double mean_bytes = 0.0;
};
// Detection-task masking comparison at matched byte budgets.
std::vector<MaskRow> masking_experiment(const ScenarioConfig& cfg,
                                        std::span<const double> fractions);

}  // namespace spaceverse
