#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "spaceverse/config.hpp"
#include "spaceverse/report.hpp"

using namespace spaceverse;

namespace {

// Small, fast scenario used across these tests.
ScenarioConfig small_scenario(Policy policy) {
  ScenarioConfig cfg = default_config();
  cfg.generator.count = 150;
  cfg.training.sample_count = 300;
  cfg.training.options.epochs = 40;
  cfg.policy.kind = policy;
  cfg.sim.threads = 2;
  return cfg;
}

const ProgressiveConfidenceNet& shared_net() {
  static const ProgressiveConfidenceNet net = [] {
    return train_confidence_net(small_scenario(Policy::SpaceVerse), nullptr);
  }();
  return net;
}

ScenarioConfig with_net(ScenarioConfig cfg) {
  static const std::string path = [] {
    const auto p = std::filesystem::temp_directory_path() / "orch_net.pcn";
    save_net(shared_net(), p.string());
    return p.string();
  }();
  cfg.net_path = path;
  return cfg;
}

}  // namespace

TEST_CASE("token blocks: the final stage pools the complete output") {
  ConfidenceNetConfig ncfg;  // 2 stages, N_t = 8
  EncoderSpec enc;
  std::vector<std::uint32_t> tokens(24);
  for (std::uint32_t t = 0; t < 24; ++t) tokens[t] = 100 + t;

  const auto stage2 = stage_token_blocks(tokens, 2, ncfg, enc);
  REQUIRE(stage2.size() == 1);
  CHECK(stage2[0] == pool_token_block(tokens, enc));

  // Three stages: stage 2 sees the first N_t tokens, stage 3 sees the
  // incremental block plus the remainder.
  ncfg.stages = 3;
  const auto mid = stage_token_blocks({tokens.data(), 8}, 2, ncfg, enc);
  REQUIRE(mid.size() == 1);
  CHECK(mid[0] == pool_token_block({tokens.data(), 8}, enc));
  const auto last = stage_token_blocks(tokens, 3, ncfg, enc);
  REQUIRE(last.size() == 2);
  CHECK(last[0] == pool_token_block({tokens.data(), 8}, enc));
  CHECK(last[1] == pool_token_block({tokens.data() + 8, 16}, enc));

  // Shorter output than the block schedule: pools what exists.
  const auto capped = stage_token_blocks({tokens.data(), 4}, 2, ncfg, enc);
  CHECK(capped[0] == pool_token_block({tokens.data(), 4}, enc));
  const auto empty = stage_token_blocks({}, 2, ncfg, enc);
  CHECK(empty[0] == std::vector<double>(std::size_t(enc.token_embed_dim), 0.0));
}

TEST_CASE("hand-traced offload sample") {
  ScenarioConfig cfg = default_config();
  cfg.policy.kind = Policy::GroundOnly;
  cfg.generator.qa_weight = 0.0;
  cfg.generator.classification_weight = 0.0;
  cfg.generator.detection_weight = 1.0;
  const Sample sample = generate_sample(cfg.generator, 7);
  REQUIRE(sample.task_kind == TaskKind::Detection);

  const std::vector<ContactWindow> windows{{0.0, 1e9}};
  LinkQueue queue;
  const SampleTrace trace =
      run_sample(sample, cfg, nullptr, windows, queue, 0.0);

  // Independent reconstruction of the filtered payload.
  const auto grid = partition_image(sample.image, 10, 10);
  const auto tokens = encode_grid(grid, cfg.encoder, sample.id,
                                  sample.region_relevance, 1);
  const auto scores = region_attention_scores(
      tokens, encode_prompt(sample.prompt, cfg.encoder), true, 1);
  const auto filtered =
      apply_filter(grid, make_attention_map(scores, 0.35, 0.55),
                   cfg.preprocess.byte_model);

  CHECK(trace.offloaded);
  CHECK(trace.onboard_tokens == 0);
  CHECK(trace.bytes_sent == filtered.total_bytes);
  CHECK(trace.bytes_original == full_grid_bytes(grid));
  CHECK(trace.retained_mass ==
        doctest::Approx(filtered.retained_attention_mass));
  CHECK(trace.t_encode == doctest::Approx(0.5));
  CHECK(trace.t_generate == 0.0);
  CHECK(trace.t_confidence == 0.0);
  // Released at 0.5 inside the window: pure air time at 110.67 Mbps.
  CHECK(trace.t_queue_tx ==
        doctest::Approx(double(filtered.total_bytes) * 8.0 / 110.67e6)
            .epsilon(1e-9));
  // Ground inference: encode plus 16 detection tokens at 40 tok/s.
  CHECK(trace.t_ground == doctest::Approx(0.2 + 16.0 / 40.0));
  CHECK(std::abs(trace.total_latency() -
                 (trace.t_encode + trace.t_queue_tx + trace.t_ground)) < 1e-6);
}

TEST_CASE("latency components always sum to the total") {
  auto cfg = with_net(small_scenario(Policy::SpaceVerse));
  const auto result = run_scenario(cfg);
  for (const auto& t : result.traces)
    CHECK(std::abs(t.total_latency() -
                   (t.t_encode + t.t_generate + t.t_confidence + t.t_queue_tx +
                    t.t_ground)) < 1e-9);
}

TEST_CASE("every sample lands in exactly one bucket") {
  auto cfg = with_net(small_scenario(Policy::SpaceVerse));
  const auto result = run_scenario(cfg);
  CHECK(result.metrics.onboard + result.metrics.ground +
            result.metrics.incomplete ==
        result.metrics.samples);
  CHECK(result.metrics.samples == 150);
  // Shares sum to one when any latency accrued.
  const double share_sum = result.metrics.share_encode +
                           result.metrics.share_generate +
                           result.metrics.share_confidence +
                           result.metrics.share_queue_tx +
                           result.metrics.share_ground;
  CHECK(share_sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("scenario runs are deterministic and thread-count independent") {
  auto cfg = with_net(small_scenario(Policy::SpaceVerse));
  cfg.sim.threads = 1;
  const auto a = run_scenario(cfg);
  cfg.sim.threads = 2;
  const auto b = run_scenario(cfg);
  CHECK(traces_csv(a.traces) == traces_csv(b.traces));
  CHECK(metrics_json(a.metrics, cfg).dump() == metrics_json(b.metrics, cfg).dump());
}

TEST_CASE("minus-infinity thresholds degenerate to SatelliteOnly") {
  auto sat_cfg = small_scenario(Policy::SatelliteOnly);
  sat_cfg.sim.confidence_eval_s = 0.0;
  const auto sat = run_scenario(sat_cfg);

  auto sv_cfg = with_net(small_scenario(Policy::SpaceVerse));
  sv_cfg.sim.confidence_eval_s = 0.0;
  sv_cfg.confidence.thresholds = {
      -std::numeric_limits<double>::infinity(),
      -std::numeric_limits<double>::infinity()};
  const auto sv = run_scenario(sv_cfg);

  // Identical numbers throughout; only the policy label may differ.
  auto a = metrics_json(sat.metrics, sat_cfg);
  auto b = metrics_json(sv.metrics, sv_cfg);
  a.erase("policy");
  b.erase("policy");
  CHECK(a.dump() == b.dump());
  for (std::size_t i = 0; i < sat.traces.size(); ++i) {
    CHECK(sat.traces[i].answer == sv.traces[i].answer);
    CHECK(sat.traces[i].total_latency() == sv.traces[i].total_latency());
  }
}

TEST_CASE("plus-infinity first threshold degenerates to GroundOnly answers") {
  const auto go = run_scenario(small_scenario(Policy::GroundOnly));

  auto sv_cfg = with_net(small_scenario(Policy::SpaceVerse));
  sv_cfg.confidence.thresholds = {std::numeric_limits<double>::infinity(), 0.4};
  const auto sv = run_scenario(sv_cfg);

  REQUIRE(go.traces.size() == sv.traces.size());
  for (std::size_t i = 0; i < go.traces.size(); ++i) {
    CHECK(sv.traces[i].offloaded);
    CHECK(sv.traces[i].offload_stage == 1);
    CHECK(sv.traces[i].onboard_tokens == 0);
    CHECK(sv.traces[i].answer == go.traces[i].answer);
  }
}

TEST_CASE("early offloads generate fewer onboard tokens than full inference") {
  const auto sv = run_scenario(with_net(small_scenario(Policy::SpaceVerse)));
  const auto cafi = run_scenario(
      with_net(small_scenario(Policy::ConfidenceAfterFullInference)));
  double sv_tokens = 0, cafi_tokens = 0;
  for (const auto& t : sv.traces) sv_tokens += double(t.onboard_tokens);
  for (const auto& t : cafi.traces) cafi_tokens += double(t.onboard_tokens);
  CHECK(sv_tokens <= cafi_tokens);
  // Anything offloaded before the final stage carried zero or partial output.
  for (const auto& t : sv.traces)
    if (t.offloaded && t.offload_stage == 1) CHECK(t.onboard_tokens == 0);
}

TEST_CASE("random offload hits its fraction and needs no net") {
  auto cfg = small_scenario(Policy::RandomOffload);
  cfg.policy.random_fraction = 0.3;
  const auto result = run_scenario(cfg);
  CHECK(result.metrics.offload_fraction == doctest::Approx(0.3).epsilon(0.25));
  CHECK(result.metrics.ground > 0);
  CHECK(result.metrics.onboard > 0);
}

TEST_CASE("zero samples produce empty metrics without error") {
  auto cfg = small_scenario(Policy::SatelliteOnly);
  cfg.generator.count = 0;
  const auto result = run_scenario(cfg);
  CHECK(result.metrics.samples == 0);
  CHECK(result.traces.empty());
  CHECK(result.metrics.mean_simi == 0.0);
}

TEST_CASE("poisson arrivals spread the release times") {
  auto cfg = small_scenario(Policy::GroundOnly);
  cfg.sim.poisson_arrivals = true;
  cfg.sim.poisson_rate_per_s = 0.01;
  const auto result = run_scenario(cfg);
  // Batch arrivals put every release at t_encode; poisson pushes some later.
  std::size_t later = 0;
  for (const auto& t : result.traces)
    if (t.complete && t.total_latency() > 0) ++later;
  CHECK(later == result.traces.size());
  CHECK(result.metrics.samples == 150);
}

TEST_CASE("sweep endpoints equal the pure policies") {
  auto cfg = with_net(small_scenario(Policy::SpaceVerse));
  const std::vector<double> fractions{0.0, 0.5, 1.0};
  const auto rows = sweep_offload(cfg, fractions);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].confidence_mean_simi == rows[0].random_mean_simi);
  CHECK(rows[2].confidence_mean_simi == rows[2].random_mean_simi);

  auto sat_cfg = cfg;
  sat_cfg.policy.kind = Policy::SatelliteOnly;
  const auto sat = run_scenario(sat_cfg);
  CHECK(rows[0].confidence_mean_simi ==
        doctest::Approx(sat.metrics.mean_simi).epsilon(1e-12));

  auto go_cfg = cfg;
  go_cfg.policy.kind = Policy::GroundOnly;
  const auto go = run_scenario(go_cfg);
  CHECK(rows[2].confidence_mean_simi ==
        doctest::Approx(go.metrics.mean_simi).epsilon(1e-12));

  CHECK(rows[1].confidence_mean_simi >= rows[1].random_mean_simi);
}

TEST_CASE("masking strategies coincide at fraction zero") {
  auto cfg = small_scenario(Policy::GroundOnly);
  cfg.generator.count = 60;
  const std::vector<double> fractions{0.0, 0.8};
  const auto rows = masking_experiment(cfg, fractions);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].mean_simi == rows[1].mean_simi);  // random == ideal at 0
  CHECK(rows[1].mean_simi == rows[2].mean_simi);  // ideal == attention at 0
  // At 0.8 the byte budgets of random and attention match exactly.
  CHECK(rows[3].mean_bytes == rows[5].mean_bytes);
}

TEST_CASE("a single-stage net degenerates to the feature-only gate") {
  auto cfg = small_scenario(Policy::SpaceVerse);
  cfg.confidence.stages = 1;
  cfg.confidence.thresholds = {0.5};
  cfg.generator.count = 80;
  const auto result = run_scenario(cfg);
  for (const auto& t : result.traces) {
    REQUIRE(t.stage_scores.size() == 1);
    if (t.offloaded) {
      CHECK(t.offload_stage == 1);
      CHECK(t.onboard_tokens == 0);
    } else {
      // Accepting onboard produced the full output.
      CHECK(t.onboard_tokens > 0);
      CHECK(t.t_generate > 0.0);
    }
  }
}

TEST_CASE("missing net file is a clear error when training is disabled") {
  auto cfg = small_scenario(Policy::SpaceVerse);
  cfg.net_path = "/nonexistent/net.pcn";
  cfg.train_if_missing = false;
  CHECK_THROWS_WITH_AS(run_scenario(cfg),
                       doctest::Contains("train-confidence"),
                       std::runtime_error);
}
