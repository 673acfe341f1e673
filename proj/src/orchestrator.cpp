#include "spaceverse/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "spaceverse/parallel.hpp"
#include "spaceverse/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spaceverse {

const char* to_string(Policy p) {
  switch (p) {
    case Policy::SpaceVerse: return "SpaceVerse";
    case Policy::SatelliteOnly: return "SatelliteOnly";
    case Policy::GroundOnly: return "GroundOnly";
    case Policy::ConfidenceAfterFullInference:
      return "ConfidenceAfterFullInference";
    case Policy::RandomOffload: return "RandomOffload";
  }
  return "?";
}

Policy policy_from_string(const std::string& s) {
  if (s == "SpaceVerse") return Policy::SpaceVerse;
  if (s == "SatelliteOnly") return Policy::SatelliteOnly;
  if (s == "GroundOnly") return Policy::GroundOnly;
  if (s == "ConfidenceAfterFullInference")
    return Policy::ConfidenceAfterFullInference;
  if (s == "RandomOffload") return Policy::RandomOffload;
  throw std::invalid_argument("unknown policy: " + s);
}

std::vector<std::vector<double>> stage_token_blocks(
    std::span<const std::uint32_t> tokens, int stage,
    const ConfidenceNetConfig& net_cfg, const EncoderSpec& encoder) {
  std::vector<std::vector<double>> blocks;
  const int nt = net_cfg.token_block;
  for (int j = 1; j < stage; ++j) {
    std::size_t from = std::size_t((j - 1) * nt);
    std::size_t to;
    if (stage == net_cfg.stages && j == stage - 1) {
      to = tokens.size();  // final stage sees the complete output
    } else {
      to = std::size_t(j * nt);
    }
    from = std::min(from, tokens.size());
    to = std::clamp(to, from, tokens.size());
    blocks.push_back(pool_token_block(tokens.subspan(from, to - from), encoder));
  }
  return blocks;
}

namespace {

// Serializes calls to a non-thread-safe oracle (the external process).
class LockedOracle : public InferenceOracle {
 public:
  explicit LockedOracle(std::unique_ptr<InferenceOracle> inner)
      : inner_(std::move(inner)) {}
  OracleOutput infer(const Sample& sample, double retained_mass) override {
    std::lock_guard<std::mutex> lock(mu_);
    return inner_->infer(sample, retained_mass);
  }

 private:
  std::unique_ptr<InferenceOracle> inner_;
  std::mutex mu_;
};

std::unique_ptr<InferenceOracle> make_oracle(const OracleBackend& backend,
                                             const EncoderSpec& encoder) {
  if (backend.external_command.empty())
    return std::make_unique<SyntheticOracle>(backend.spec, encoder);
  return std::make_unique<LockedOracle>(std::make_unique<ExternalProcessOracle>(
      backend.external_command, encoder));
}

double generation_time(const OracleOutput& out, const OracleSpec& spec) {
  return std::max(0.0, out.latency_s - spec.encode_latency_s);
}

// Number of onboard tokens available before the stage-i confidence check.
std::uint64_t tokens_before_stage(int stage, int stages, int token_block,
                                  std::uint64_t full_length) {
  if (stage <= 1) return 0;
  if (stage == stages) return full_length;
  return std::min(std::uint64_t((stage - 1) * token_block), full_length);
}

struct PendingOffload {
  std::size_t index = 0;
  double release_s = 0.0;
  ByteSize bytes = 0;
  double mass = 1.0;
};

struct Pipeline {
  const ScenarioConfig& cfg;
  const ProgressiveConfidenceNet* net;
  InferenceOracle& sat_oracle;
  InferenceOracle& gnd_oracle;

  // Pre-transmission evaluation: fills everything except the transmission
  // and ground-inference parts of an offloaded trace.
  std::optional<PendingOffload> evaluate(const Sample& sample,
                                         double arrival_s, std::size_t index,
                                         SampleTrace& trace) const {
    const auto& pp = cfg.preprocess;
    trace.sample_id = sample.id;
    trace.kind = sample.task_kind;
    trace.difficulty = sample.difficulty;

    const RegionGrid grid =
        partition_image(sample.image, pp.region_height, pp.region_width);
    const auto region_tokens =
        encode_grid(grid, cfg.encoder, sample.id, sample.region_relevance, 1);
    const auto features = mean_pool_features(region_tokens);
    trace.t_encode = cfg.satellite_oracle.spec.encode_latency_s;
    trace.bytes_original = full_grid_bytes(grid, pp.byte_model);

    bool offload = false;
    int offload_stage = 0;
    std::optional<OracleOutput> sat_out;
    auto ensure_sat_output = [&]() -> const OracleOutput& {
      if (!sat_out) sat_out = sat_oracle.infer(sample, 1.0);
      return *sat_out;
    };

    switch (cfg.policy.kind) {
      case Policy::SatelliteOnly: {
        const auto& out = ensure_sat_output();
        trace.onboard_tokens = out.tokens.size();
        trace.t_generate = generation_time(out, cfg.satellite_oracle.spec);
        trace.answer = out.answer;
        trace.has_answer = true;
        break;
      }
      case Policy::GroundOnly: {
        offload = true;
        offload_stage = 1;
        break;
      }
      case Policy::RandomOffload: {
        Rng rng(mix64(mix64(cfg.policy.seed, "random-offload"),
                      fnv1a64(sample.id)));
        if (rng.uniform() < cfg.policy.random_fraction) {
          offload = true;
          offload_stage = 1;
        } else {
          const auto& out = ensure_sat_output();
          trace.onboard_tokens = out.tokens.size();
          trace.t_generate = generation_time(out, cfg.satellite_oracle.spec);
          trace.answer = out.answer;
          trace.has_answer = true;
        }
        break;
      }
      case Policy::ConfidenceAfterFullInference: {
        if (net == nullptr) throw std::invalid_argument("policy requires a net");
        const auto& out = ensure_sat_output();
        const int last = net->cfg.stages;
        StageInput input{features, stage_token_blocks(out.tokens, last,
                                                      net->cfg, cfg.encoder)};
        const double score = estimate(*net, last, input);
        trace.stage_scores.push_back(score);
        trace.t_confidence = cfg.sim.confidence_eval_s;
        trace.onboard_tokens = out.tokens.size();
        trace.t_generate = generation_time(out, cfg.satellite_oracle.spec);
        if (decide(*net, last, score).kind == DecisionKind::Offload) {
          offload = true;
          offload_stage = last;
        } else {
          trace.answer = out.answer;
          trace.has_answer = true;
        }
        break;
      }
      case Policy::SpaceVerse: {
        if (net == nullptr) throw std::invalid_argument("policy requires a net");
        const int stages = net->cfg.stages;
        const double rate = cfg.satellite_oracle.spec.tokens_per_second;
        for (int stage = 1; stage <= stages; ++stage) {
          std::vector<std::vector<double>> blocks;
          std::uint64_t have = 0;
          if (stage > 1) {
            const auto& out = ensure_sat_output();
            have = tokens_before_stage(stage, stages, net->cfg.token_block,
                                       out.tokens.size());
            blocks = stage_token_blocks(
                std::span<const std::uint32_t>(out.tokens.data(), have), stage,
                net->cfg, cfg.encoder);
          }
          trace.onboard_tokens = have;
          trace.t_generate = double(have) / rate;
          StageInput input{features, std::move(blocks)};
          const double score = estimate(*net, stage, input);
          trace.stage_scores.push_back(score);
          trace.t_confidence += cfg.sim.confidence_eval_s;
          const ConfidenceDecision dec = decide(*net, stage, score);
          if (dec.kind == DecisionKind::Offload) {
            offload = true;
            offload_stage = stage;
            break;
          }
          if (dec.kind == DecisionKind::AcceptOnboard) {
            // Accepting onboard means the complete output was produced,
            // which the single-stage configuration has not generated yet.
            const auto& out = ensure_sat_output();
            trace.onboard_tokens = out.tokens.size();
            trace.t_generate = generation_time(out, cfg.satellite_oracle.spec);
            trace.answer = out.answer;
            trace.has_answer = true;
          }
        }
        break;
      }
    }

    if (!offload) return std::nullopt;

    trace.offloaded = true;
    trace.offload_stage = offload_stage;
    const auto scores = region_attention_scores(region_tokens,
                                                encode_prompt(sample.prompt,
                                                              cfg.encoder),
                                                pp.normalize_attention, 1);
    const auto map = make_attention_map(scores, pp.alpha, pp.beta,
                                        pp.max_downsample_factor);
    const FilteredImage filtered = apply_filter(grid, map, pp.byte_model);
    trace.bytes_sent = filtered.total_bytes;
    trace.retained_mass = filtered.retained_attention_mass;

    PendingOffload pending;
    pending.index = index;
    pending.release_s =
        arrival_s + trace.t_encode + trace.t_generate + trace.t_confidence;
    pending.bytes = filtered.total_bytes;
    pending.mass = filtered.retained_attention_mass;
    return pending;
  }

  // Transmission plus ground inference for one offload intent.
  void finish_offload(const Sample& sample, const PendingOffload& pending,
                      std::span<const ContactWindow> windows, LinkQueue& queue,
                      SampleTrace& trace) const {
    try {
      const TransmissionRecord rec =
          queue.push(pending.bytes, pending.release_s, windows, cfg.link);
      trace.t_queue_tx = rec.complete_s - pending.release_s;
    } catch (const HorizonExceeded&) {
      trace.complete = false;
      return;
    }
    const OracleOutput out = gnd_oracle.infer(sample, pending.mass);
    trace.t_ground = out.latency_s;
    trace.answer = out.answer;
    trace.has_answer = true;
  }
};

double arrival_time(const ScenarioConfig& cfg, std::size_t sat_index,
                    std::size_t position, double& cursor, Rng& rng) {
  if (!cfg.sim.poisson_arrivals) return 0.0;
  (void)sat_index;
  (void)position;
  cursor += -std::log(1.0 - rng.uniform()) / cfg.sim.poisson_rate_per_s;
  return cursor;
}

}  // namespace

std::vector<TrainRecord> build_training_dataset(const ScenarioConfig& cfg) {
  GeneratorSpec gen = cfg.generator;
  gen.count = cfg.training.sample_count;
  gen.seed = cfg.training.generator_seed;
  const auto samples = generate_samples(gen, cfg.sim.threads);
  if (samples.empty()) throw std::invalid_argument("empty training split");

  SyntheticOracle sat(cfg.satellite_oracle.spec, cfg.encoder);
  SyntheticOracle gnd(cfg.ground_oracle.spec, cfg.encoder);

  std::vector<TrainRecord> records(samples.size());
  const long n = long(samples.size());
  const int nt = resolve_threads(cfg.sim.threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (long i = 0; i < n; ++i) {
    const Sample& s = samples[std::size_t(i)];
    const RegionGrid grid = partition_image(s.image, cfg.preprocess.region_height,
                                            cfg.preprocess.region_width);
    const auto tokens = encode_grid(grid, cfg.encoder, s.id, s.region_relevance, 1);
    const auto features = mean_pool_features(tokens);
    const OracleOutput sat_out = sat.infer(s, 1.0);
    const OracleOutput gnd_out = gnd.infer(s, 1.0);
    TrainRecord rec;
    rec.target = simi(sat_out.answer, gnd_out.answer, cfg.encoder);
    for (int stage = 1; stage <= cfg.confidence.stages; ++stage)
      rec.stage_inputs.push_back(StageInput{
          features, stage_token_blocks(sat_out.tokens, stage, cfg.confidence,
                                       cfg.encoder)});
    records[std::size_t(i)] = std::move(rec);
  }
  (void)nt;
  return records;
}

ProgressiveConfidenceNet train_confidence_net(const ScenarioConfig& cfg,
                                              TrainResult* result) {
  auto records = build_training_dataset(cfg);
  auto net = ProgressiveConfidenceNet::init(cfg.confidence, cfg.net_init_seed);
  TrainOptions options = cfg.training.options;
  options.threads = cfg.sim.threads;
  TrainResult r = train(net, records, options);
  if (result) *result = std::move(r);
  return net;
}

ProgressiveConfidenceNet obtain_net(const ScenarioConfig& cfg) {
  if (!cfg.net_path.empty() && std::filesystem::exists(cfg.net_path)) {
    auto net = load_net(cfg.net_path);
    if (net.cfg.stages != cfg.confidence.stages ||
        net.cfg.feature_dim != cfg.confidence.feature_dim ||
        net.cfg.token_embed_dim != cfg.confidence.token_embed_dim)
      throw std::runtime_error("confidence net file does not match the config");
    // Thresholds come from the scenario config, not the file.
    net.cfg.thresholds = cfg.confidence.thresholds;
    net.cfg.token_block = cfg.confidence.token_block;
    return net;
  }
  if (!cfg.train_if_missing)
    throw std::runtime_error(
        "confidence net missing: " + cfg.net_path +
        " (run train-confidence first or set train_if_missing)");
  auto net = train_confidence_net(cfg, nullptr);
  if (!cfg.net_path.empty()) save_net(net, cfg.net_path);
  return net;
}

SampleTrace run_sample(const Sample& sample, const ScenarioConfig& cfg,
                       const ProgressiveConfidenceNet* net,
                       std::span<const ContactWindow> windows, LinkQueue& queue,
                       double arrival_s) {
  SyntheticOracle sat(cfg.satellite_oracle.spec, cfg.encoder);
  SyntheticOracle gnd(cfg.ground_oracle.spec, cfg.encoder);
  Pipeline pipe{cfg, net, sat, gnd};
  SampleTrace trace;
  auto pending = pipe.evaluate(sample, arrival_s, 0, trace);
  if (pending) pipe.finish_offload(sample, *pending, windows, queue, trace);
  return trace;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  if (cfg.satellites.empty()) throw std::invalid_argument("no satellites");
  if (cfg.ground_stations.empty())
    throw std::invalid_argument("no ground stations");
  validate_oracle_pair(cfg.satellite_oracle.spec, cfg.ground_oracle.spec);

  std::optional<ProgressiveConfidenceNet> net;
  if (cfg.policy.kind == Policy::SpaceVerse ||
      cfg.policy.kind == Policy::ConfidenceAfterFullInference)
    net = obtain_net(cfg);

  const auto samples = generate_samples(cfg.generator, cfg.sim.threads);
  ScenarioResult result;
  result.traces.resize(samples.size());
  if (samples.empty()) return result;

  // Merged windows per satellite across every station.
  const auto per_pair =
      all_contact_windows(cfg.satellites, cfg.ground_stations, cfg.sim.horizon_s,
                          cfg.sim.window_step_s, cfg.sim.window_refine_s,
                          cfg.sim.threads);
  std::vector<std::vector<ContactWindow>> windows(cfg.satellites.size());
  for (std::size_t s = 0; s < cfg.satellites.size(); ++s)
    windows[s] = merge_windows(per_pair[s]);

  // Samples distributed evenly: sample i runs on satellite i mod N.
  const std::size_t n_sats = cfg.satellites.size();
  std::vector<std::vector<std::size_t>> assignment(n_sats);
  for (std::size_t i = 0; i < samples.size(); ++i)
    assignment[i % n_sats].push_back(i);

  auto sat_oracle = make_oracle(cfg.satellite_oracle, cfg.encoder);
  auto gnd_oracle = make_oracle(cfg.ground_oracle, cfg.encoder);
  Pipeline pipe{cfg, net ? &*net : nullptr, *sat_oracle, *gnd_oracle};

  std::exception_ptr first_error;
  const long n_pipelines = long(n_sats);
  const int nt = resolve_threads(cfg.sim.threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
#endif
  for (long p = 0; p < n_pipelines; ++p) {
    try {
      const auto& mine = assignment[std::size_t(p)];
      Rng arrival_rng(mix64(mix64(cfg.sim.arrival_seed, "arrivals"),
                            std::uint64_t(p)));
      double arrival_cursor = 0.0;
      std::vector<PendingOffload> pending;
      for (std::size_t pos = 0; pos < mine.size(); ++pos) {
        const std::size_t i = mine[pos];
        SampleTrace& trace = result.traces[i];
        const double arrival =
            arrival_time(cfg, std::size_t(p), pos, arrival_cursor, arrival_rng);
        auto intent = pipe.evaluate(samples[i], arrival, i, trace);
        trace.satellite_id = cfg.satellites[std::size_t(p)].id;
        if (intent) pending.push_back(*intent);
      }
      // FIFO by release instant (sample order breaks ties).
      std::stable_sort(pending.begin(), pending.end(),
                       [](const PendingOffload& a, const PendingOffload& b) {
                         return a.release_s < b.release_s;
                       });
      LinkQueue queue;
      for (const auto& po : pending)
        pipe.finish_offload(samples[po.index], po, windows[std::size_t(p)],
                            queue, result.traces[po.index]);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      if (!first_error) first_error = std::current_exception();
    }
  }
  (void)nt;
  if (first_error) std::rethrow_exception(first_error);

  // Similarity against ground truth, then aggregate in sample order.
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& t = result.traces[i];
    if (t.complete && t.has_answer)
      t.simi_to_truth = simi(t.answer, samples[i].ground_truth, cfg.encoder);
  }

  auto& m = result.metrics;
  m.samples = samples.size();
  std::vector<double> latencies;
  double sum_simi = 0, sum_enc = 0, sum_gen = 0, sum_conf = 0, sum_tx = 0,
         sum_gnd = 0, sum_total = 0, sum_ratio = 0;
  std::size_t offloaded = 0;
  for (const auto& t : result.traces) {
    if (!t.complete) {
      ++m.incomplete;
      continue;
    }
    if (t.offloaded) {
      ++m.ground;
      ++offloaded;
      sum_ratio += double(t.bytes_original) / double(t.bytes_sent);
    } else {
      ++m.onboard;
    }
    sum_simi += t.simi_to_truth;
    const double total = t.total_latency();
    latencies.push_back(total);
    sum_enc += t.t_encode;
    sum_gen += t.t_generate;
    sum_conf += t.t_confidence;
    sum_tx += t.t_queue_tx;
    sum_gnd += t.t_ground;
    sum_total += total;
  }
  const std::size_t complete = latencies.size();
  if (complete > 0) {
    m.mean_simi = sum_simi / double(complete);
    m.mean_latency = sum_total / double(complete);
    std::sort(latencies.begin(), latencies.end());
    auto pct = [&](double q) {
      const std::size_t rank =
          std::min(complete - 1,
                   std::size_t(std::ceil(q * double(complete))) -
                       (q > 0.0 ? 1 : 0));
      return latencies[rank];
    };
    m.p50_latency = pct(0.50);
    m.p95_latency = pct(0.95);
    m.p99_latency = pct(0.99);
    m.offload_fraction = double(m.ground) / double(complete);
    if (sum_total > 0) {
      m.share_encode = sum_enc / sum_total;
      m.share_generate = sum_gen / sum_total;
      m.share_confidence = sum_conf / sum_total;
      m.share_queue_tx = sum_tx / sum_total;
      m.share_ground = sum_gnd / sum_total;
    }
  }
  m.mean_compression_ratio = offloaded > 0 ? sum_ratio / double(offloaded) : 1.0;
  return result;
}

// ---------------------------------------------------------------------------
// Experiments.

namespace {

struct ScoredSample {
  double sat_simi = 0.0;
  double gnd_simi = 0.0;
  double final_score = 0.0;
};

}  // namespace

std::vector<SweepRow> sweep_offload(const ScenarioConfig& cfg,
                                    std::span<const double> fractions) {
  for (double f : fractions)
    if (f < 0.0 || f > 1.0)
      throw std::invalid_argument("sweep fraction outside [0,1]");
  const auto net = obtain_net(cfg);
  const auto samples = generate_samples(cfg.generator, cfg.sim.threads);
  SyntheticOracle sat(cfg.satellite_oracle.spec, cfg.encoder);
  SyntheticOracle gnd(cfg.ground_oracle.spec, cfg.encoder);

  std::vector<ScoredSample> scored(samples.size());
  const long n = long(samples.size());
  const int nt = resolve_threads(cfg.sim.threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (long i = 0; i < n; ++i) {
    const Sample& s = samples[std::size_t(i)];
    const auto& pp = cfg.preprocess;
    const RegionGrid grid =
        partition_image(s.image, pp.region_height, pp.region_width);
    const auto tokens = encode_grid(grid, cfg.encoder, s.id, s.region_relevance, 1);
    const auto features = mean_pool_features(tokens);
    const OracleOutput sat_out = sat.infer(s, 1.0);

    const auto scores = region_attention_scores(
        tokens, encode_prompt(s.prompt, cfg.encoder), pp.normalize_attention, 1);
    const auto map =
        make_attention_map(scores, pp.alpha, pp.beta, pp.max_downsample_factor);
    const FilteredImage filtered = apply_filter(grid, map, pp.byte_model);
    const OracleOutput gnd_out = gnd.infer(s, filtered.retained_attention_mass);

    const int last = net.cfg.stages;
    StageInput input{features, stage_token_blocks(sat_out.tokens, last, net.cfg,
                                                  cfg.encoder)};
    auto& sc = scored[std::size_t(i)];
    sc.final_score = estimate(net, last, input);
    sc.sat_simi = simi(sat_out.answer, s.ground_truth, cfg.encoder);
    sc.gnd_simi = simi(gnd_out.answer, s.ground_truth, cfg.encoder);
  }
  (void)nt;

  std::vector<std::size_t> by_score(scored.size());
  std::iota(by_score.begin(), by_score.end(), std::size_t(0));
  std::stable_sort(by_score.begin(), by_score.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scored[a].final_score < scored[b].final_score;
                   });

  std::vector<SweepRow> rows;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const double f = fractions[fi];
    const auto k = std::size_t(std::llround(f * double(scored.size())));

    double conf_sum = 0.0;
    std::vector<std::uint8_t> offload(scored.size(), 0);
    for (std::size_t i = 0; i < k && i < by_score.size(); ++i)
      offload[by_score[i]] = 1;
    for (std::size_t i = 0; i < scored.size(); ++i)
      conf_sum += offload[i] ? scored[i].gnd_simi : scored[i].sat_simi;

    std::vector<std::size_t> order(scored.size());
    std::iota(order.begin(), order.end(), std::size_t(0));
    Rng rng(mix64(mix64(cfg.policy.seed, "sweep-random"), std::uint64_t(fi)));
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j = i + std::size_t(rng.below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    double rand_sum = 0.0;
    std::fill(offload.begin(), offload.end(), 0);
    for (std::size_t i = 0; i < k && i < order.size(); ++i) offload[order[i]] = 1;
    for (std::size_t i = 0; i < scored.size(); ++i)
      rand_sum += offload[i] ? scored[i].gnd_simi : scored[i].sat_simi;

    SweepRow row;
    row.fraction = f;
    row.confidence_mean_simi = scored.empty() ? 0.0 : conf_sum / double(scored.size());
    row.random_mean_simi = scored.empty() ? 0.0 : rand_sum / double(scored.size());
    rows.push_back(row);
  }
  return rows;
}

std::vector<MaskRow> masking_experiment(const ScenarioConfig& cfg,
                                        std::span<const double> fractions) {
  GeneratorSpec gen = cfg.generator;
  gen.qa_weight = 0.0;
  gen.classification_weight = 0.0;
  gen.detection_weight = 1.0;
  const auto samples = generate_samples(gen, cfg.sim.threads);
  if (samples.empty()) throw std::invalid_argument("no detection samples");
  SyntheticOracle gnd(cfg.ground_oracle.spec, cfg.encoder);

  constexpr const char* kStrategies[] = {"random", "ideal", "attention"};
  // accum[fraction][strategy] -> (sum simi, sum bytes)
  std::vector<std::vector<std::pair<double, double>>> accum(
      fractions.size(),
      std::vector<std::pair<double, double>>(3, {0.0, 0.0}));

  const long n = long(samples.size());
  const int nt = resolve_threads(cfg.sim.threads);
  std::vector<std::vector<std::vector<std::pair<double, double>>>> partial(
      std::size_t(n),
      std::vector<std::vector<std::pair<double, double>>>(
          fractions.size(), std::vector<std::pair<double, double>>(3, {0, 0})));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
  for (long i = 0; i < n; ++i) {
    const Sample& s = samples[std::size_t(i)];
    const auto& pp = cfg.preprocess;
    const RegionGrid grid =
        partition_image(s.image, pp.region_height, pp.region_width);
    const auto tokens = encode_grid(grid, cfg.encoder, s.id, s.region_relevance, 1);
    const auto scores = region_attention_scores(
        tokens, encode_prompt(s.prompt, cfg.encoder), pp.normalize_attention, 1);
    const auto& box = std::get<BoxAnswer>(s.ground_truth.value);
    const std::uint64_t mask_seed = mix64(cfg.master_seed, fnv1a64(s.id));

    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
      const double f = fractions[fi];
      const FilteredImage variants[3] = {
          random_mask(grid, f, mask_seed, pp.byte_model, scores),
          budgeted_ideal_mask(grid, box, f, mask_seed, pp.byte_model, scores),
          rank_mask(grid, scores, f, pp.byte_model)};
      for (int v = 0; v < 3; ++v) {
        const OracleOutput out =
            gnd.infer(s, variants[v].retained_attention_mass);
        partial[std::size_t(i)][fi][std::size_t(v)] = {
            simi(out.answer, s.ground_truth, cfg.encoder),
            double(variants[v].total_bytes)};
      }
    }
  }
  (void)nt;
  for (std::size_t i = 0; i < std::size_t(n); ++i)
    for (std::size_t fi = 0; fi < fractions.size(); ++fi)
      for (std::size_t v = 0; v < 3; ++v) {
        accum[fi][v].first += partial[i][fi][v].first;
        accum[fi][v].second += partial[i][fi][v].second;
      }

  std::vector<MaskRow> rows;
  for (std::size_t fi = 0; fi < fractions.size(); ++fi)
    for (std::size_t v = 0; v < 3; ++v) {
      MaskRow row;
      row.fraction = fractions[fi];
      row.strategy = kStrategies[v];
      row.mean_simi = accum[fi][v].first / double(n);
      row.mean_bytes = accum[fi][v].second / double(n);
      rows.push_back(row);
    }
  return rows;
}

}  // namespace spaceverse
