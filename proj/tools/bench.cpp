// Compares the OpenMP kernels against their serial reference paths:
// region attention scoring, confidence-net training, contact-window scans,
// and a full scenario run. Results must agree bit-for-bit; this target
// reports the wall-clock ratio.

#include <chrono>
#include <cstdio>

#include "spaceverse/config.hpp"
#include "spaceverse/parallel.hpp"

using namespace spaceverse;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-28s serial %8.3f s   parallel %8.3f s   speedup %5.2fx   %s\n",
              name, serial_s, parallel_s,
              parallel_s > 0 ? serial_s / parallel_s : 0.0,
              equal ? "bit-equal" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", resolve_threads(0));
  ScenarioConfig cfg = default_config();

  {  // Attention scoring over many regions, at a heavier encoder shape.
    EncoderSpec heavy = cfg.encoder;
    heavy.embedding_dim = 512;
    heavy.tokens_per_region = 16;
    heavy.tokens_per_prompt = 32;
    GeneratorSpec gen = cfg.generator;
    gen.count = 12;
    const auto samples = generate_samples(gen, 0);
    std::vector<std::vector<TokenMatrix>> tokens;
    std::vector<TokenMatrix> prompts;
    for (const auto& s : samples) {
      const auto grid = partition_image(s.image, cfg.preprocess.region_height,
                                        cfg.preprocess.region_width);
      tokens.push_back(encode_grid(grid, heavy, s.id, s.region_relevance, 0));
      prompts.push_back(encode_prompt(s.prompt, heavy));
    }
    // Warm-up pass so page faults and thread spin-up stay out of the timing.
    region_attention_scores(tokens[0], prompts[0], true, 0);
    region_attention_scores_serial(tokens[0], prompts[0]);
    auto t0 = clock_type::now();
    std::vector<std::vector<double>> serial;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      serial.push_back(region_attention_scores_serial(tokens[i], prompts[i]));
    const double ts = seconds_since(t0);
    t0 = clock_type::now();
    std::vector<std::vector<double>> parallel;
    for (std::size_t i = 0; i < tokens.size(); ++i)
      parallel.push_back(region_attention_scores(tokens[i], prompts[i], true, 0));
    const double tp = seconds_since(t0);
    report("region attention scores", ts, tp, serial == parallel);
  }

  {  // Training: serial (threads=1) vs parallel gradient accumulation,
     // on a wider trunk so each record carries real work.
    ScenarioConfig tc = cfg;
    tc.training.sample_count = 400;
    tc.confidence.trunk_width = 192;
    auto records = build_training_dataset(tc);
    auto net_serial = ProgressiveConfidenceNet::init(tc.confidence, tc.net_init_seed);
    auto net_parallel = net_serial;
    TrainOptions opt = tc.training.options;
    opt.epochs = 10;
    opt.threads = 1;
    train(net_serial, {records.begin(), records.begin() + 32}, opt);  // warm-up
    net_serial = net_parallel;
    auto t0 = clock_type::now();
    train(net_serial, records, opt);
    const double ts = seconds_since(t0);
    opt.threads = 0;
    t0 = clock_type::now();
    train(net_parallel, records, opt);
    const double tp = seconds_since(t0);
    report("confidence training", ts, tp, net_serial.params == net_parallel.params);
  }

  {  // Contact windows for the whole constellation, week-long fine scan.
    const double horizon = 7.0 * 86400.0;
    const double step = 2.0;
    all_contact_windows(cfg.satellites, cfg.ground_stations, 3600.0, step,
                        cfg.sim.window_refine_s, 0);
    auto t0 = clock_type::now();
    const auto serial = all_contact_windows(cfg.satellites, cfg.ground_stations,
                                            horizon, step,
                                            cfg.sim.window_refine_s, 1);
    const double ts = seconds_since(t0);
    t0 = clock_type::now();
    const auto parallel = all_contact_windows(cfg.satellites, cfg.ground_stations,
                                              horizon, step,
                                              cfg.sim.window_refine_s, 0);
    const double tp = seconds_since(t0);
    bool equal = serial.size() == parallel.size();
    for (std::size_t s = 0; equal && s < serial.size(); ++s)
      for (std::size_t g = 0; equal && g < serial[s].size(); ++g) {
        equal = serial[s][g].size() == parallel[s][g].size();
        for (std::size_t w = 0; equal && w < serial[s][g].size(); ++w)
          equal = serial[s][g][w].start_s == parallel[s][g][w].start_s &&
                  serial[s][g][w].end_s == parallel[s][g][w].end_s;
      }
    report("contact-window scan", ts, tp, equal);
  }

  {  // Whole scenario, satellite pipelines in parallel.
    ScenarioConfig sc = cfg;
    sc.generator.count = 300;
    sc.policy.kind = Policy::GroundOnly;
    sc.sim.threads = 1;
    auto t0 = clock_type::now();
    const auto serial = run_scenario(sc);
    const double ts = seconds_since(t0);
    sc.sim.threads = 0;
    t0 = clock_type::now();
    const auto parallel = run_scenario(sc);
    const double tp = seconds_since(t0);
    bool equal = serial.traces.size() == parallel.traces.size();
    for (std::size_t i = 0; equal && i < serial.traces.size(); ++i)
      equal = serial.traces[i].total_latency() ==
                  parallel.traces[i].total_latency() &&
              serial.traces[i].simi_to_truth == parallel.traces[i].simi_to_truth;
    report("scenario run", ts, tp, equal);
  }

  return 0;
}
