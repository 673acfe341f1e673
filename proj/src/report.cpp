#include "spaceverse/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "spaceverse/models.hpp"

namespace spaceverse {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string traces_csv(const std::vector<SampleTrace>& traces) {
  std::ostringstream os;
  os << "sample_id,satellite,task,difficulty,status,route,offload_stage,"
        "confidence_scores,onboard_tokens,bytes_original,bytes_sent,"
        "retained_mass,t_encode_s,t_generate_s,t_confidence_s,t_queue_tx_s,"
        "t_ground_s,t_total_s,simi,answer\n";
  for (const auto& t : traces) {
    os << t.sample_id << ',' << t.satellite_id << ',' << to_string(t.kind) << ','
       << format_double(t.difficulty) << ','
       << (t.complete ? "complete" : "incomplete") << ','
       << (t.offloaded ? "ground" : "onboard") << ',' << t.offload_stage << ',';
    for (std::size_t i = 0; i < t.stage_scores.size(); ++i) {
      if (i) os << ';';
      os << format_double(t.stage_scores[i]);
    }
    os << ',' << t.onboard_tokens << ',' << t.bytes_original << ','
       << t.bytes_sent << ',' << format_double(t.retained_mass) << ','
       << format_double(t.t_encode) << ',' << format_double(t.t_generate) << ','
       << format_double(t.t_confidence) << ',' << format_double(t.t_queue_tx)
       << ',' << format_double(t.t_ground) << ','
       << format_double(t.total_latency()) << ',';
    if (t.complete && t.has_answer)
      os << format_double(t.simi_to_truth) << ',' << answer_to_string(t.answer);
    else
      os << ',';
    os << '\n';
  }
  return os.str();
}

std::string contact_report_csv(
    const std::vector<OrbitSpec>& sats,
    const std::vector<GroundStationSpec>& stations,
    const std::vector<std::vector<std::vector<ContactWindow>>>& windows) {
  std::ostringstream os;
  os << "sat_id,gs_id,start_s,end_s\n";
  for (std::size_t s = 0; s < sats.size(); ++s)
    for (std::size_t g = 0; g < stations.size(); ++g)
      for (const auto& w : windows[s][g])
        os << sats[s].id << ',' << stations[g].id << ','
           << format_double(w.start_s) << ',' << format_double(w.end_s) << '\n';
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "fraction,confidence_mean_simi,random_mean_simi\n";
  for (const auto& r : rows)
    os << format_double(r.fraction) << ','
       << format_double(r.confidence_mean_simi) << ','
       << format_double(r.random_mean_simi) << '\n';
  return os.str();
}

std::string mask_csv(const std::vector<MaskRow>& rows) {
  std::ostringstream os;
  os << "fraction,strategy,mean_simi,mean_bytes\n";
  for (const auto& r : rows)
    os << format_double(r.fraction) << ',' << r.strategy << ','
       << format_double(r.mean_simi) << ',' << format_double(r.mean_bytes)
       << '\n';
  return os.str();
}

nlohmann::ordered_json metrics_json(const ScenarioMetrics& m,
                                    const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["policy"] = to_string(cfg.policy.kind);
  j["counts"] = {{"samples", m.samples},
                 {"onboard", m.onboard},
                 {"ground", m.ground},
                 {"incomplete", m.incomplete}};
  j["mean_simi"] = m.mean_simi;
  j["latency_s"] = {{"mean", m.mean_latency},
                    {"p50", m.p50_latency},
                    {"p95", m.p95_latency},
                    {"p99", m.p99_latency}};
  j["offload_fraction"] = m.offload_fraction;
  j["mean_compression_ratio"] = m.mean_compression_ratio;
  j["latency_shares"] = {{"encode", m.share_encode},
                         {"generate", m.share_generate},
                         {"confidence", m.share_confidence},
                         {"queue_tx", m.share_queue_tx},
                         {"ground", m.share_ground}};
  j["link"] = {{"bandwidth_bps", cfg.link.bandwidth_bps}};
  j["elevation_mask_deg"] = cfg.ground_stations.empty()
                                ? 0.0
                                : cfg.ground_stations.front().min_elevation_deg;
  return j;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace spaceverse
