#include "spaceverse/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "spaceverse/rng.hpp"

namespace spaceverse {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Tracks consumed keys of one JSON object so typos surface as errors
// instead of silently falling back to defaults.
class Strict {
 public:
  Strict(const json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object())
      errors_.push_back(path_ + ": expected an object");
  }

  bool has(const char* key) {
    if (!j_.is_object()) return false;
    return j_.contains(key);
  }

  template <typename T>
  T get(const char* key, T fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      errors_.push_back(path_ + "." + key + ": wrong type");
      return fallback;
    }
  }

  // Accepts numbers plus the strings "inf" / "-inf".
  double extended_number(const char* key, double fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    const json& v = j_.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    errors_.push_back(path_ + "." + key + ": expected number or \"[-+]inf\"");
    return fallback;
  }

  const json* child_object(const char* key) {
    if (!has(key)) return nullptr;
    used_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_object()) {
      errors_.push_back(path_ + "." + key + ": expected an object");
      return nullptr;
    }
    return &v;
  }

  const json* child_array(const char* key) {
    if (!has(key)) return nullptr;
    used_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_array()) {
      errors_.push_back(path_ + "." + key + ": expected an array");
      return nullptr;
    }
    return &v;
  }

  void finish() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key()))
        errors_.push_back(path_ + "." + it.key() + ": unknown field");
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

void parse_oracle(const json* node, const std::string& path, OracleRole role,
                  OracleBackend& backend, std::vector<std::string>& errors,
                  bool* seed_set) {
  backend.spec.role = role;
  if (role == OracleRole::Ground) {
    backend.spec.accuracy_midpoint = 0.8;
    backend.spec.tokens_per_second = 40.0;
    backend.spec.encode_latency_s = 0.2;
  }
  *seed_set = false;
  if (!node) return;
  Strict r(*node, path, errors);
  backend.spec.accuracy_slope = r.get("accuracy_slope", backend.spec.accuracy_slope);
  backend.spec.accuracy_midpoint =
      r.get("accuracy_midpoint", backend.spec.accuracy_midpoint);
  backend.spec.tokens_per_second =
      r.get("tokens_per_second", backend.spec.tokens_per_second);
  backend.spec.encode_latency_s =
      r.get("encode_latency_s", backend.spec.encode_latency_s);
  backend.spec.qa_output_tokens =
      r.get("qa_output_tokens", backend.spec.qa_output_tokens);
  backend.spec.classification_output_tokens = r.get(
      "classification_output_tokens", backend.spec.classification_output_tokens);
  backend.spec.detection_output_tokens =
      r.get("detection_output_tokens", backend.spec.detection_output_tokens);
  if (role == OracleRole::Ground)
    backend.spec.degradation_exponent =
        r.get("degradation_exponent", backend.spec.degradation_exponent);
  if (r.has("seed")) {
    backend.spec.seed = r.get<std::uint64_t>("seed", 0);
    *seed_set = true;
  }
  backend.external_command = r.get("external_command", std::string());
  r.finish();

  if (backend.spec.tokens_per_second <= 0)
    errors.push_back(path + ".tokens_per_second: must be positive");
  if (backend.spec.encode_latency_s < 0)
    errors.push_back(path + ".encode_latency_s: must be non-negative");
}

std::pair<double, double> parse_range(Strict& r, const json* node,
                                      const std::string& path, double lo,
                                      double hi,
                                      std::vector<std::string>& errors,
                                      const char* key) {
  (void)r;
  if (!node) return {lo, hi};
  if (!node->is_array() || node->size() != 2 || !(*node)[0].is_number() ||
      !(*node)[1].is_number()) {
    errors.push_back(path + "." + key + ": expected [min, max]");
    return {lo, hi};
  }
  return {(*node)[0].get<double>(), (*node)[1].get<double>()};
}

}  // namespace

ScenarioConfig default_config() {
  ScenarioConfig cfg;
  // Starlink-like shell: ten satellites at 570 km, 70 deg inclination,
  // spread in RAAN and anomaly; one mid-latitude station.
  for (int i = 0; i < 10; ++i) {
    OrbitSpec o;
    char id[16];
    std::snprintf(id, sizeof(id), "sat-%02d", i);
    o.id = id;
    o.altitude_km = 570.0;
    o.inclination_deg = 70.0;
    o.raan_deg = 36.0 * i;
    o.initial_anomaly_deg = 72.0 * (i % 5);
    cfg.satellites.push_back(o);
  }
  GroundStationSpec gs;
  gs.id = "gs-00";
  gs.latitude_deg = 53.0;
  gs.longitude_deg = 8.0;
  // Calibrated so the mean contact fraction over 24 h is 4.33% of the
  // horizon for this shell (see the calibrate-mask subcommand).
  gs.min_elevation_deg = 4.7;
  cfg.ground_stations.push_back(gs);

  cfg.ground_oracle.spec.role = OracleRole::Ground;
  cfg.ground_oracle.spec.accuracy_midpoint = 0.8;
  cfg.ground_oracle.spec.tokens_per_second = 40.0;
  cfg.ground_oracle.spec.encode_latency_s = 0.2;

  // Derived pieces normally filled by config_from_json.
  cfg.encoder.seed = mix64(cfg.master_seed, "encoder");
  cfg.satellite_oracle.spec.seed = mix64(cfg.master_seed, "oracle-sat");
  cfg.ground_oracle.spec.seed = mix64(cfg.master_seed, "oracle-ground");
  cfg.generator.seed = mix64(cfg.master_seed, "samples");
  cfg.training.generator_seed = mix64(cfg.master_seed, "train-samples");
  cfg.training.options.seed = mix64(cfg.master_seed, "train-sgd");
  cfg.net_init_seed = mix64(cfg.master_seed, "net-init");
  cfg.policy.seed = mix64(cfg.master_seed, "policy");
  cfg.sim.arrival_seed = mix64(cfg.master_seed, "arrivals");
  cfg.confidence.feature_dim = cfg.encoder.embedding_dim;
  cfg.confidence.token_embed_dim = cfg.encoder.token_embed_dim;
  cfg.generator.region_height = cfg.preprocess.region_height;
  cfg.generator.region_width = cfg.preprocess.region_width;
  cfg.satellite_oracle.spec.label_count = cfg.generator.label_count;
  cfg.ground_oracle.spec.label_count = cfg.generator.label_count;
  cfg.satellite_oracle.spec.wrong_box_shift_px = cfg.preprocess.region_width;
  cfg.ground_oracle.spec.wrong_box_shift_px = cfg.preprocess.region_width;
  return cfg;
}

ScenarioConfig config_from_json(const json& root) {
  std::vector<std::string> errors;
  ScenarioConfig cfg = default_config();
  cfg.satellites.clear();
  cfg.ground_stations.clear();

  Strict r(root, "config", errors);
  const int version = r.get("version", 1);
  if (version != 1) errors.push_back("config.version: unsupported version");
  cfg.master_seed = r.get<std::uint64_t>("seed", cfg.master_seed);

  bool encoder_seed_set = false, generator_seed_set = false,
       train_gen_seed_set = false, train_sgd_seed_set = false,
       net_init_seed_set = false, policy_seed_set = false,
       arrival_seed_set = false, sat_seed_set = false, gnd_seed_set = false;

  if (const json* sim = r.child_object("sim")) {
    Strict s(*sim, "config.sim", errors);
    cfg.sim.horizon_s = s.get("horizon_s", cfg.sim.horizon_s);
    cfg.sim.confidence_eval_s = s.get("confidence_eval_s", cfg.sim.confidence_eval_s);
    cfg.sim.window_step_s = s.get("window_step_s", cfg.sim.window_step_s);
    cfg.sim.window_refine_s = s.get("window_refine_s", cfg.sim.window_refine_s);
    cfg.sim.poisson_arrivals = s.get("poisson_arrivals", cfg.sim.poisson_arrivals);
    cfg.sim.poisson_rate_per_s =
        s.get("poisson_rate_per_s", cfg.sim.poisson_rate_per_s);
    if (s.has("arrival_seed")) {
      cfg.sim.arrival_seed = s.get<std::uint64_t>("arrival_seed", 0);
      arrival_seed_set = true;
    }
    cfg.sim.threads = s.get("threads", cfg.sim.threads);
    s.finish();
    if (cfg.sim.horizon_s <= 0) errors.push_back("config.sim.horizon_s: must be positive");
    if (cfg.sim.window_step_s <= 0)
      errors.push_back("config.sim.window_step_s: must be positive");
  }

  if (const json* con = r.child_object("constellation")) {
    Strict c(*con, "config.constellation", errors);
    if (const json* sats = c.child_array("satellites")) {
      int i = 0;
      for (const auto& item : *sats) {
        const std::string path =
            "config.constellation.satellites[" + std::to_string(i) + "]";
        Strict s(item, path, errors);
        OrbitSpec o;
        char fallback_id[16];
        std::snprintf(fallback_id, sizeof(fallback_id), "sat-%02d", i);
        o.id = s.get("id", std::string(fallback_id));
        o.altitude_km = s.get("altitude_km", 570.0);
        o.inclination_deg = s.get("inclination_deg", 70.0);
        o.raan_deg = s.get("raan_deg", 0.0);
        o.initial_anomaly_deg = s.get("initial_anomaly_deg", 0.0);
        o.epoch_s = s.get("epoch_s", 0.0);
        s.finish();
        if (o.altitude_km <= 0) errors.push_back(path + ".altitude_km: must be positive");
        if (o.inclination_deg < 0 || o.inclination_deg > 180)
          errors.push_back(path + ".inclination_deg: outside [0, 180]");
        if (o.raan_deg < 0 || o.raan_deg >= 360)
          errors.push_back(path + ".raan_deg: outside [0, 360)");
        if (o.initial_anomaly_deg < 0 || o.initial_anomaly_deg >= 360)
          errors.push_back(path + ".initial_anomaly_deg: outside [0, 360)");
        cfg.satellites.push_back(o);
        ++i;
      }
    }
    if (const json* stations = c.child_array("ground_stations")) {
      int i = 0;
      for (const auto& item : *stations) {
        const std::string path =
            "config.constellation.ground_stations[" + std::to_string(i) + "]";
        Strict s(item, path, errors);
        GroundStationSpec g;
        char fallback_id[16];
        std::snprintf(fallback_id, sizeof(fallback_id), "gs-%02d", i);
        g.id = s.get("id", std::string(fallback_id));
        g.latitude_deg = s.get("latitude_deg", 0.0);
        g.longitude_deg = s.get("longitude_deg", 0.0);
        g.min_elevation_deg = s.get("min_elevation_deg", 10.0);
        s.finish();
        if (g.latitude_deg < -90 || g.latitude_deg > 90)
          errors.push_back(path + ".latitude_deg: outside [-90, 90]");
        if (g.longitude_deg < -180 || g.longitude_deg > 180)
          errors.push_back(path + ".longitude_deg: outside [-180, 180]");
        if (g.min_elevation_deg < 0 || g.min_elevation_deg >= 90)
          errors.push_back(path + ".min_elevation_deg: outside [0, 90)");
        cfg.ground_stations.push_back(g);
        ++i;
      }
    }
    c.finish();
  }
  if (cfg.satellites.empty()) {
    cfg.satellites = default_config().satellites;
  }
  if (cfg.ground_stations.empty()) {
    cfg.ground_stations = default_config().ground_stations;
  }

  if (const json* link = r.child_object("link")) {
    Strict l(*link, "config.link", errors);
    cfg.link.bandwidth_bps = l.get("bandwidth_bps", cfg.link.bandwidth_bps);
    cfg.link.per_message_overhead_bytes = l.get<std::uint64_t>(
        "per_message_overhead_bytes", cfg.link.per_message_overhead_bytes);
    l.finish();
    if (cfg.link.bandwidth_bps <= 0)
      errors.push_back("config.link.bandwidth_bps: must be positive");
  }

  if (const json* enc = r.child_object("encoder")) {
    Strict e(*enc, "config.encoder", errors);
    cfg.encoder.embedding_dim = e.get("embedding_dim", cfg.encoder.embedding_dim);
    cfg.encoder.tokens_per_region =
        e.get("tokens_per_region", cfg.encoder.tokens_per_region);
    cfg.encoder.tokens_per_prompt =
        e.get("tokens_per_prompt", cfg.encoder.tokens_per_prompt);
    cfg.encoder.token_embed_dim =
        e.get("token_embed_dim", cfg.encoder.token_embed_dim);
    cfg.encoder.prompt_noise = e.get("prompt_noise", cfg.encoder.prompt_noise);
    cfg.encoder.pixel_gain = e.get("pixel_gain", cfg.encoder.pixel_gain);
    if (e.has("seed")) {
      cfg.encoder.seed = e.get<std::uint64_t>("seed", 0);
      encoder_seed_set = true;
    }
    e.finish();
    if (cfg.encoder.embedding_dim < 1)
      errors.push_back("config.encoder.embedding_dim: must be >= 1");
    if (cfg.encoder.tokens_per_region < 1 || cfg.encoder.tokens_per_prompt < 1)
      errors.push_back("config.encoder: token counts must be >= 1");
  }

  if (const json* pp = r.child_object("preprocess")) {
    Strict p(*pp, "config.preprocess", errors);
    cfg.preprocess.alpha = p.get("alpha", cfg.preprocess.alpha);
    cfg.preprocess.beta = p.get("beta", cfg.preprocess.beta);
    cfg.preprocess.region_height = p.get("region_height", cfg.preprocess.region_height);
    cfg.preprocess.region_width = p.get("region_width", cfg.preprocess.region_width);
    cfg.preprocess.max_downsample_factor =
        p.get("max_downsample_factor", cfg.preprocess.max_downsample_factor);
    cfg.preprocess.normalize_attention =
        p.get("normalize_attention", cfg.preprocess.normalize_attention);
    cfg.preprocess.byte_model.bytes_per_pixel = p.get<std::uint64_t>(
        "bytes_per_pixel", cfg.preprocess.byte_model.bytes_per_pixel);
    cfg.preprocess.byte_model.region_header_bytes = p.get<std::uint64_t>(
        "region_header_bytes", cfg.preprocess.byte_model.region_header_bytes);
    p.finish();
    if (!(cfg.preprocess.alpha < cfg.preprocess.beta))
      errors.push_back("config.preprocess: alpha must be strictly below beta");
    if (cfg.preprocess.region_height < 1 || cfg.preprocess.region_width < 1)
      errors.push_back("config.preprocess: region dimensions must be >= 1");
  }

  if (const json* conf = r.child_object("confidence")) {
    Strict c(*conf, "config.confidence", errors);
    cfg.confidence.stages = c.get("stages", cfg.confidence.stages);
    if (const json* th = c.child_array("thresholds")) {
      cfg.confidence.thresholds.clear();
      int i = 0;
      for (const auto& item : *th) {
        if (item.is_number()) {
          cfg.confidence.thresholds.push_back(item.get<double>());
        } else if (item.is_string()) {
          const auto s = item.get<std::string>();
          if (s == "inf" || s == "+inf")
            cfg.confidence.thresholds.push_back(
                std::numeric_limits<double>::infinity());
          else if (s == "-inf")
            cfg.confidence.thresholds.push_back(
                -std::numeric_limits<double>::infinity());
          else
            errors.push_back("config.confidence.thresholds[" +
                             std::to_string(i) + "]: bad value");
        } else {
          errors.push_back("config.confidence.thresholds[" + std::to_string(i) +
                           "]: expected number or \"[-+]inf\"");
        }
        ++i;
      }
    }
    cfg.confidence.trunk_width = c.get("trunk_width", cfg.confidence.trunk_width);
    cfg.confidence.trunk_hidden_layers =
        c.get("trunk_hidden_layers", cfg.confidence.trunk_hidden_layers);
    cfg.confidence.token_block = c.get("token_block", cfg.confidence.token_block);
    cfg.net_path = c.get("net_path", cfg.net_path);
    cfg.train_if_missing = c.get("train_if_missing", cfg.train_if_missing);
    if (c.has("init_seed")) {
      cfg.net_init_seed = c.get<std::uint64_t>("init_seed", 0);
      net_init_seed_set = true;
    }
    if (const json* tr = c.child_object("training")) {
      Strict t(*tr, "config.confidence.training", errors);
      cfg.training.sample_count = t.get("sample_count", cfg.training.sample_count);
      if (t.has("generator_seed")) {
        cfg.training.generator_seed = t.get<std::uint64_t>("generator_seed", 0);
        train_gen_seed_set = true;
      }
      cfg.training.options.epochs = t.get("epochs", cfg.training.options.epochs);
      cfg.training.options.batch_size =
          t.get("batch_size", cfg.training.options.batch_size);
      cfg.training.options.learning_rate =
          t.get("learning_rate", cfg.training.options.learning_rate);
      cfg.training.options.momentum =
          t.get("momentum", cfg.training.options.momentum);
      if (t.has("seed")) {
        cfg.training.options.seed = t.get<std::uint64_t>("seed", 0);
        train_sgd_seed_set = true;
      }
      t.finish();
    }
    c.finish();
    if (cfg.confidence.stages < 1)
      errors.push_back("config.confidence.stages: must be >= 1");
    if (int(cfg.confidence.thresholds.size()) != cfg.confidence.stages)
      errors.push_back("config.confidence.thresholds: need one per stage");
    if (cfg.confidence.token_block < 1)
      errors.push_back("config.confidence.token_block: must be >= 1");
  }

  if (const json* oracles = r.child_object("oracles")) {
    Strict o(*oracles, "config.oracles", errors);
    parse_oracle(o.child_object("satellite"), "config.oracles.satellite",
                 OracleRole::Satellite, cfg.satellite_oracle, errors,
                 &sat_seed_set);
    parse_oracle(o.child_object("ground"), "config.oracles.ground",
                 OracleRole::Ground, cfg.ground_oracle, errors, &gnd_seed_set);
    o.finish();
  } else {
    bool ignored = false;
    parse_oracle(nullptr, "", OracleRole::Satellite, cfg.satellite_oracle,
                 errors, &ignored);
    parse_oracle(nullptr, "", OracleRole::Ground, cfg.ground_oracle, errors,
                 &ignored);
  }

  if (const json* gen = r.child_object("samples")) {
    Strict g(*gen, "config.samples", errors);
    cfg.generator.count = g.get("count", cfg.generator.count);
    cfg.generator.image_height = g.get("image_height", cfg.generator.image_height);
    cfg.generator.image_width = g.get("image_width", cfg.generator.image_width);
    if (const json* mix = g.child_object("task_mix")) {
      Strict m(*mix, "config.samples.task_mix", errors);
      cfg.generator.qa_weight = m.get("qa", cfg.generator.qa_weight);
      cfg.generator.classification_weight =
          m.get("classification", cfg.generator.classification_weight);
      cfg.generator.detection_weight =
          m.get("detection", cfg.generator.detection_weight);
      m.finish();
    }
    if (const json* diff = g.child_object("difficulty")) {
      Strict d(*diff, "config.samples.difficulty", errors);
      auto qa = parse_range(d, d.child_array("qa"), "config.samples.difficulty",
                            cfg.generator.qa_difficulty_min,
                            cfg.generator.qa_difficulty_max, errors, "qa");
      cfg.generator.qa_difficulty_min = qa.first;
      cfg.generator.qa_difficulty_max = qa.second;
      auto cl = parse_range(d, d.child_array("classification"),
                            "config.samples.difficulty",
                            cfg.generator.classification_difficulty_min,
                            cfg.generator.classification_difficulty_max, errors,
                            "classification");
      cfg.generator.classification_difficulty_min = cl.first;
      cfg.generator.classification_difficulty_max = cl.second;
      auto de = parse_range(d, d.child_array("detection"),
                            "config.samples.difficulty",
                            cfg.generator.detection_difficulty_min,
                            cfg.generator.detection_difficulty_max, errors,
                            "detection");
      cfg.generator.detection_difficulty_min = de.first;
      cfg.generator.detection_difficulty_max = de.second;
      d.finish();
    }
    cfg.generator.relevant_fraction =
        g.get("relevant_fraction", cfg.generator.relevant_fraction);
    cfg.generator.mid_fraction = g.get("mid_fraction", cfg.generator.mid_fraction);
    auto rel = parse_range(g, g.child_array("relevant_rho"), "config.samples",
                           cfg.generator.relevant_rho_min,
                           cfg.generator.relevant_rho_max, errors, "relevant_rho");
    cfg.generator.relevant_rho_min = rel.first;
    cfg.generator.relevant_rho_max = rel.second;
    auto mid = parse_range(g, g.child_array("mid_rho"), "config.samples",
                           cfg.generator.mid_rho_min, cfg.generator.mid_rho_max,
                           errors, "mid_rho");
    cfg.generator.mid_rho_min = mid.first;
    cfg.generator.mid_rho_max = mid.second;
    cfg.generator.irrelevant_rho_max =
        g.get("irrelevant_rho_max", cfg.generator.irrelevant_rho_max);
    cfg.generator.detection_box_regions =
        g.get("detection_box_regions", cfg.generator.detection_box_regions);
    cfg.generator.base_intensity =
        g.get("base_intensity", cfg.generator.base_intensity);
    cfg.generator.difficulty_intensity_gain = g.get(
        "difficulty_intensity_gain", cfg.generator.difficulty_intensity_gain);
    cfg.generator.relevance_intensity_gain = g.get(
        "relevance_intensity_gain", cfg.generator.relevance_intensity_gain);
    cfg.generator.pixel_noise = g.get("pixel_noise", cfg.generator.pixel_noise);
    cfg.generator.label_count = g.get("label_count", cfg.generator.label_count);
    cfg.generator.qa_answer_tokens =
        g.get("qa_answer_tokens", cfg.generator.qa_answer_tokens);
    if (g.has("seed")) {
      cfg.generator.seed = g.get<std::uint64_t>("seed", 0);
      generator_seed_set = true;
    }
    g.finish();
    if (cfg.generator.count < 0)
      errors.push_back("config.samples.count: must be >= 0");
    if (cfg.generator.label_count < 2)
      errors.push_back("config.samples.label_count: must be >= 2");
    auto check_unit_range = [&](double lo, double hi, const char* field) {
      if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
        errors.push_back(std::string("config.samples.") + field +
                         ": need 0 <= min <= max <= 1");
    };
    check_unit_range(cfg.generator.qa_difficulty_min,
                     cfg.generator.qa_difficulty_max, "difficulty.qa");
    check_unit_range(cfg.generator.classification_difficulty_min,
                     cfg.generator.classification_difficulty_max,
                     "difficulty.classification");
    check_unit_range(cfg.generator.detection_difficulty_min,
                     cfg.generator.detection_difficulty_max,
                     "difficulty.detection");
    check_unit_range(cfg.generator.relevant_rho_min,
                     cfg.generator.relevant_rho_max, "relevant_rho");
    check_unit_range(cfg.generator.mid_rho_min, cfg.generator.mid_rho_max,
                     "mid_rho");
    check_unit_range(0.0, cfg.generator.irrelevant_rho_max, "irrelevant_rho_max");
    if (cfg.generator.relevant_fraction < 0 || cfg.generator.mid_fraction < 0 ||
        cfg.generator.relevant_fraction + cfg.generator.mid_fraction > 1.0)
      errors.push_back(
          "config.samples: relevant_fraction + mid_fraction must fit in [0, 1]");
  }

  if (const json* pol = r.child_object("policy")) {
    Strict p(*pol, "config.policy", errors);
    const std::string name = p.get("name", std::string("SpaceVerse"));
    try {
      cfg.policy.kind = policy_from_string(name);
    } catch (const std::invalid_argument&) {
      errors.push_back("config.policy.name: unknown policy \"" + name + "\"");
    }
    cfg.policy.random_fraction =
        p.get("random_fraction", cfg.policy.random_fraction);
    if (p.has("seed")) {
      cfg.policy.seed = p.get<std::uint64_t>("seed", 0);
      policy_seed_set = true;
    }
    p.finish();
    if (cfg.policy.random_fraction < 0 || cfg.policy.random_fraction > 1)
      errors.push_back("config.policy.random_fraction: outside [0, 1]");
  }

  r.finish();

  // Derived seeds: everything explicit in the resolved echo.
  if (!encoder_seed_set) cfg.encoder.seed = mix64(cfg.master_seed, "encoder");
  if (!sat_seed_set)
    cfg.satellite_oracle.spec.seed = mix64(cfg.master_seed, "oracle-sat");
  if (!gnd_seed_set)
    cfg.ground_oracle.spec.seed = mix64(cfg.master_seed, "oracle-ground");
  if (!generator_seed_set) cfg.generator.seed = mix64(cfg.master_seed, "samples");
  if (!train_gen_seed_set)
    cfg.training.generator_seed = mix64(cfg.master_seed, "train-samples");
  if (!train_sgd_seed_set)
    cfg.training.options.seed = mix64(cfg.master_seed, "train-sgd");
  if (!net_init_seed_set) cfg.net_init_seed = mix64(cfg.master_seed, "net-init");
  if (!policy_seed_set) cfg.policy.seed = mix64(cfg.master_seed, "policy");
  if (!arrival_seed_set) cfg.sim.arrival_seed = mix64(cfg.master_seed, "arrivals");

  // Derived structure.
  cfg.confidence.feature_dim = cfg.encoder.embedding_dim;
  cfg.confidence.token_embed_dim = cfg.encoder.token_embed_dim;
  cfg.generator.region_height = cfg.preprocess.region_height;
  cfg.generator.region_width = cfg.preprocess.region_width;
  cfg.satellite_oracle.spec.label_count = cfg.generator.label_count;
  cfg.ground_oracle.spec.label_count = cfg.generator.label_count;
  cfg.satellite_oracle.spec.wrong_box_shift_px = cfg.preprocess.region_width;
  cfg.ground_oracle.spec.wrong_box_shift_px = cfg.preprocess.region_width;

  if (cfg.generator.image_height < cfg.preprocess.region_height ||
      cfg.generator.image_width < cfg.preprocess.region_width)
    errors.push_back("config.samples: image smaller than one region");

  try {
    validate_oracle_pair(cfg.satellite_oracle.spec, cfg.ground_oracle.spec);
  } catch (const std::invalid_argument& e) {
    errors.push_back(std::string("config.oracles: ") + e.what());
  }

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError({"config file not readable: " + path});
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return config_from_json(j);
}

namespace {

ordered_json threshold_json(double t) {
  if (std::isinf(t)) return t > 0 ? ordered_json("inf") : ordered_json("-inf");
  return ordered_json(t);
}

}  // namespace

ordered_json config_to_json(const ScenarioConfig& cfg) {
  ordered_json j;
  j["version"] = 1;
  j["seed"] = cfg.master_seed;

  j["sim"] = {{"horizon_s", cfg.sim.horizon_s},
              {"confidence_eval_s", cfg.sim.confidence_eval_s},
              {"window_step_s", cfg.sim.window_step_s},
              {"window_refine_s", cfg.sim.window_refine_s},
              {"poisson_arrivals", cfg.sim.poisson_arrivals},
              {"poisson_rate_per_s", cfg.sim.poisson_rate_per_s},
              {"arrival_seed", cfg.sim.arrival_seed},
              {"threads", cfg.sim.threads}};

  ordered_json sats = ordered_json::array();
  for (const auto& o : cfg.satellites)
    sats.push_back({{"id", o.id},
                    {"altitude_km", o.altitude_km},
                    {"inclination_deg", o.inclination_deg},
                    {"raan_deg", o.raan_deg},
                    {"initial_anomaly_deg", o.initial_anomaly_deg},
                    {"epoch_s", o.epoch_s}});
  ordered_json stations = ordered_json::array();
  for (const auto& g : cfg.ground_stations)
    stations.push_back({{"id", g.id},
                        {"latitude_deg", g.latitude_deg},
                        {"longitude_deg", g.longitude_deg},
                        {"min_elevation_deg", g.min_elevation_deg}});
  j["constellation"] = {{"satellites", sats}, {"ground_stations", stations}};

  j["link"] = {{"bandwidth_bps", cfg.link.bandwidth_bps},
               {"per_message_overhead_bytes", cfg.link.per_message_overhead_bytes}};

  j["encoder"] = {{"embedding_dim", cfg.encoder.embedding_dim},
                  {"tokens_per_region", cfg.encoder.tokens_per_region},
                  {"tokens_per_prompt", cfg.encoder.tokens_per_prompt},
                  {"token_embed_dim", cfg.encoder.token_embed_dim},
                  {"prompt_noise", cfg.encoder.prompt_noise},
                  {"pixel_gain", cfg.encoder.pixel_gain},
                  {"seed", cfg.encoder.seed}};

  j["preprocess"] = {
      {"alpha", cfg.preprocess.alpha},
      {"beta", cfg.preprocess.beta},
      {"region_height", cfg.preprocess.region_height},
      {"region_width", cfg.preprocess.region_width},
      {"max_downsample_factor", cfg.preprocess.max_downsample_factor},
      {"normalize_attention", cfg.preprocess.normalize_attention},
      {"bytes_per_pixel", cfg.preprocess.byte_model.bytes_per_pixel},
      {"region_header_bytes", cfg.preprocess.byte_model.region_header_bytes}};

  ordered_json thresholds = ordered_json::array();
  for (double t : cfg.confidence.thresholds) thresholds.push_back(threshold_json(t));
  j["confidence"] = {
      {"stages", cfg.confidence.stages},
      {"thresholds", thresholds},
      {"trunk_width", cfg.confidence.trunk_width},
      {"trunk_hidden_layers", cfg.confidence.trunk_hidden_layers},
      {"token_block", cfg.confidence.token_block},
      {"net_path", cfg.net_path},
      {"train_if_missing", cfg.train_if_missing},
      {"init_seed", cfg.net_init_seed},
      {"training",
       {{"sample_count", cfg.training.sample_count},
        {"generator_seed", cfg.training.generator_seed},
        {"epochs", cfg.training.options.epochs},
        {"batch_size", cfg.training.options.batch_size},
        {"learning_rate", cfg.training.options.learning_rate},
        {"momentum", cfg.training.options.momentum},
        {"seed", cfg.training.options.seed}}}};

  auto oracle_json = [](const OracleBackend& b, bool ground) {
    ordered_json o = {{"accuracy_slope", b.spec.accuracy_slope},
                      {"accuracy_midpoint", b.spec.accuracy_midpoint},
                      {"tokens_per_second", b.spec.tokens_per_second},
                      {"encode_latency_s", b.spec.encode_latency_s},
                      {"qa_output_tokens", b.spec.qa_output_tokens},
                      {"classification_output_tokens",
                       b.spec.classification_output_tokens},
                      {"detection_output_tokens", b.spec.detection_output_tokens},
                      {"seed", b.spec.seed},
                      {"external_command", b.external_command}};
    if (ground) o["degradation_exponent"] = b.spec.degradation_exponent;
    return o;
  };
  j["oracles"] = {{"satellite", oracle_json(cfg.satellite_oracle, false)},
                  {"ground", oracle_json(cfg.ground_oracle, true)}};

  j["samples"] = {
      {"count", cfg.generator.count},
      {"image_height", cfg.generator.image_height},
      {"image_width", cfg.generator.image_width},
      {"task_mix",
       {{"qa", cfg.generator.qa_weight},
        {"classification", cfg.generator.classification_weight},
        {"detection", cfg.generator.detection_weight}}},
      {"difficulty",
       {{"qa", {cfg.generator.qa_difficulty_min, cfg.generator.qa_difficulty_max}},
        {"classification",
         {cfg.generator.classification_difficulty_min,
          cfg.generator.classification_difficulty_max}},
        {"detection",
         {cfg.generator.detection_difficulty_min,
          cfg.generator.detection_difficulty_max}}}},
      {"relevant_fraction", cfg.generator.relevant_fraction},
      {"mid_fraction", cfg.generator.mid_fraction},
      {"relevant_rho",
       {cfg.generator.relevant_rho_min, cfg.generator.relevant_rho_max}},
      {"mid_rho", {cfg.generator.mid_rho_min, cfg.generator.mid_rho_max}},
      {"irrelevant_rho_max", cfg.generator.irrelevant_rho_max},
      {"detection_box_regions", cfg.generator.detection_box_regions},
      {"base_intensity", cfg.generator.base_intensity},
      {"difficulty_intensity_gain", cfg.generator.difficulty_intensity_gain},
      {"relevance_intensity_gain", cfg.generator.relevance_intensity_gain},
      {"pixel_noise", cfg.generator.pixel_noise},
      {"label_count", cfg.generator.label_count},
      {"qa_answer_tokens", cfg.generator.qa_answer_tokens},
      {"seed", cfg.generator.seed}};

  j["policy"] = {{"name", to_string(cfg.policy.kind)},
                 {"random_fraction", cfg.policy.random_fraction},
                 {"seed", cfg.policy.seed}};
  return j;
}

}  // namespace spaceverse
