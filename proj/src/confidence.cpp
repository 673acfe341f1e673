#include "spaceverse/confidence.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "spaceverse/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spaceverse {

ParamLayout param_layout(const ConfidenceNetConfig& cfg) {
  ParamLayout lay;
  std::size_t at = 0;
  for (int i = 1; i <= cfg.stages; ++i) {
    lay.proj_w.push_back(at);
    at += std::size_t(cfg.trunk_width) * std::size_t(cfg.stage_input_dim(i));
    lay.proj_b.push_back(at);
    at += std::size_t(cfg.trunk_width);
  }
  for (int l = 0; l < cfg.trunk_hidden_layers; ++l) {
    lay.trunk_w.push_back(at);
    at += std::size_t(cfg.trunk_width) * std::size_t(cfg.trunk_width);
    lay.trunk_b.push_back(at);
    at += std::size_t(cfg.trunk_width);
  }
  lay.out_w = at;
  at += std::size_t(cfg.trunk_width);
  lay.out_b = at;
  at += 1;
  lay.total = at;
  return lay;
}

ProgressiveConfidenceNet ProgressiveConfidenceNet::init(
    const ConfidenceNetConfig& cfg, std::uint64_t seed) {
  if (cfg.stages < 1) throw std::invalid_argument("need at least one stage");
  if (int(cfg.thresholds.size()) != cfg.stages)
    throw std::invalid_argument("one threshold per stage required");
  ProgressiveConfidenceNet net;
  net.cfg = cfg;
  const ParamLayout lay = param_layout(cfg);
  net.params.assign(lay.total, 0.0);
  Rng rng(mix64(seed, "confidence-init"));

  auto xavier = [&](std::size_t at, int rows, int cols) {
    const double limit = std::sqrt(6.0 / double(rows + cols));
    for (int i = 0; i < rows * cols; ++i)
      net.params[at + std::size_t(i)] = rng.uniform(-limit, limit);
  };
  for (int i = 0; i < cfg.stages; ++i)
    xavier(lay.proj_w[std::size_t(i)], cfg.trunk_width, cfg.stage_input_dim(i + 1));
  for (int l = 0; l < cfg.trunk_hidden_layers; ++l)
    xavier(lay.trunk_w[std::size_t(l)], cfg.trunk_width, cfg.trunk_width);
  xavier(lay.out_w, 1, cfg.trunk_width);
  return net;
}

namespace {

struct Workspace {
  std::vector<double> input;                 // assembled stage input
  std::vector<double> z0;                    // projection output
  std::vector<std::vector<double>> hidden;   // tanh activations per layer
};

void assemble_input(const ConfidenceNetConfig& cfg, int stage,
                    const StageInput& in, std::vector<double>& x) {
  if (stage < 1 || stage > cfg.stages)
    throw std::invalid_argument("stage out of range");
  if (int(in.image_features.size()) != cfg.feature_dim)
    throw std::invalid_argument("image feature dimension mismatch");
  if (int(in.token_blocks.size()) != stage - 1)
    throw std::invalid_argument("stage input must carry stage-1 token blocks");
  x.assign(std::size_t(cfg.stage_input_dim(stage)), 0.0);
  std::copy(in.image_features.begin(), in.image_features.end(), x.begin());
  std::size_t at = in.image_features.size();
  for (const auto& block : in.token_blocks) {
    if (int(block.size()) != cfg.token_embed_dim)
      throw std::invalid_argument("token block dimension mismatch");
    std::copy(block.begin(), block.end(), x.begin() + long(at));
    at += block.size();
  }
}

double forward(const ProgressiveConfidenceNet& net, const ParamLayout& lay,
               int stage, const StageInput& in, Workspace& ws) {
  const auto& cfg = net.cfg;
  const int width = cfg.trunk_width;
  assemble_input(cfg, stage, in, ws.input);
  const int in_dim = cfg.stage_input_dim(stage);
  const double* pw = net.params.data() + lay.proj_w[std::size_t(stage - 1)];
  const double* pb = net.params.data() + lay.proj_b[std::size_t(stage - 1)];
  ws.z0.assign(std::size_t(width), 0.0);
  for (int r = 0; r < width; ++r) {
    double acc = pb[r];
    const double* row = pw + std::size_t(r) * std::size_t(in_dim);
    for (int c = 0; c < in_dim; ++c) acc += row[c] * ws.input[std::size_t(c)];
    ws.z0[std::size_t(r)] = acc;
  }
  ws.hidden.assign(std::size_t(cfg.trunk_hidden_layers), {});
  const std::vector<double>* prev = &ws.z0;
  for (int l = 0; l < cfg.trunk_hidden_layers; ++l) {
    auto& h = ws.hidden[std::size_t(l)];
    h.assign(std::size_t(width), 0.0);
    const double* tw = net.params.data() + lay.trunk_w[std::size_t(l)];
    const double* tb = net.params.data() + lay.trunk_b[std::size_t(l)];
    for (int r = 0; r < width; ++r) {
      double acc = tb[r];
      const double* row = tw + std::size_t(r) * std::size_t(width);
      for (int c = 0; c < width; ++c) acc += row[c] * (*prev)[std::size_t(c)];
      h[std::size_t(r)] = std::tanh(acc);
    }
    prev = &h;
  }
  const double* ow = net.params.data() + lay.out_w;
  double y = net.params[lay.out_b];
  for (int c = 0; c < width; ++c) y += ow[c] * (*prev)[std::size_t(c)];
  return y;
}

// Backpropagates d(y - target)^2 for one stage into grad (accumulating).
double backward_stage(const ProgressiveConfidenceNet& net,
                      const ParamLayout& lay, int stage, const StageInput& in,
                      double target, std::vector<double>& grad) {
  const auto& cfg = net.cfg;
  const int width = cfg.trunk_width;
  Workspace ws;
  const double y = forward(net, lay, stage, in, ws);
  const double err = y - target;
  const double gy = 2.0 * err;

  const std::vector<double>& last =
      cfg.trunk_hidden_layers > 0 ? ws.hidden.back() : ws.z0;
  double* g_out_w = grad.data() + lay.out_w;
  for (int c = 0; c < width; ++c) g_out_w[c] += gy * last[std::size_t(c)];
  grad[lay.out_b] += gy;

  std::vector<double> g_vec(std::size_t(width), 0.0);
  const double* ow = net.params.data() + lay.out_w;
  for (int c = 0; c < width; ++c) g_vec[std::size_t(c)] = gy * ow[c];

  for (int l = cfg.trunk_hidden_layers - 1; l >= 0; --l) {
    const auto& h = ws.hidden[std::size_t(l)];
    const std::vector<double>& below = l > 0 ? ws.hidden[std::size_t(l - 1)] : ws.z0;
    // g_vec currently holds dL/dh; convert through tanh'.
    std::vector<double> g_z(std::size_t(width), 0.0);
    for (int r = 0; r < width; ++r)
      g_z[std::size_t(r)] =
          g_vec[std::size_t(r)] * (1.0 - h[std::size_t(r)] * h[std::size_t(r)]);
    double* gw = grad.data() + lay.trunk_w[std::size_t(l)];
    double* gb = grad.data() + lay.trunk_b[std::size_t(l)];
    for (int r = 0; r < width; ++r) {
      double* row = gw + std::size_t(r) * std::size_t(width);
      for (int c = 0; c < width; ++c)
        row[c] += g_z[std::size_t(r)] * below[std::size_t(c)];
      gb[r] += g_z[std::size_t(r)];
    }
    const double* tw = net.params.data() + lay.trunk_w[std::size_t(l)];
    std::vector<double> g_below(std::size_t(width), 0.0);
    for (int r = 0; r < width; ++r) {
      const double* row = tw + std::size_t(r) * std::size_t(width);
      for (int c = 0; c < width; ++c)
        g_below[std::size_t(c)] += g_z[std::size_t(r)] * row[c];
    }
    g_vec = std::move(g_below);
  }

  // g_vec is dL/dz0: into the stage projection.
  const int in_dim = cfg.stage_input_dim(stage);
  double* gpw = grad.data() + lay.proj_w[std::size_t(stage - 1)];
  double* gpb = grad.data() + lay.proj_b[std::size_t(stage - 1)];
  for (int r = 0; r < width; ++r) {
    double* row = gpw + std::size_t(r) * std::size_t(in_dim);
    for (int c = 0; c < in_dim; ++c)
      row[c] += g_vec[std::size_t(r)] * ws.input[std::size_t(c)];
    gpb[r] += g_vec[std::size_t(r)];
  }
  return err * err;
}

double record_loss_and_gradient(const ProgressiveConfidenceNet& net,
                                const ParamLayout& lay, const TrainRecord& rec,
                                std::vector<double>& grad) {
  if (int(rec.stage_inputs.size()) != net.cfg.stages)
    throw std::invalid_argument("record must carry inputs for every stage");
  double loss = 0.0;
  for (int i = 1; i <= net.cfg.stages; ++i)
    loss += backward_stage(net, lay, i, rec.stage_inputs[std::size_t(i - 1)],
                           rec.target, grad);
  return loss;
}

}  // namespace

double estimate(const ProgressiveConfidenceNet& net, int stage,
                const StageInput& input) {
  const ParamLayout lay = param_layout(net.cfg);
  Workspace ws;
  return forward(net, lay, stage, input, ws);
}

ConfidenceDecision decide(const ProgressiveConfidenceNet& net, int stage,
                          double score) {
  if (stage < 1 || stage > net.cfg.stages)
    throw std::invalid_argument("stage out of range");
  if (score < net.cfg.thresholds[std::size_t(stage - 1)])
    return {DecisionKind::Offload, stage};
  if (stage < net.cfg.stages) return {DecisionKind::Continue, stage};
  return {DecisionKind::AcceptOnboard, stage};
}

double batch_loss_and_gradient(const ProgressiveConfidenceNet& net,
                               std::span<const TrainRecord> records,
                               std::vector<double>& gradient) {
  const ParamLayout lay = param_layout(net.cfg);
  gradient.assign(lay.total, 0.0);
  if (records.empty()) return 0.0;
  double loss = 0.0;
  for (const auto& rec : records)
    loss += record_loss_and_gradient(net, lay, rec, gradient);
  const double inv = 1.0 / double(records.size());
  for (auto& g : gradient) g *= inv;
  return loss * inv;
}

double dataset_loss(const ProgressiveConfidenceNet& net,
                    std::span<const TrainRecord> records) {
  if (records.empty()) return 0.0;
  const ParamLayout lay = param_layout(net.cfg);
  double loss = 0.0;
  Workspace ws;
  for (const auto& rec : records) {
    for (int i = 1; i <= net.cfg.stages; ++i) {
      const double y =
          forward(net, lay, i, rec.stage_inputs[std::size_t(i - 1)], ws);
      const double err = y - rec.target;
      loss += err * err;
    }
  }
  return loss / double(records.size());
}

TrainResult train(ProgressiveConfidenceNet& net,
                  const std::vector<TrainRecord>& dataset,
                  const TrainOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("empty training dataset");
  const ParamLayout lay = param_layout(net.cfg);
  for (const auto& rec : dataset)
    if (int(rec.stage_inputs.size()) != net.cfg.stages)
      throw std::invalid_argument("record must carry inputs for every stage");

  TrainResult result;
  if (options.epochs <= 0) return result;

  std::vector<double> velocity(lay.total, 0.0);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  Rng shuffle_rng(mix64(options.seed, "epoch-shuffle"));

  const int nt = [&] {
#ifdef _OPENMP
    return options.threads > 0 ? options.threads : omp_get_max_threads();
#else
    return 1;
#endif
  }();

  const std::size_t batch = std::size_t(std::max(1, options.batch_size));
  std::vector<std::vector<double>> slot_grads(batch);
  std::vector<double> slot_loss(batch, 0.0);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j = i + std::size_t(shuffle_rng.below(order.size() - i));
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < order.size(); first += batch) {
      const std::size_t count = std::min(batch, order.size() - first);
      const long n = long(count);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
      for (long k = 0; k < n; ++k) {
        auto& g = slot_grads[std::size_t(k)];
        g.assign(lay.total, 0.0);
        slot_loss[std::size_t(k)] = record_loss_and_gradient(
            net, lay, dataset[order[first + std::size_t(k)]], g);
      }
      // Reduction in record order keeps the update bit-stable regardless of
      // the thread count; parameters are independent, so the outer loop may
      // still run in parallel.
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < count; ++k) batch_loss += slot_loss[k];
      batch_loss /= double(count);
      const double inv = 1.0 / double(count);
      const long np = long(lay.total);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
#endif
      for (long p = 0; p < np; ++p) {
        double g = 0.0;
        for (std::size_t k = 0; k < count; ++k) g += slot_grads[k][std::size_t(p)];
        g *= inv;
        velocity[std::size_t(p)] = options.momentum * velocity[std::size_t(p)] -
                                   options.learning_rate * g;
        net.params[std::size_t(p)] += velocity[std::size_t(p)];
      }
      epoch_loss += batch_loss;
      ++batches;
    }
    result.epoch_loss.push_back(epoch_loss / double(batches));
  }
  (void)nt;
  return result;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

void write_u32(std::FILE* f, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  if (std::fwrite(b, 1, 4, f) != 4) throw std::runtime_error("short write");
}

std::uint32_t read_u32(std::FILE* f) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw std::runtime_error("short read");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

void write_f64(std::FILE* f, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  if (std::fwrite(b, 1, 8, f) != 8) throw std::runtime_error("short write");
}

double read_f64(std::FILE* f) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, f) != 8) throw std::runtime_error("short read");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

void save_net(const ProgressiveConfidenceNet& net, const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot write " + path);
  if (std::fwrite("PCN1", 1, 4, f.get()) != 4)
    throw std::runtime_error("short write");
  const auto& cfg = net.cfg;
  write_u32(f.get(), std::uint32_t(cfg.stages));
  write_u32(f.get(), std::uint32_t(cfg.feature_dim));
  write_u32(f.get(), std::uint32_t(cfg.token_embed_dim));
  write_u32(f.get(), std::uint32_t(cfg.trunk_width));
  write_u32(f.get(), std::uint32_t(cfg.trunk_hidden_layers));
  write_u32(f.get(), std::uint32_t(cfg.token_block));
  for (double t : cfg.thresholds) write_f64(f.get(), t);
  for (double p : net.params) write_f64(f.get(), p);
}

ProgressiveConfidenceNet load_net(const std::string& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot read " + path);
  char magic[4];
  if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, "PCN1", 4) != 0)
    throw std::runtime_error(path + " is not a PCN1 confidence network file");
  ConfidenceNetConfig cfg;
  cfg.stages = int(read_u32(f.get()));
  cfg.feature_dim = int(read_u32(f.get()));
  cfg.token_embed_dim = int(read_u32(f.get()));
  cfg.trunk_width = int(read_u32(f.get()));
  cfg.trunk_hidden_layers = int(read_u32(f.get()));
  cfg.token_block = int(read_u32(f.get()));
  cfg.thresholds.resize(std::size_t(cfg.stages));
  for (auto& t : cfg.thresholds) t = read_f64(f.get());
  ProgressiveConfidenceNet net;
  net.cfg = cfg;
  const ParamLayout lay = param_layout(cfg);
  net.params.resize(lay.total);
  for (auto& p : net.params) p = read_f64(f.get());
  return net;
}

}  // namespace spaceverse
