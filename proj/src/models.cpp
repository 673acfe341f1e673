#include "spaceverse/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "spaceverse/rng.hpp"

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace spaceverse {

double correct_probability(const OracleSpec& spec, double difficulty) {
  return 1.0 / (1.0 + std::exp(spec.accuracy_slope *
                               (difficulty - spec.accuracy_midpoint)));
}

std::uint32_t output_tokens(const OracleSpec& spec, TaskKind kind) {
  switch (kind) {
    case TaskKind::QA: return spec.qa_output_tokens;
    case TaskKind::Classification: return spec.classification_output_tokens;
    case TaskKind::Detection: return spec.detection_output_tokens;
  }
  return 0;
}

void validate_oracle_pair(const OracleSpec& satellite, const OracleSpec& ground) {
  for (int i = 0; i <= 100; ++i) {
    const double d = double(i) / 100.0;
    if (correct_probability(satellite, d) > correct_probability(ground, d) + 1e-12)
      throw std::invalid_argument(
          "satellite oracle outperforms ground oracle at difficulty " +
          std::to_string(d));
  }
}

TaskAnswer wrong_answer(const Sample& sample, const OracleSpec& spec) {
  switch (sample.task_kind) {
    case TaskKind::Classification: {
      const auto& truth = std::get<ClassAnswer>(sample.ground_truth.value);
      return TaskAnswer{ClassAnswer{(truth.label + 1) % spec.label_count}};
    }
    case TaskKind::Detection: {
      const auto& box = std::get<BoxAnswer>(sample.ground_truth.value);
      return TaskAnswer{BoxAnswer{box.x_min + spec.wrong_box_shift_px, box.y_min,
                                  box.x_max + spec.wrong_box_shift_px, box.y_max}};
    }
    case TaskKind::QA: {
      const auto& truth = std::get<QaAnswer>(sample.ground_truth.value);
      QaAnswer wrong;
      wrong.tokens.resize(truth.tokens.size());
      Rng rng(mix64(fnv1a64(sample.id), "distractor"));
      for (auto& t : wrong.tokens) t = std::uint32_t(rng.next_u64());
      return TaskAnswer{std::move(wrong)};
    }
  }
  throw std::logic_error("unreachable task kind");
}

namespace {

std::string canonical_answer(const TaskAnswer& answer) {
  std::ostringstream os;
  switch (answer.kind()) {
    case TaskKind::QA: {
      os << "qa:";
      for (auto t : std::get<QaAnswer>(answer.value).tokens) os << t << ";";
      break;
    }
    case TaskKind::Classification:
      os << "cls:" << std::get<ClassAnswer>(answer.value).label;
      break;
    case TaskKind::Detection: {
      const auto& b = std::get<BoxAnswer>(answer.value);
      char buf[128];
      std::snprintf(buf, sizeof(buf), "det:%.17g;%.17g;%.17g;%.17g", b.x_min,
                    b.y_min, b.x_max, b.y_max);
      os << buf;
      break;
    }
  }
  return os.str();
}

}  // namespace

std::string answer_to_string(const TaskAnswer& answer) {
  return canonical_answer(answer);
}

std::vector<std::uint32_t> answer_tokens(const TaskAnswer& answer,
                                         std::uint32_t length,
                                         std::uint64_t seed) {
  if (answer.kind() == TaskKind::QA) {
    // QA answers already are token sequences; pad or trim to length.
    auto tokens = std::get<QaAnswer>(answer.value).tokens;
    tokens.resize(length, 0);
    return tokens;
  }
  std::vector<std::uint32_t> tokens(length);
  Rng rng(mix64(seed, fnv1a64(canonical_answer(answer))));
  for (auto& t : tokens) t = std::uint32_t(rng.next_u64());
  return tokens;
}

std::vector<double> answer_embedding(const TaskAnswer& answer,
                                     const EncoderSpec& encoder) {
  return seeded_unit_vector(
      mix64(mix64(encoder.seed, "answer"), fnv1a64(canonical_answer(answer))),
      encoder.embedding_dim);
}

double similarity_target(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("zero vector in similarity");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double iou(const BoxAnswer& a, const BoxAnswer& b) {
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min);
  const double area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double simi(const TaskAnswer& a, const TaskAnswer& b, const EncoderSpec& encoder) {
  if (a.kind() != b.kind()) throw std::invalid_argument("task kind mismatch");
  switch (a.kind()) {
    case TaskKind::Classification:
      return std::get<ClassAnswer>(a.value) == std::get<ClassAnswer>(b.value) ? 1.0
                                                                              : 0.0;
    case TaskKind::Detection:
      return iou(std::get<BoxAnswer>(a.value), std::get<BoxAnswer>(b.value));
    case TaskKind::QA: {
      if (a == b) return 1.0;
      const auto ea = answer_embedding(a, encoder);
      const auto eb = answer_embedding(b, encoder);
      return 0.5 * (1.0 + similarity_target(ea, eb));
    }
  }
  throw std::logic_error("unreachable task kind");
}

OracleOutput SyntheticOracle::infer(const Sample& sample, double retained_mass) {
  if (retained_mass < 0.0 || retained_mass > 1.0)
    throw std::invalid_argument("retained mass outside [0,1]");

  double p = correct_probability(spec_, sample.difficulty);
  if (spec_.role == OracleRole::Ground && spec_.degradation_exponent > 0.0)
    p *= std::pow(retained_mass, spec_.degradation_exponent);

  Rng rng(mix64(spec_.seed, fnv1a64(sample.id)));
  const bool success = rng.uniform() < p;

  OracleOutput out;
  out.answer = success ? sample.ground_truth : wrong_answer(sample, spec_);
  out.tokens = answer_tokens(out.answer, output_tokens(spec_, sample.task_kind),
                             mix64(spec_.seed, "tokens"));
  out.latency_s = spec_.encode_latency_s +
                  double(out.tokens.size()) / spec_.tokens_per_second;
  out.answer_embedding = answer_embedding(out.answer, encoder_);
  return out;
}

// ---------------------------------------------------------------------------
// External oracle plumbing.

using nlohmann::json;

namespace {

TaskAnswer answer_from_json(const json& j) {
  const auto kind = task_kind_from_string(j.at("task").get<std::string>());
  switch (kind) {
    case TaskKind::QA:
      return TaskAnswer{QaAnswer{j.at("tokens").get<std::vector<std::uint32_t>>()}};
    case TaskKind::Classification:
      return TaskAnswer{ClassAnswer{j.at("label").get<std::uint32_t>()}};
    case TaskKind::Detection: {
      const auto b = j.at("box").get<std::vector<double>>();
      if (b.size() != 4) throw std::invalid_argument("box needs 4 numbers");
      return TaskAnswer{make_box(b[0], b[1], b[2], b[3])};
    }
  }
  throw std::logic_error("unreachable task kind");
}

}  // namespace

std::string external_request_line(const Sample& sample, double retained_mass) {
  json j;
  j["id"] = sample.id;
  j["task"] = to_string(sample.task_kind);
  j["prompt"] = sample.prompt;
  j["difficulty"] = sample.difficulty;
  j["retained_mass"] = retained_mass;
  j["image_height"] = sample.image.height;
  j["image_width"] = sample.image.width;
  return j.dump();
}

OracleOutput parse_external_response(const std::string& line,
                                     const EncoderSpec& encoder,
                                     const Sample& sample) {
  const json j = json::parse(line);
  OracleOutput out;
  out.answer = answer_from_json(j.at("answer"));
  if (out.answer.kind() != sample.task_kind)
    throw std::invalid_argument("external oracle answered the wrong task kind");
  out.latency_s = j.at("latency_s").get<double>();
  std::uint32_t length = 16;
  if (out.answer.kind() == TaskKind::QA)
    length = std::uint32_t(std::get<QaAnswer>(out.answer.value).tokens.size());
  out.tokens = answer_tokens(out.answer, length, mix64(encoder.seed, "ext"));
  out.answer_embedding = answer_embedding(out.answer, encoder);
  return out;
}

// Minimal bidirectional pipe to a child process.
struct ExternalProcessOracle::Process {
  pid_t pid = -1;
  FILE* to_child = nullptr;
  FILE* from_child = nullptr;

  explicit Process(const std::string& command) {
    int in_pipe[2];   // parent -> child
    int out_pipe[2];  // child -> parent
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
      throw std::runtime_error("pipe failed: " + std::string(std::strerror(errno)));
    pid = fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child = fdopen(in_pipe[1], "w");
    from_child = fdopen(out_pipe[0], "r");
    if (!to_child || !from_child)
      throw std::runtime_error("fdopen failed for oracle process");
  }

  ~Process() {
    if (to_child) fclose(to_child);
    if (from_child) fclose(from_child);
    if (pid > 0) waitpid(pid, nullptr, 0);
  }

  std::string round_trip(const std::string& line) {
    std::fputs(line.c_str(), to_child);
    std::fputc('\n', to_child);
    std::fflush(to_child);
    std::string reply;
    int c;
    while ((c = std::fgetc(from_child)) != EOF && c != '\n')
      reply.push_back(char(c));
    if (reply.empty() && c == EOF)
      throw std::runtime_error("external oracle closed its output");
    return reply;
  }
};

ExternalProcessOracle::ExternalProcessOracle(const std::string& command,
                                             EncoderSpec encoder)
    : proc_(std::make_unique<Process>(command)), encoder_(std::move(encoder)) {}

ExternalProcessOracle::~ExternalProcessOracle() = default;

OracleOutput ExternalProcessOracle::infer(const Sample& sample,
                                          double retained_mass) {
  const std::string reply =
      proc_->round_trip(external_request_line(sample, retained_mass));
  return parse_external_response(reply, encoder_, sample);
}

}  // namespace spaceverse
