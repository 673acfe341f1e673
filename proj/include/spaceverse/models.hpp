#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spaceverse/domain.hpp"
#include "spaceverse/embedding.hpp"

namespace spaceverse {

enum class OracleRole { Satellite, Ground };

// Parameterizes a synthetic inference oracle standing in for an LVLM.
// Correctness probability is a logistic in task difficulty,
// p(d) = 1 / (1 + exp(k * (d - d0))); the ground model multiplies it by
// retained_mass^degradation_exponent.
struct OracleSpec {
  OracleRole role = OracleRole::Satellite;
  double accuracy_slope = 8.0;     // k
  double accuracy_midpoint = 0.45; // d0
  double tokens_per_second = 6.0;
  double encode_latency_s = 0.5;
  std::uint32_t qa_output_tokens = 24;
  std::uint32_t classification_output_tokens = 4;
  std::uint32_t detection_output_tokens = 16;
  double degradation_exponent = 0.5;  // gamma; applied by the ground role only
  std::uint64_t seed = 2;
  std::uint32_t label_count = 10;     // classification label space
  double wrong_box_shift_px = 10.0;   // one region width by default
};

double correct_probability(const OracleSpec& spec, double difficulty);
std::uint32_t output_tokens(const OracleSpec& spec, TaskKind kind);

// Throws when the satellite curve exceeds the ground curve anywhere on a
// difficulty grid; the ground model must dominate.
void validate_oracle_pair(const OracleSpec& satellite, const OracleSpec& ground);

struct OracleOutput {
  TaskAnswer answer;
  std::vector<std::uint32_t> tokens;
  double latency_s = 0.0;
  std::vector<double> answer_embedding;
};

class InferenceOracle {
 public:
  virtual ~InferenceOracle() = default;
  virtual OracleOutput infer(const Sample& sample, double retained_mass) = 0;
};

// Deterministic synthetic oracle. The Bernoulli draw is keyed by
// (oracle seed, sample id) and compared against p(d) * mass^gamma, so the
// outcome is monotone in retained mass for a fixed sample.
class SyntheticOracle : public InferenceOracle {
 public:
  SyntheticOracle(OracleSpec spec, EncoderSpec encoder)
      : spec_(std::move(spec)), encoder_(std::move(encoder)) {}

  OracleOutput infer(const Sample& sample, double retained_mass) override;
  const OracleSpec& spec() const { return spec_; }

 private:
  OracleSpec spec_;
  EncoderSpec encoder_;
};

// The deterministic wrong answer for a sample: next label cyclically, the
// ground-truth box shifted one region, or a seeded distractor sequence.
TaskAnswer wrong_answer(const Sample& sample, const OracleSpec& spec);

// Task similarity in [0, 1]: classification equality, detection IoU,
// QA embedding cosine mapped through (1 + cos) / 2.
double simi(const TaskAnswer& a, const TaskAnswer& b, const EncoderSpec& encoder);

double iou(const BoxAnswer& a, const BoxAnswer& b);

// Deterministic unit embedding of an answer; equal answers embed equally.
std::vector<double> answer_embedding(const TaskAnswer& answer,
                                     const EncoderSpec& encoder);

// Cosine similarity between two output embeddings, in [-1, 1].
double similarity_target(std::span<const double> a, std::span<const double> b);

// Canonical token serialization of an answer, padded/keyed to a fixed length.
std::vector<std::uint32_t> answer_tokens(const TaskAnswer& answer,
                                         std::uint32_t length,
                                         std::uint64_t seed);

// Canonical printable form ("cls:3", "det:x0;y0;x1;y1", "qa:t0;t1;...").
std::string answer_to_string(const TaskAnswer& answer);

// External oracle speaking line-delimited JSON over the child's stdin/stdout:
// one request object in, one response object ({"answer": ..., "latency_s":
// ...}) out. Lets a real model replace the synthetic one.
class ExternalProcessOracle : public InferenceOracle {
 public:
  ExternalProcessOracle(const std::string& command, EncoderSpec encoder);
  ~ExternalProcessOracle() override;

  OracleOutput infer(const Sample& sample, double retained_mass) override;

 private:
  struct Process;
  std::unique_ptr<Process> proc_;
  EncoderSpec encoder_;
};

std::string external_request_line(const Sample& sample, double retained_mass);
OracleOutput parse_external_response(const std::string& line,
                                     const EncoderSpec& encoder,
                                     const Sample& sample);

}  // namespace spaceverse
