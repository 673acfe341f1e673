#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdlib>

#include "reference.hpp"
#include "spaceverse/models.hpp"
#include "spaceverse/rng.hpp"

using namespace spaceverse;

namespace {

Sample make_sample(TaskKind kind, double difficulty, const std::string& id) {
  Sample s;
  s.id = id;
  s.task_kind = kind;
  s.difficulty = difficulty;
  s.prompt = "prompt for " + id;
  s.image = PixelGrid(10, 10, 0.5);
  switch (kind) {
    case TaskKind::QA: {
      QaAnswer qa;
      for (std::uint32_t t = 0; t < 24; ++t) qa.tokens.push_back(1000 + t);
      s.ground_truth = TaskAnswer{qa};
      break;
    }
    case TaskKind::Classification:
      s.ground_truth = TaskAnswer{ClassAnswer{3}};
      break;
    case TaskKind::Detection:
      s.ground_truth = TaskAnswer{make_box(10, 10, 30, 30)};
      break;
  }
  return s;
}

OracleSpec ground_spec() {
  OracleSpec spec;
  spec.role = OracleRole::Ground;
  spec.accuracy_midpoint = 0.8;
  spec.tokens_per_second = 40.0;
  spec.encode_latency_s = 0.2;
  return spec;
}

}  // namespace

TEST_CASE("logistic accuracy at zero difficulty") {
  CHECK(correct_probability(ground_spec(), 0.0) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-6.4))).epsilon(1e-12));
  // Roughly 0.998.
  CHECK(correct_probability(ground_spec(), 0.0) > 0.998);
}

TEST_CASE("satellite curve must not beat the ground curve") {
  OracleSpec sat;  // defaults: midpoint 0.45
  CHECK_NOTHROW(validate_oracle_pair(sat, ground_spec()));
  OracleSpec too_good = sat;
  too_good.accuracy_midpoint = 0.95;
  CHECK_THROWS_AS(validate_oracle_pair(too_good, ground_spec()),
                  std::invalid_argument);
}

TEST_CASE("zero retained mass kills ground correctness for positive gamma") {
  EncoderSpec enc;
  SyntheticOracle gnd(ground_spec(), enc);
  for (int i = 0; i < 20; ++i) {
    const auto s = make_sample(TaskKind::Classification, 0.0,
                               "m" + std::to_string(i));
    const auto out = gnd.infer(s, 0.0);
    CHECK(out.answer != s.ground_truth);
  }
}

TEST_CASE("oracle outputs are bit-identical across calls") {
  EncoderSpec enc;
  SyntheticOracle gnd(ground_spec(), enc);
  const auto s = make_sample(TaskKind::QA, 0.5, "det");
  const auto a = gnd.infer(s, 0.75);
  const auto b = gnd.infer(s, 0.75);
  CHECK(a.answer == b.answer);
  CHECK(a.tokens == b.tokens);
  CHECK(a.latency_s == b.latency_s);
  CHECK(a.answer_embedding == b.answer_embedding);
}

TEST_CASE("oracle latency is encode plus generation") {
  EncoderSpec enc;
  SyntheticOracle gnd(ground_spec(), enc);
  const auto s = make_sample(TaskKind::Detection, 0.2, "lat");
  const auto out = gnd.infer(s, 1.0);
  CHECK(out.tokens.size() == 16);
  CHECK(out.latency_s == doctest::Approx(0.2 + 16.0 / 40.0));
}

TEST_CASE("correctness is monotone in retained mass for a fixed sample") {
  EncoderSpec enc;
  SyntheticOracle gnd(ground_spec(), enc);
  int flips = 0;
  for (int i = 0; i < 200; ++i) {
    const auto s =
        make_sample(TaskKind::Classification, 0.5, "mm" + std::to_string(i));
    bool was_correct = false;
    for (double mass : {0.1, 0.4, 0.7, 1.0}) {
      const bool correct = gnd.infer(s, mass).answer == s.ground_truth;
      if (was_correct && !correct) ++flips;
      was_correct = correct;
    }
  }
  CHECK(flips == 0);  // success is u < p(d) * mass^gamma with a fixed draw u
}

TEST_CASE("empirical accuracy ordering holds on a difficulty grid") {
  EncoderSpec enc;
  OracleSpec sat_spec;
  SyntheticOracle sat(sat_spec, enc);
  SyntheticOracle gnd(ground_spec(), enc);
  const int n = 1000;
  for (double d = 0.0; d <= 1.0; d += 0.25) {
    int sat_hits = 0, gnd_hits = 0;
    for (int i = 0; i < n; ++i) {
      const auto s = make_sample(TaskKind::Classification, d,
                                 "g" + std::to_string(i) + "_" + std::to_string(d));
      sat_hits += sat.infer(s, 1.0).answer == s.ground_truth;
      gnd_hits += gnd.infer(s, 1.0).answer == s.ground_truth;
    }
    const double ps = double(sat_hits) / n, pg = double(gnd_hits) / n;
    const double sigma =
        std::sqrt(ps * (1 - ps) / n) + std::sqrt(pg * (1 - pg) / n);
    CHECK(pg >= ps - 3.0 * sigma);
  }
}

TEST_CASE("correctness decreases with difficulty (Monte Carlo)") {
  EncoderSpec enc;
  SyntheticOracle sat(OracleSpec{}, enc);
  double previous = 1.1;
  for (double d = 0.0; d <= 1.0; d += 0.2) {
    int hits = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const auto s = make_sample(TaskKind::Classification, d,
                                 "mc" + std::to_string(i) + "_" + std::to_string(d));
      hits += sat.infer(s, 1.0).answer == s.ground_truth;
    }
    const double p = double(hits) / n;
    const double sigma = std::sqrt(0.25 / n);
    CHECK(p <= previous + 3.0 * sigma);
    previous = p;
  }
}

TEST_CASE("similarity metrics") {
  EncoderSpec enc;
  SUBCASE("identical answers score one for every kind") {
    for (auto kind :
         {TaskKind::QA, TaskKind::Classification, TaskKind::Detection}) {
      const auto s = make_sample(kind, 0.1, "same");
      CHECK(simi(s.ground_truth, s.ground_truth, enc) == doctest::Approx(1.0));
    }
  }
  SUBCASE("detection IoU") {
    const TaskAnswer a{make_box(0, 0, 10, 10)};
    const TaskAnswer b{make_box(5, 0, 15, 10)};
    CHECK(simi(a, b, enc) == doctest::Approx(1.0 / 3.0));
    const TaskAnswer c{make_box(100, 100, 110, 110)};
    CHECK(simi(a, c, enc) == doctest::Approx(0.0));
  }
  SUBCASE("classification equality") {
    CHECK(simi(TaskAnswer{ClassAnswer{2}}, TaskAnswer{ClassAnswer{5}}, enc) == 0.0);
  }
  SUBCASE("kind mismatch throws") {
    CHECK_THROWS_AS(
        simi(TaskAnswer{ClassAnswer{1}}, TaskAnswer{make_box(0, 0, 1, 1)}, enc),
        std::invalid_argument);
  }
  SUBCASE("symmetry on random answers") {
    Rng rng(31);
    for (int i = 0; i < 40; ++i) {
      QaAnswer qa1, qa2;
      for (int t = 0; t < 8; ++t) {
        qa1.tokens.push_back(std::uint32_t(rng.next_u64()));
        qa2.tokens.push_back(std::uint32_t(rng.next_u64()));
      }
      const TaskAnswer a{qa1}, b{qa2};
      CHECK(simi(a, b, enc) == doctest::Approx(simi(b, a, enc)).epsilon(1e-12));
      CHECK(simi(a, b, enc) >= 0.0);
      CHECK(simi(a, b, enc) <= 1.0);
    }
  }
}

TEST_CASE("answer embeddings") {
  EncoderSpec enc;
  const TaskAnswer a{ClassAnswer{4}};
  const TaskAnswer b{ClassAnswer{4}};
  const TaskAnswer c{ClassAnswer{5}};
  const auto ea = answer_embedding(a, enc);
  const auto eb = answer_embedding(b, enc);
  const auto ec = answer_embedding(c, enc);
  double norm = 0.0;
  for (double x : ea) norm += x * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(similarity_target(ea, eb) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(similarity_target(ea, ec) < 1.0);
}

TEST_CASE("cosine similarity target") {
  const std::vector<double> x{1.0, 0.0};
  const std::vector<double> y{std::sqrt(0.5), std::sqrt(0.5)};
  CHECK(similarity_target(x, y) == doctest::Approx(std::sqrt(2.0) / 2.0));
  const std::vector<double> nx{-1.0, 0.0};
  CHECK(similarity_target(x, nx) == doctest::Approx(-1.0));
  CHECK(similarity_target(x, x) == doctest::Approx(1.0));
  CHECK_THROWS_AS(similarity_target(x, std::vector<double>{0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("deterministic wrong answers stay wrong and well-formed") {
  OracleSpec spec;
  spec.label_count = 10;
  spec.wrong_box_shift_px = 10;
  const auto cls = make_sample(TaskKind::Classification, 0.5, "w1");
  CHECK(wrong_answer(cls, spec) == TaskAnswer{ClassAnswer{4}});
  const auto det = make_sample(TaskKind::Detection, 0.5, "w2");
  const auto wrong_box = std::get<BoxAnswer>(wrong_answer(det, spec).value);
  CHECK(wrong_box.x_min == doctest::Approx(20.0));
  CHECK(wrong_box.x_max == doctest::Approx(40.0));
  const auto qa = make_sample(TaskKind::QA, 0.5, "w3");
  const auto w1 = wrong_answer(qa, spec);
  CHECK(w1 != qa.ground_truth);
  CHECK(w1 == wrong_answer(qa, spec));
}

TEST_CASE("external oracle speaks the line protocol") {
  const char* path = std::getenv("MOCK_ORACLE");
  REQUIRE_MESSAGE(path != nullptr, "MOCK_ORACLE env var not set");
  EncoderSpec enc;
  ExternalProcessOracle oracle(path, enc);

  const auto cls = make_sample(TaskKind::Classification, 0.4, "ext01");
  const auto out = oracle.infer(cls, 1.0);
  CHECK(out.answer == TaskAnswer{ClassAnswer{std::uint32_t(5 % 7)}});
  CHECK(out.latency_s == doctest::Approx(0.25 + 0.01 * 5));

  const auto det = make_sample(TaskKind::Detection, 0.4, "ext02");
  const auto dout = oracle.infer(det, 0.5);
  CHECK(std::get<BoxAnswer>(dout.answer.value).x_max == doctest::Approx(11.0));

  const auto qa = make_sample(TaskKind::QA, 0.4, "x");
  const auto qout = oracle.infer(qa, 1.0);
  CHECK(qout.answer.kind() == TaskKind::QA);
  CHECK(qout.tokens.size() == 4);
}

TEST_CASE("request lines carry the task but never the ground truth") {
  const auto s = make_sample(TaskKind::Classification, 0.4, "req");
  const auto line = external_request_line(s, 0.9);
  CHECK(line.find("\"task\"") != std::string::npos);
  CHECK(line.find("retained_mass") != std::string::npos);
  CHECK(line.find("ground_truth") == std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
}
