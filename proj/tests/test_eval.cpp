#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ffit/eval.hpp"
#include "ffit/model.hpp"

using namespace ffit;

namespace {

const char* kGaussModel = R"(
observable x -10 10
parameter mu 0 -5 5
parameter sigma 1 0.1 5
pdf g Gaussian(x, mu, sigma)
)";

DataSet make_data(std::vector<double> xs) {
  return DataSet({"x"}, {std::move(xs)});
}

}  // namespace

TEST_CASE("adaptive Simpson on known integrals") {
  // [DERIVED] int_0^pi sin(x) dx = 2; oracle: antiderivative -cos
  CHECK(integrate_adaptive_simpson([](double x) { return std::sin(x); }, 0.0,
                                   std::numbers::pi, 1e-12, 1e-12, 60) ==
        doctest::Approx(2.0).epsilon(1e-12));
  // [DERIVED] int_0^1 x^4 dx = 0.2
  CHECK(integrate_adaptive_simpson([](double x) { return x * x * x * x; }, 0.0, 1.0,
                                   1e-12, 1e-12, 60) ==
        doctest::Approx(0.2).epsilon(1e-12));
  // A narrow spike (sigma = 0.01 on a range of width 4) that a
  // non-adaptive rule at the initial sampling would miss entirely.
  const double spike = integrate_adaptive_simpson(
      [](double x) { return std::exp(-0.5 * (x - 0.3) * (x - 0.3) / 1e-4) ; }, -2.0,
      2.0, 1e-12, 1e-10, 60);
  CHECK(spike == doctest::Approx(0.01 * std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-8));

  CHECK_THROWS_AS(integrate_adaptive_simpson([](double) { return 1.0; }, 1.0, 1.0,
                                             1e-10, 1e-10, 60),
                  Error);
  CHECK_THROWS_AS(integrate_adaptive_simpson([](double x) { return 1.0 / x; }, -1.0,
                                             1.0, 1e-10, 1e-10, 60),
                  Error);
}

TEST_CASE("normalization values") {
  const auto model = Model::from_string(kGaussModel);
  // [DERIVED] int_{-10}^{10} exp(-x^2/2) dx ~= sqrt(2*pi) to ~1e-23
  CHECK(normalization(model->pdf, -10.0, 10.0, model->graph) ==
        doctest::Approx(std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-13));

  const auto jsu = Model::from_string(R"(
observable x -30 30
parameter mu 0 -5 5
parameter lambda 1 0.1 5
parameter gamma 0 -5 5
parameter delta 1 0.1 5
pdf j JohnsonSU(x, mu, lambda, gamma, delta)
)");
  // [DERIVED] the gamma=0, delta=1, lambda=1 JohnsonSU is a standard
  // normal in asinh(x), so its mass on [-30, 30] is erf(asinh(30)/sqrt(2))
  const double jsu_mass = std::erf(std::asinh(30.0) / std::sqrt(2.0));
  CHECK(normalization(jsu->pdf, -30.0, 30.0, jsu->graph) ==
        doctest::Approx(jsu_mass).epsilon(1e-9));

  const auto expo = Model::from_string(R"(
observable x 0 2
parameter c 0 -5 5
pdf e Exponential(x, c)
)");
  // c = 0: flat density, integral equals the range width
  CHECK(normalization(expo->pdf, 0.0, 2.0, expo->graph) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("single-entry NLL against the closed form") {
  const auto model = Model::from_string(kGaussModel);
  const DataSet ds = make_data({0.0});
  // [DERIVED] -log(1/sqrt(2*pi)) = 0.9189385332046727 up to range truncation
  const double want = -std::log(1.0 / std::sqrt(2.0 * std::numbers::pi));
  for (const auto mode : {EvalMode::Scalar, EvalMode::BatchPrecise, EvalMode::BatchFast}) {
    const NllValue v = nll(*model, ds, mode);
    CHECK(v.n_entries == 1);
    CHECK(v.value == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("empty dataset gives zero NLL") {
  const auto model = Model::from_string(kGaussModel);
  const DataSet ds = make_data({});
  for (const auto mode : {EvalMode::Scalar, EvalMode::BatchPrecise, EvalMode::BatchFast}) {
    const NllValue v = nll(*model, ds, mode);
    CHECK(v.value == 0.0);
    CHECK(v.n_entries == 0);
  }
}

TEST_CASE("NLL is additive over entries") {
  const auto model = Model::from_string(kGaussModel);
  const std::vector<double> xs{-1.2, 0.4, 2.5};
  double sum = 0.0;
  for (const double x : xs) {
    sum += nll_scalar(*model, make_data({x})).value;
  }
  const double joint = nll_scalar(*model, make_data(xs)).value;
  CHECK(joint == doctest::Approx(sum).epsilon(1e-14));
}

TEST_CASE("Scalar and Batch(Precise) NLL agree bitwise") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.3, 1.2);
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) {
    const double v = nd(rng);
    if (v > -10.0 && v < 10.0) xs.push_back(v);
  }
  const DataSet ds = make_data(xs);

  const char* models[] = {
      kGaussModel,
      R"(
observable x -10 10
parameter c -0.3 -5 0
pdf e Exponential(x, c)
)",
      R"(
observable x -10 10
parameter mu 0.2 -5 5
parameter lambda 1.1 0.1 5
parameter gamma -0.4 -5 5
parameter delta 1.3 0.1 5
pdf j JohnsonSU(x, mu, lambda, gamma, delta)
)",
      R"(
observable x -10 10
parameter mu 0 -5 5
parameter sigma 1 0.1 5
parameter c -0.3 -5 0
parameter f 0.4 0 1
pdf s Gaussian(x, mu, sigma)
pdf b Exponential(x, c)
pdf m WeightedSum(s, f, b)
)",
  };
  for (const char* text : models) {
    const auto model = Model::from_string(text);
    const NllValue a = nll(*model, ds, EvalMode::Scalar);
    const NllValue b = nll(*model, ds, EvalMode::BatchPrecise);
    CHECK(a.value == b.value);  // bitwise
    const NllValue c = nll(*model, ds, EvalMode::BatchFast);
    CHECK(std::abs(c.value - a.value) <= 2e-14 * std::abs(a.value));
  }
}

TEST_CASE("probabilities parity across modes") {
  const auto model = Model::from_string(kGaussModel);
  const DataSet ds = make_data({-2.0, -0.5, 0.0, 1.0, 3.5});
  std::vector<double> scalar(ds.n_rows()), precise(ds.n_rows()), fast(ds.n_rows());
  probabilities(*model, ds, EvalMode::Scalar, scalar);
  probabilities(*model, ds, EvalMode::BatchPrecise, precise);
  probabilities(*model, ds, EvalMode::BatchFast, fast);
  for (std::size_t i = 0; i < scalar.size(); ++i) {
    CHECK(precise[i] == scalar[i]);  // bitwise
    CHECK(std::abs(fast[i] - scalar[i]) <= 1e-14 * std::max(std::abs(scalar[i]), 1.0));
  }
}

TEST_CASE("normalization is cached across entries and calls") {
  const auto model = Model::from_string(kGaussModel);
  const DataSet ds = make_data({-1.0, 0.0, 1.0, 2.0});

  nll_scalar(*model, ds);
  const std::uint64_t norm_count = model->graph.node(model->norm_node).eval_count;
  CHECK(norm_count == 1);  // once for four entries

  // A second pass with unchanged parameters reuses the cached value.
  nll_scalar(*model, ds);
  nll(*model, ds, EvalMode::BatchPrecise);
  CHECK(model->graph.node(model->norm_node).eval_count == 1);

  // A parameter change triggers exactly one recomputation.
  model->graph.set_value(model->graph.id_of("mu"), 0.5);
  nll_scalar(*model, ds);
  CHECK(model->graph.node(model->norm_node).eval_count == 2);
}

TEST_CASE("batch evaluation count is independent of the dataset size") {
  const auto model = Model::from_string(kGaussModel);
  const NllValue small = nll(*model, make_data(std::vector<double>(100, 0.5)),
                             EvalMode::BatchPrecise);
  const NllValue large = nll(*model, make_data(std::vector<double>(100000, 0.5)),
                             EvalMode::BatchPrecise);
  CHECK(small.n_evaluations == large.n_evaluations);
  CHECK(small.n_evaluations > 0);

  const NllValue scalar = nll(*model, make_data(std::vector<double>(100, 0.5)),
                              EvalMode::Scalar);
  CHECK(scalar.n_evaluations >= 100);  // scalar work scales with entries
}

TEST_CASE("invalid probability is reported with the entry index") {
  const auto model = Model::from_string(R"(
observable x 0 20
parameter k 4 0.5 20
pdf c ChiSquare(x, k)
)");
  const DataSet ds = make_data({1.0, 0.0, 2.0});  // density 0 at x=0 for k=4
  for (const auto mode : {EvalMode::Scalar, EvalMode::BatchPrecise}) {
    const NllValue v = nll(*model, ds, mode);
    CHECK(std::isinf(v.value));
    CHECK(v.first_invalid == 1);
  }
}

TEST_CASE("generic_batch_fallback") {
  const std::vector<double> xs{1.0, 2.0, 3.0};
  std::vector<double> out(3);
  generic_batch_fallback([](double x) { return x * x; }, xs, out);
  CHECK(out == std::vector<double>{1.0, 4.0, 9.0});
  std::vector<double> wrong(2);
  CHECK_THROWS_AS(generic_batch_fallback([](double x) { return x; }, xs, wrong), Error);
}

TEST_CASE("invalid parameters are rejected before evaluation") {
  const auto model = Model::from_string(kGaussModel);
  // sigma's declared range keeps it positive, so drive the check directly
  // through a hand-built spec with a permissive range.
  Graph g;
  const NodeId x = g.add_observable("x", -5.0, 5.0);
  PdfSpec bad;
  bad.kind = PdfKind::Gaussian;
  bad.name = "bad";
  bad.observable = x;
  bad.parameters = {g.add_parameter("mu", 0.0, -5.0, 5.0),
                    g.add_parameter("sigma", -1.0, -5.0, 5.0)};
  CHECK_THROWS_AS(require_valid_params(bad, g), Error);
  CHECK(model->pdf.check_params(model->graph).ok());
}
