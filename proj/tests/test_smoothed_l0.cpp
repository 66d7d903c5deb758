#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include "chanest/channel_model.hpp"
#include "chanest/errors.hpp"
#include "chanest/smoothed_l0.hpp"

using namespace chanest;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

CVector random_complex_vector(int length, std::uint64_t seed, double component_std = 1.0) {
  std::mt19937_64 engine(mix64(seed));
  std::normal_distribution<double> component(0.0, component_std);
  CVector v(length);
  for (int i = 0; i < length; ++i) {
    const double re = component(engine);
    const double im = component(engine);
    v(i) = Complex(re, im);
  }
  return v;
}

// Reference summation with extended precision, reverse order.
double smoothness_reference(const CVector& taps, double sigma) {
  long double sum = 0.0L;
  for (Eigen::Index i = taps.size(); i-- > 0;) {
    const long double mag_sq = std::norm(taps(i));
    sum += std::exp(-mag_sq / (2.0L * static_cast<long double>(sigma) * sigma));
  }
  return static_cast<double>(sum);
}

EstimationProblem noiseless_problem(int rows, int cols, int sparsity, std::uint64_t seed) {
  const SparseChannel channel = generate_channel(cols, sparsity, 1.0, seed_combine(seed, 1));
  const TrainingMatrix matrix = generate_training(rows, cols, seed_combine(seed, 2));
  return synthesize_measurement(matrix, channel, kInf, seed_combine(seed, 3));
}
}  // namespace

TEST_CASE("gaussian surrogate evaluates the exponential kernel", "[sl0]") {
  REQUIRE(gaussian_surrogate(Complex(0.0, 0.0), 0.3) == 1.0);
  REQUIRE(gaussian_surrogate(Complex(1.0, 0.0), 1.0) ==
          Catch::Approx(std::exp(-0.5)).epsilon(1e-12));
  REQUIRE(gaussian_surrogate(Complex(0.6, 0.8), 1.0) ==
          Catch::Approx(std::exp(-0.5)).epsilon(1e-12));
  REQUIRE(gaussian_surrogate(Complex(1.0, 0.0), 0.01) < 1e-300);
  REQUIRE_THROWS_AS(gaussian_surrogate(Complex(1.0, 0.0), 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(gaussian_surrogate(Complex(1.0, 0.0), -1.0), std::invalid_argument);

  for (int k = 0; k < 50; ++k) {
    const CVector v = random_complex_vector(1, 500 + k);
    const double value = gaussian_surrogate(v(0), 0.8);
    REQUIRE(value > 0.0);
    REQUIRE(value <= 1.0);
  }
}

TEST_CASE("smoothness measure counts zeros and approximates L minus the l0 norm", "[sl0]") {
  REQUIRE(smoothness_measure(CVector::Zero(60), 0.5) == 60.0);

  CVector one_spike = CVector::Zero(4);
  one_spike(0) = Complex(1.0, 0.0);
  const double measure = smoothness_measure(one_spike, 1e-4);
  REQUIRE(std::abs((4.0 - measure) - 1.0) < 1e-10);

  // Planted channel whose weakest tap is still far above sigma.
  SparseChannel channel;
  for (std::uint64_t seed = 0;; ++seed) {
    REQUIRE(seed < 1000);
    channel = generate_channel(80, 4, 1.0, seed);
    double min_mag = kInf;
    for (int idx : channel.support) min_mag = std::min(min_mag, std::abs(channel.taps(idx)));
    if (min_mag >= 0.1) break;
  }
  const double planted = smoothness_measure(channel.taps, 1e-3);
  REQUIRE(std::abs((80.0 - planted) - 4.0) < 1e-6);

  REQUIRE_THROWS_AS(smoothness_measure(CVector(), 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(smoothness_measure(one_spike, 0.0), std::invalid_argument);
}

TEST_CASE("smoothness measure matches an extended-precision summation", "[sl0]") {
  for (int k = 0; k < 20; ++k) {
    const CVector v = random_complex_vector(100, 900 + k);
    const double sigma = 0.2 + 0.1 * k;
    const double reference = smoothness_reference(v, sigma);
    REQUIRE(smoothness_measure(v, sigma) == Catch::Approx(reference).epsilon(1e-12));
  }
}

TEST_CASE("smoothness measure sharpens to the sparsity count as sigma shrinks", "[sl0]") {
  // With every nonzero magnitude >= 10 sigma the counting error is below L e^-50.
  const double bound = 64 * std::exp(-50.0);
  for (int k = 0; k < 50; ++k) {
    const SparseChannel channel = generate_channel(64, 8, 1.0, 2000 + k);
    double min_mag = kInf;
    for (int idx : channel.support) min_mag = std::min(min_mag, std::abs(channel.taps(idx)));
    const double sigma = min_mag / 10.0;
    const double approx_l0 = 64.0 - smoothness_measure(channel.taps, sigma);
    REQUIRE(std::abs(approx_l0 - 8.0) < bound);
  }
}

TEST_CASE("ascent direction matches the surrogate kernel entrywise", "[sl0]") {
  REQUIRE(ascent_direction(CVector::Zero(7), 0.4).isZero(0.0));

  const CVector v = random_complex_vector(32, 77);
  const double sigma = 0.6;
  const CVector direction = ascent_direction(v, sigma);
  for (int i = 0; i < 32; ++i) {
    const Complex expected = v(i) * gaussian_surrogate(v(i), sigma);
    REQUIRE(std::abs(direction(i) - expected) <= 1e-15 * std::max(1.0, std::abs(expected)));
  }
  REQUIRE_THROWS_AS(ascent_direction(v, 0.0), std::invalid_argument);
}

TEST_CASE("ascent direction agrees with finite-difference gradients", "[sl0]") {
  // d_i = -sigma^2 * dJ/d(conj h_i) componentwise: dJ/dRe(h_i) = -Re(d_i)/sigma^2.
  const double sigma = 1.0;
  const double delta = 1e-6;
  for (int instance = 0; instance < 100; ++instance) {
    const CVector v = random_complex_vector(8, 3000 + instance);
    const CVector direction = ascent_direction(v, sigma);
    RVector fd_gradient(16), analytic_gradient(16);
    for (int i = 0; i < 8; ++i) {
      for (int component = 0; component < 2; ++component) {
        CVector plus = v, minus = v;
        const Complex offset = component == 0 ? Complex(delta, 0.0) : Complex(0.0, delta);
        plus(i) += offset;
        minus(i) -= offset;
        fd_gradient(2 * i + component) =
            (smoothness_measure(plus, sigma) - smoothness_measure(minus, sigma)) / (2.0 * delta);
        analytic_gradient(2 * i + component) =
            (component == 0 ? -direction(i).real() : -direction(i).imag()) / (sigma * sigma);
      }
    }
    REQUIRE((fd_gradient - analytic_gradient).norm() <=
            1e-5 * std::max(analytic_gradient.norm(), 1e-6));
  }
}

TEST_CASE("ascent direction vanishes far outside the kernel width", "[sl0]") {
  CVector v(3);
  v << Complex(20.0, 0.0), Complex(0.0, -20.0), Complex(14.15, 14.15);
  const CVector direction = ascent_direction(v, 1.0);
  for (int i = 0; i < 3; ++i) REQUIRE(std::abs(direction(i)) < 1e-80);
}

TEST_CASE("feasible projection restores the measurement constraint", "[sl0]") {
  const EstimationProblem problem = noiseless_problem(16, 32, 3, 51);
  const CVector& truth = problem.truth->taps;

  SECTION("a feasible point is left in place") {
    const CVector projected = feasible_projection(truth, problem);
    REQUIRE((projected - truth).norm() <= 1e-12 * truth.norm());
  }

  SECTION("arbitrary points land on the constraint set") {
    for (int k = 0; k < 10; ++k) {
      const CVector point = random_complex_vector(32, 600 + k, 2.0);
      const CVector projected = feasible_projection(point, problem);
      const double residual = (problem.matrix.entries * projected - problem.observation).norm();
      REQUIRE(residual <= 1e-10 * problem.observation.norm());

      const CVector twice = feasible_projection(projected, problem);
      REQUIRE((twice - projected).norm() <= 1e-12 * std::max(1.0, projected.norm()));
    }
  }

  SECTION("tap length must match the matrix") {
    REQUIRE_THROWS_AS(feasible_projection(CVector::Zero(31), problem), std::invalid_argument);
  }
}

TEST_CASE("feasible projection solves the least-distance optimality system", "[sl0]") {
  // Reference: the KKT block system [I X^H; X 0] [h; nu] = [h0; y].
  const int rows = 3, cols = 5;
  const CMatrix x = random_complex_vector(rows * cols, 71).reshaped(rows, cols);
  const CVector y = random_complex_vector(rows, 72);
  const CVector h0 = random_complex_vector(cols, 73);

  CMatrix kkt = CMatrix::Zero(rows + cols, rows + cols);
  kkt.topLeftCorner(cols, cols) = CMatrix::Identity(cols, cols);
  kkt.topRightCorner(cols, rows) = x.adjoint();
  kkt.bottomLeftCorner(rows, cols) = x;
  CVector rhs(rows + cols);
  rhs.head(cols) = h0;
  rhs.tail(rows) = y;
  const CVector reference = Eigen::FullPivLU<CMatrix>(kkt).solve(rhs).head(cols);

  EstimationProblem problem{TrainingMatrix::from_entries(x), y, NoiseSpec{kInf, 0.0}, {}};
  const CVector projected = feasible_projection(h0, problem);
  REQUIRE((projected - reference).norm() <= 1e-10 * reference.norm());
}

TEST_CASE("feasible projection rejects row-rank-deficient operators", "[sl0]") {
  CMatrix x = random_complex_vector(15, 81).reshaped(3, 5);
  x.row(2) = x.row(0);
  EstimationProblem problem{TrainingMatrix::from_entries(x), random_complex_vector(3, 82),
                            NoiseSpec{kInf, 0.0}, {}};
  REQUIRE_THROWS_AS(feasible_projection(CVector::Zero(5), problem), numerical_rank_error);
}

TEST_CASE("correlation constraint check matches an entrywise oracle", "[sl0]") {
  const EstimationProblem problem = noiseless_problem(5, 8, 2, 91);
  const CVector point = random_complex_vector(8, 92);

  const CVector residual = problem.observation - problem.matrix.entries * point;
  double max_correlation = 0.0;
  for (int j = 0; j < 8; ++j) {
    Complex inner = 0.0;
    for (int i = 0; i < 5; ++i) inner += std::conj(problem.matrix.entries(i, j)) * residual(i);
    max_correlation = std::max(max_correlation, std::abs(inner));
  }

  REQUIRE(correlation_constraint_satisfied(point, problem, max_correlation * 1.0000001));
  REQUIRE_FALSE(correlation_constraint_satisfied(point, problem, max_correlation * 0.9999999));

  // The exact solution correlates with nothing.
  REQUIRE(correlation_constraint_satisfied(problem.truth->taps, problem, 1e-12));
  // The zero vector correlates with everything.
  const double raw = (problem.matrix.entries.adjoint() * problem.observation).cwiseAbs().maxCoeff();
  REQUIRE_FALSE(correlation_constraint_satisfied(CVector::Zero(8), problem, 0.5 * raw));

  REQUIRE_THROWS_AS(correlation_constraint_satisfied(CVector::Zero(7), problem, 1.0),
                    std::invalid_argument);
}

TEST_CASE("sigma schedule follows a geometric decay from twice the peak", "[sl0]") {
  CVector start(3);
  start << Complex(0.3, 0.0), Complex(0.0, 1.0), Complex(-0.2, 0.1);

  Msl0Params params;
  params.sigma_decay = 0.5;
  params.max_sigma_levels = 4;
  const std::vector<double> schedule = sigma_schedule(start, params);
  REQUIRE(schedule == std::vector<double>{2.0, 1.0, 0.5, 0.25});

  REQUIRE(sigma_schedule(CVector::Zero(5), params).empty());
}

TEST_CASE("sigma schedule decreases strictly and respects the noise floor", "[sl0]") {
  std::mt19937_64 engine(mix64(424242));
  std::uniform_real_distribution<double> decay_draw(0.05, 0.95);
  for (int k = 0; k < 200; ++k) {
    Msl0Params params;
    params.sigma_decay = decay_draw(engine);
    const CVector start = random_complex_vector(10, 7000 + k);
    const std::vector<double> schedule = sigma_schedule(start, params);
    REQUIRE_FALSE(schedule.empty());
    REQUIRE(schedule.front() == 2.0 * start.cwiseAbs().maxCoeff());
    for (std::size_t i = 1; i < schedule.size(); ++i) {
      REQUIRE(schedule[i] < schedule[i - 1]);
      REQUIRE(schedule[i] == Catch::Approx(schedule[i - 1] * params.sigma_decay).epsilon(1e-15));
    }
    REQUIRE(static_cast<int>(schedule.size()) <= params.max_sigma_levels);
  }

  CVector unit(1);
  unit << Complex(1.0, 0.0);
  Msl0Params params;  // floor factor 0.125, decay 0.5
  const double noise_std = 0.1;
  const std::vector<double> schedule = sigma_schedule(unit, params, noise_std);
  const double floor = params.sigma_floor_factor * noise_std;
  REQUIRE_FALSE(schedule.empty());
  REQUIRE(schedule.back() >= floor);
  REQUIRE(schedule.back() * params.sigma_decay < floor);
  REQUIRE(static_cast<int>(schedule.size()) < params.max_sigma_levels);

  REQUIRE_THROWS_AS(sigma_schedule(unit, params, -1.0), std::invalid_argument);
}

TEST_CASE("msl0 parameter validation", "[sl0]") {
  Msl0Params params;
  REQUIRE_NOTHROW(params.validate());

  Msl0Params bad = params;
  bad.sigma_decay = 1.0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params;
  bad.sigma_decay = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params;
  bad.inner_iterations = 0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params;
  bad.step_size = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params;
  bad.max_sigma_levels = 0;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params;
  bad.residual_budget = -0.1;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = params;
  bad.residual_budget = 0.1;
  bad.correlation_budget = 0.1;
  REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("msl0 recovers planted sparse channels from noiseless data", "[sl0]") {
  int hits = 0;
  for (int seed = 0; seed < 25; ++seed) {
    const EstimationProblem problem = noiseless_problem(16, 32, 2, 100 + seed);
    const Estimate estimate = msl0_solve(problem);
    const double rel = (estimate.taps - problem.truth->taps).norm() / problem.truth->taps.norm();
    if (rel <= 1e-4) ++hits;
    REQUIRE(estimate.solver_name == "msl0");
    REQUIRE(estimate.iterations > 0);
    REQUIRE(estimate.sigma_final > 0.0);
  }
  REQUIRE(hits >= 24);
}

TEST_CASE("msl0 on a zero observation returns the zero channel untouched", "[sl0]") {
  const TrainingMatrix matrix = generate_training(16, 32, 5);
  const SparseChannel zero = generate_channel(32, 0, 1.0, 6);
  const EstimationProblem problem = synthesize_measurement(matrix, zero, kInf, 7);
  const Estimate estimate = msl0_solve(problem);
  REQUIRE(estimate.taps.isZero(0.0));
  REQUIRE(estimate.iterations == 0);
  REQUIRE(estimate.sigma_final == 0.0);
}

TEST_CASE("msl0 reduces to the unique solution on a unitary operator", "[sl0]") {
  const CMatrix square = random_complex_vector(12 * 12, 31).reshaped(12, 12);
  const CMatrix q = Eigen::HouseholderQR<CMatrix>(square)
                        .householderQ() * CMatrix::Identity(12, 12);
  const SparseChannel channel = generate_channel(12, 2, 1.0, 32);
  const EstimationProblem problem =
      synthesize_measurement(TrainingMatrix::from_entries(q), channel, kInf, 33);
  const Estimate estimate = msl0_solve(problem);
  const CVector reference = q.adjoint() * problem.observation;
  REQUIRE((estimate.taps - reference).norm() <= 1e-8 * std::max(1.0, reference.norm()));
}

TEST_CASE("msl0 keeps every iterate feasible in the noiseless regime", "[sl0]") {
  const EstimationProblem problem = noiseless_problem(16, 32, 3, 140);
  const double observation_norm = problem.observation.norm();
  int calls = 0;
  double last_sigma = kInf;
  const Estimate estimate = msl0_solve(problem, {}, [&](const CVector& iterate, double sigma) {
    REQUIRE((problem.matrix.entries * iterate - problem.observation).norm() <=
            1e-8 * observation_norm);
    REQUIRE(sigma > 0.0);
    REQUIRE(sigma <= last_sigma);
    last_sigma = sigma;
    ++calls;
  });
  REQUIRE(calls == estimate.iterations);
}

TEST_CASE("msl0 reports divergence through a typed error", "[sl0]") {
  const EstimationProblem problem = noiseless_problem(16, 32, 3, 150);
  Msl0Params params;
  params.step_size = 1e160;
  try {
    msl0_solve(problem, params);
    FAIL("expected solver_divergence_error");
  } catch (const solver_divergence_error& error) {
    REQUIRE(error.sigma_level() > 0.0);
  }
}

TEST_CASE("msl0 stops the schedule once the correlation budget holds", "[sl0]") {
  const EstimationProblem problem = noiseless_problem(16, 32, 3, 160);
  Msl0Params params;
  params.correlation_budget =
      10.0 * (problem.matrix.entries.adjoint() * problem.observation).cwiseAbs().maxCoeff();
  const Estimate estimate = msl0_solve(problem, params);
  REQUIRE(estimate.iterations == params.inner_iterations);
  REQUIRE(estimate.taps.allFinite());
}

TEST_CASE("msl0 succeeds at the standard measurement budget", "[sl0]") {
  // rows = 2 T ceil(ln cols) measurements suffice for T <= 5 at cols = 64.
  const int cols = 64;
  const int log_factor = static_cast<int>(std::ceil(std::log(static_cast<double>(cols))));
  for (int sparsity = 1; sparsity <= 5; ++sparsity) {
    const int rows = 2 * sparsity * log_factor;
    int hits = 0;
    for (int seed = 0; seed < 100; ++seed) {
      const EstimationProblem problem =
          noiseless_problem(rows, cols, sparsity, 9000 + 100 * sparsity + seed);
      const Estimate estimate = msl0_solve(problem);
      const double rel =
          (estimate.taps - problem.truth->taps).norm() / problem.truth->taps.norm();
      if (rel <= 1e-3) ++hits;
    }
    REQUIRE(hits >= 90);
  }
}
