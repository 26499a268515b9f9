#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "reach/csv.hpp"
#include "reach/dense.hpp"
#include "reach/errors.hpp"
#include "reach/models.hpp"
#include "reach/noise.hpp"
#include "reach/system.hpp"

using namespace reach;

namespace {

SystemDefinition quadratic_definition() {
  SystemDefinition def;
  def.name = "quadratic";
  def.hamiltonian = [](std::span<const double> x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); };
  def.grad_hamiltonian = [](std::span<const double> x, std::span<double> g) {
    g[0] = x[0];
    g[1] = x[1];
  };
  def.structure = Matrix{{0.0, 1.0}, {-1.0, 0.0}};
  def.friction = Matrix{{0.0, 0.0}, {0.0, 1.0}};
  def.topology = {Topology::linear, Topology::linear};
  def.equilibrium = {0.0, 0.0};
  return def;
}

State random_state(NoiseStream& rng) {
  return {(2.0 * rng.uniform() - 1.0) * std::numbers::pi, (2.0 * rng.uniform() - 1.0) * std::numbers::pi,
          (2.0 * rng.uniform() - 1.0) * 3.0, (2.0 * rng.uniform() - 1.0) * 3.0};
}

}  // namespace

TEST_CASE("system construction enforces structure invariants") {
  CHECK_NOTHROW(SystemSpec{quadratic_definition()});

  auto def = quadratic_definition();
  def.structure(0, 1) = 1.0 + 1e-15;
  CHECK_THROWS_AS(SystemSpec{def}, ArgumentError);

  def = quadratic_definition();
  def.friction = Matrix{{0.0, 0.1}, {0.0, 1.0}};
  CHECK_THROWS_AS(SystemSpec{def}, ArgumentError);

  def = quadratic_definition();
  def.friction = Matrix{{-0.5, 0.0}, {0.0, 1.0}};
  CHECK_THROWS(SystemSpec{def});

  def = quadratic_definition();
  def.equilibrium = {0.1, 0.0};
  CHECK_THROWS_AS(SystemSpec{def}, ArgumentError);

  def = quadratic_definition();
  def.grad_hamiltonian = [](std::span<const double> x, std::span<double> g) {
    g[0] = x[0];
    g[1] = -x[1];
  };
  CHECK_THROWS_AS(SystemSpec{def}, ArgumentError);
}

TEST_CASE("tiny negative friction eigenvalues are clamped") {
  auto def = quadratic_definition();
  def.friction = Matrix{{-1e-14, 0.0}, {0.0, 1.0}};
  const SystemSpec sys(def);
  CHECK(sys.friction()(0, 0) >= 0.0);
  CHECK(sys.friction()(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("built-in models satisfy J antisymmetric and D symmetric PSD") {
  for (const SystemSpec& sys : {double_pendulum(), linearized_double_pendulum().system}) {
    const Matrix& j = sys.structure();
    const Matrix& d = sys.friction();
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 4; ++c) {
        CHECK(j(r, c) == -j(c, r));
        CHECK(d(r, c) == d(c, r));
      }
    CHECK(eigen_sym(d).values.front() >= 0.0);
    CHECK(norm2(sys.gradient(sys.equilibrium())) <= 1e-8);
    CHECK(gradient_check_error(sys, 64, 99) <= 1e-6);
  }
}

TEST_CASE("drift examples") {
  const auto pend = double_pendulum();
  const Vector f0 = drift(pend, State(4, 0.0));
  for (double v : f0) CHECK(v == 0.0);

  const auto lin = linearized_double_pendulum().system;
  const Vector f = drift(lin, State{1.0, 0.0, 0.0, 0.0});
  CHECK(f[0] == doctest::Approx(0.0));
  CHECK(f[1] == doctest::Approx(0.0));
  CHECK(f[2] == doctest::Approx(-31.0));
  CHECK(f[3] == doctest::Approx(-10.0));

  CHECK_THROWS_AS(drift(pend, State(3, 0.0)), ArgumentError);
}

TEST_CASE("drift dissipates energy") {
  const auto sys = double_pendulum();
  NoiseStream rng(3, 0);
  for (int i = 0; i < 200; ++i) {
    const State x = random_state(rng);
    const Vector f = drift(sys, x);
    const Vector g = sys.gradient(x);
    CHECK(dot(f, g) <= 1e-12 * (1.0 + dot(g, g)));

    const double h = 1e-6;
    State y = x;
    for (std::size_t k = 0; k < 4; ++k) y[k] += h * f[k];
    CHECK(sys.hamiltonian(y) - sys.hamiltonian(x) <= 10.0 * h * h * (1.0 + dot(f, f)));
  }
}

TEST_CASE("controllability value examples") {
  const auto lin = linearized_double_pendulum().system;
  CHECK(controllability_value(lin, lin.equilibrium()) == 0.0);
  CHECK(controllability_value(lin, State{0.5, 0.0, 0.0, 0.0}) == doctest::Approx(3.875).epsilon(1e-14));

  const auto pend = double_pendulum();
  CHECK(controllability_value(pend, pend.equilibrium()) == 0.0);
  CHECK(controllability_value(pend, State{0.0, 0.0, 1.0, 0.0}) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("controllability value is nonnegative near the equilibrium") {
  for (const SystemSpec& sys : {double_pendulum(), linearized_double_pendulum().system}) {
    for (double a = -1.0; a <= 1.0; a += 0.25)
      for (double b = -1.0; b <= 1.0; b += 0.25)
        for (double p = -1.0; p <= 1.0; p += 0.5) {
          const State x{a, b, p, -p};
          CHECK(controllability_value(sys, x) >= 0.0);
        }
  }
}

TEST_CASE("HJB residual vanishes for port-Hamiltonian systems") {
  NoiseStream rng(11, 0);
  for (const SystemSpec& sys : {double_pendulum(), linearized_double_pendulum().system}) {
    for (int i = 0; i < 1000; ++i) {
      const State x = random_state(rng);
      const Vector g = sys.gradient(x);
      CHECK(std::abs(hjb_residual(sys, x)) < 1e-10 * (1.0 + dot(g, g)));
    }
  }
}

TEST_CASE("HJB residual detects a corrupted noise covariance") {
  const auto sys = double_pendulum();
  Matrix bad = 2.0 * sys.friction();
  bad(0, 0) += 0.2;
  bad(1, 1) += 0.2;
  const State x{0.4, -0.3, 0.2, 0.1};
  const Vector g = sys.gradient(x);
  const double r = hjb_residual(drift(sys, x), bad, g);
  CHECK(std::abs(r) > 1e-3);
}

TEST_CASE("angle wrapping") {
  CHECK(wrap_angle(1.5 * std::numbers::pi) == doctest::Approx(-0.5 * std::numbers::pi));
  CHECK(wrap_angle(std::numbers::pi) == std::numbers::pi);
  CHECK(wrap_angle(-std::numbers::pi) == std::numbers::pi);
  CHECK(wrap_angle(0.25) == 0.25);

  const auto sys = double_pendulum();
  const State y = normalize(sys, State{1.5 * std::numbers::pi, 7.0, 7.3, -9.0});
  CHECK(y[0] == doctest::Approx(-0.5 * std::numbers::pi));
  CHECK(y[1] == doctest::Approx(7.0 - 2.0 * std::numbers::pi));
  CHECK(y[2] == 7.3);
  CHECK(y[3] == -9.0);

  NoiseStream rng(5, 0);
  for (int i = 0; i < 1000; ++i) {
    const double a = (rng.uniform() - 0.5) * 100.0;
    const double w = wrap_angle(a);
    CHECK(w > -std::numbers::pi);
    CHECK(w <= std::numbers::pi);
    CHECK(std::abs(std::remainder(a - w, 2.0 * std::numbers::pi)) < 1e-12);
  }
}

TEST_CASE("domain membership is strict") {
  const DomainSpec ball = norm_ball(1.0);
  CHECK(ball.contains(State{0.5, 0.0}));
  CHECK_FALSE(ball.contains(State{1.0, 0.0}));
  CHECK(ball.level(State{0.0, 0.0}) == -1.0);

  const DomainSpec inside = closure_target(ball);
  CHECK(inside.level(State{1.0, 0.0}) == 0.0);
  CHECK(inside.contains(State{2.0, 0.0}));

  const DomainSpec lo = below(0, -1.0);
  CHECK(lo.contains(State{-2.0}));
  CHECK_FALSE(lo.contains(State{-1.0}));
  const DomainSpec hi = above(0, 1.0);
  CHECK(hi.contains(State{2.0}));
  CHECK_FALSE(hi.contains(State{1.0}));
}

TEST_CASE("ball levels are 1-Lipschitz with analytic gradients") {
  const DomainSpec ball = norm_ball(0.5, {0, 1});
  NoiseStream rng(8, 0);
  for (int i = 0; i < 200; ++i) {
    State x = random_state(rng), y = random_state(rng);
    const double dq = std::hypot(x[0] - y[0], x[1] - y[1]);
    CHECK(std::abs(ball.level(x) - ball.level(y)) <= dq + 1e-15);
    const Vector g = ball.level_gradient(x);
    const double n = std::hypot(x[0], x[1]);
    CHECK(g[0] == doctest::Approx(x[0] / n));
    CHECK(g[1] == doctest::Approx(x[1] / n));
    CHECK(g[2] == 0.0);
  }
}

TEST_CASE("finite-difference level gradient fallback") {
  DomainSpec d;
  d.level = [](std::span<const double> x) { return x[0] * x[0] + 3.0 * x[1] - 1.0; };
  const Vector g = d.level_gradient(State{0.5, 2.0});
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("dense linear algebra helpers") {
  const Matrix s{{1.0, -2.0}, {-2.0, 5.0}};
  const auto eig = eigen_sym(s);
  CHECK(eig.values[0] == doctest::Approx(3.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(eig.values[1] == doctest::Approx(3.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-14));

  const Matrix n = pendulum_stiffness_matrix();
  const auto en = eigen_sym(n);
  CHECK(en.values[0] == doctest::Approx(21.0 - std::sqrt(200.0)).epsilon(1e-14));
  CHECK(en.values[1] == doctest::Approx(21.0 + std::sqrt(200.0)).epsilon(1e-14));

  const auto ei = eigen_sym(Matrix::identity(5));
  for (double v : ei.values) CHECK(v == 1.0);

  const Matrix r = psd_sqrt(Matrix::diagonal(Vector{4.0, 4.0}));
  CHECK(r(0, 0) == doctest::Approx(2.0));
  CHECK(r(0, 1) == doctest::Approx(0.0));
  const Matrix r2 = psd_sqrt(Matrix::diagonal(Vector{0.0, 0.0, 2.0, 2.0}));
  CHECK(r2(0, 0) == 0.0);
  CHECK(r2(2, 2) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(psd_sqrt(Matrix::diagonal(Vector{1.0, -0.1})), NotPsdError);

  NoiseStream rng(21, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) m(i, j) = rng.gaussian();
    const Matrix q = m.transpose() * m;
    const Matrix root = psd_sqrt(q);
    CHECK((root * root - q).max_abs() <= 1e-12 * std::max(1.0, q.max_abs()));

    const Vector b{1.0, -2.0, 0.5, 3.0};
    const Vector x = solve(q, b);
    const Vector back = q * x;
    for (std::size_t i = 0; i < 4; ++i) CHECK(back[i] == doctest::Approx(b[i]).epsilon(1e-8));
  }
  CHECK_THROWS_AS(solve(Matrix{{1.0, 2.0}, {2.0, 4.0}}, Vector{1.0, 1.0}), IllPosedError);
  CHECK_FALSE(cholesky(Matrix{{1.0, 2.0}, {2.0, 1.0}}).has_value());
}

TEST_CASE("matrix CSV round-trips bit-exactly") {
  const Matrix m{{1.0 / 3.0, -2e-300}, {std::numbers::pi, 1e300}};
  std::stringstream ss;
  write_matrix_csv(ss, m);
  CHECK(read_matrix_csv(ss) == m);
  CHECK_THROWS(parse_double("1.0x"));
}

TEST_CASE("noise streams are reproducible and distinct") {
  NoiseStream a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.gaussian();
    CHECK(x == b.gaussian());
    differs = differs || x != c.gaussian();
  }
  CHECK(differs);

  NoiseStream s(1, 0);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = s.gaussian();
    sum += g;
    sum2 += g * g;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("moved-from matrices are empty") {
  Matrix a{{1.0, 2.0}, {3.0, 4.0}};
  Matrix b = std::move(a);
  CHECK(a.rows() == 0);
  CHECK(a.cols() == 0);
  CHECK(a.empty());
  CHECK(b(1, 0) == 3.0);
  Matrix c(3, 3);
  c = std::move(b);
  CHECK(b.rows() == 0);
  CHECK(c.rows() == 2);
}
