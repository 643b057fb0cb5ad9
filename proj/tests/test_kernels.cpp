#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "pegp/datagen.hpp"
#include "pegp/error.hpp"
#include "pegp/kernels.hpp"

using namespace pegp;
using kernels::SeKernel;

namespace {

lti::LtiSystem integrator() {
  return lti::LtiSystem(Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
}

kernels::PhysicsKernel experiment_kernel() {
  return kernels::PhysicsKernel(datagen::build_experiment_system(), {SeKernel{0.05, 5.0}, SeKernel{0.08, 5.0}});
}

std::vector<double> seeded_grid(std::uint64_t seed, int n) {
  const Matrix r = oracle::random_matrix(1, n, seed);
  std::vector<double> t(static_cast<std::size_t>(n));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += 0.3 + 1.2 * std::abs(r(0, i));
    t[static_cast<std::size_t>(i)] = acc;
  }
  return t;
}

}  // namespace

TEST_CASE("SE kernel values") {
  const SeKernel k{1.0, 1.0};
  CHECK(kernels::se_eval(SeKernel{2.5, 0.3}, 4.0, 4.0) == 2.5);
  CHECK(kernels::se_eval(k, 0.0, 1.0) == doctest::Approx(0.6065306597126334).epsilon(1e-14));
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix r = oracle::random_matrix(1, 2, s) * 10.0;
    CHECK(kernels::se_eval(SeKernel{1.3, 2.0}, r(0, 0), r(0, 1)) == kernels::se_eval(SeKernel{1.3, 2.0}, r(0, 1), r(0, 0)));
  }
}

TEST_CASE("physics kernel vanishes on an empty integration domain") {
  const auto k = experiment_kernel();
  CHECK(k.block(0.0, 5.0).isZero(0.0));
  CHECK(k.block(5.0, 0.0).isZero(0.0));
}

TEST_CASE("integrator kernel matches the brute-force double integral") {
  const kernels::PhysicsKernel k(integrator(), {SeKernel{1.0, 1.0}});
  auto integrand = [](double s, double sp) { return std::exp(-0.5 * (s - sp) * (s - sp)); };
  const double ref = oracle::simpson_2d(integrand, 1.0, 1.0, 1000);
  CHECK(std::abs(k.eval(0, 0, 1.0, 1.0) - ref) <= 1e-4 * std::abs(ref));
  for (auto [t, tp] : {std::pair{2.0, 3.5}, std::pair{6.0, 1.0}, std::pair{4.0, 4.0}}) {
    const double r = oracle::simpson_2d(integrand, t, tp, 600);
    CHECK(std::abs(k.eval(0, 0, t, tp) - r) <= 1e-4 * std::abs(r));
  }
}

TEST_CASE("physics kernel block symmetry") {
  const auto k = experiment_kernel();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix r = oracle::random_matrix(1, 2, s);
    const double t = 15.0 + 14.0 * r(0, 0), tp = 15.0 + 14.0 * r(0, 1);
    const Matrix a = k.block(t, tp), b = k.block(tp, t);
    CHECK(numerics::max_abs(a - b.transpose()) <= 1e-10);
  }
}

TEST_CASE("physics kernel converges under node doubling") {
  const auto k = experiment_kernel();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix r = oracle::random_matrix(1, 2, 500 + s);
    const double t = 25.0 + 24.0 * r(0, 0), tp = 25.0 + 24.0 * r(0, 1);
    const Matrix coarse = k.block_with_nodes(t, tp, 32), fine = k.block_with_nodes(t, tp, 64);
    for (Eigen::Index i = 0; i < 2; ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        CHECK(std::abs(coarse(i, j) - fine(i, j)) <= 1e-6 * std::abs(fine(i, j)) + 1e-12);
      }
    }
  }
}

TEST_CASE("physics kernel reports poor quadrature") {
  const kernels::PhysicsKernel k(datagen::build_experiment_system(), {SeKernel{1.0, 0.05}, SeKernel{1.0, 0.05}}, 2, 1e-6);
  CHECK_THROWS_AS(k.eval(0, 0, 40.0, 40.0), Error);
}

TEST_CASE("input variance scales the kernel linearly") {
  const kernels::PhysicsKernel k1(integrator(), {SeKernel{1.0, 2.0}});
  const kernels::PhysicsKernel k3(integrator(), {SeKernel{3.0, 2.0}});
  const std::vector<double> grid{0.5, 1.5, 3.0, 7.0};
  const auto g1 = kernels::gram_physics(k1, grid), g3 = kernels::gram_physics(k3, grid);
  Matrix a = g1.values, b = g3.values;
  a.diagonal().array() -= g1.jitter;
  b.diagonal().array() -= g3.jitter;
  CHECK(numerics::max_abs(b - 3.0 * a) <= 1e-12 * numerics::max_abs(b));

  // On the experiment system each output sees one input only.
  auto sys = datagen::build_experiment_system();
  const kernels::PhysicsKernel e1(sys, {SeKernel{1.0, 5.0}, SeKernel{1.0, 5.0}});
  const kernels::PhysicsKernel e2(sys, {SeKernel{4.0, 5.0}, SeKernel{1.0, 5.0}});
  const Matrix x = e1.block(10.0, 12.0), y = e2.block(10.0, 12.0);
  CHECK(y(0, 0) == doctest::Approx(4.0 * x(0, 0)).epsilon(1e-12));
  CHECK(y(1, 1) == doctest::Approx(x(1, 1)).epsilon(1e-12));
}

TEST_CASE("physics variance stays bounded over the horizon") {
  const auto k = experiment_kernel();
  const Matrix at30 = k.block(30.0, 30.0);
  for (double t = 1.0; t <= 50.0; t += 1.0) {
    const Matrix b = k.block(t, t);
    CHECK(b(0, 0) <= 10.0 * at30(0, 0));
    CHECK(b(1, 1) <= 10.0 * at30(1, 1));
  }
}

TEST_CASE("Gram assembly") {
  const auto k = experiment_kernel();
  const std::vector<double> grid{1.0, 2.0, 3.0};
  const auto g = kernels::gram_physics(k, grid);
  REQUIRE(g.values.rows() == 6);
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      for (Eigen::Index a = 0; a < 3; ++a) {
        for (Eigen::Index b = 0; b < 3; ++b) {
          double expect = k.eval(i, j, grid[a], grid[b]);
          if (g.index(i, a) == g.index(j, b)) expect += g.jitter;
          CHECK(g.values(g.index(i, a), g.index(j, b)) == doctest::Approx(expect).epsilon(1e-14));
        }
      }
    }
  }
  CHECK(g.jitter == doctest::Approx(kernels::kRelativeJitter * (g.values.diagonal().mean() - g.jitter)).epsilon(1e-9));

  const std::vector<double> zero{0.0};
  const auto z = kernels::gram_physics(k, zero);
  CHECK(z.values.isDiagonal(0.0));
}

TEST_CASE("physics Gram is positive definite on seeded grids") {
  const auto k = experiment_kernel();
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int n = 2 + static_cast<int>(s % 29);
    const auto grid = seeded_grid(s, n);
    const auto g = kernels::gram_physics(k, grid);
    CHECK_NOTHROW(numerics::Cholesky{g.values});
  }
  const auto grid = lti::uniform_grid(1.0, 1.0, 30);
  CHECK_NOTHROW(numerics::Cholesky{kernels::gram_physics(k, grid).values});
}

TEST_CASE("SE baseline Gram") {
  const std::vector<SeKernel> per_dim{SeKernel{1.0, 2.0}, SeKernel{1.0, 2.0}};
  const std::vector<double> grid{0.0, 2.0};
  const auto g = kernels::gram_se_baseline(per_dim, grid);
  for (Eigen::Index d = 0; d < 2; ++d) {
    const Matrix b = g.block(d, d);
    CHECK(b(0, 1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(b(0, 0) - g.jitter == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(g.block(0, 1).isZero(0.0));
  for (std::uint64_t s = 0; s < 20; ++s) {
    CHECK_NOTHROW(numerics::Cholesky{kernels::gram_se_baseline(per_dim, seeded_grid(s + 90, 25)).values});
  }
}

TEST_CASE("correlation normalisation and CSV layout") {
  Matrix m(2, 2);
  m << 4.0, 1.0, 1.0, 9.0;
  const Matrix c = kernels::normalize_to_correlation(m);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(0, 1) == doctest::Approx(1.0 / 6.0));
  std::ostringstream os;
  const std::vector<double> t{1.0, 2.0};
  kernels::write_block_csv(os, t, c);
  std::istringstream is(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 3);
}
