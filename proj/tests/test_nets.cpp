#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pegp/error.hpp"
#include "pegp/nets.hpp"

using namespace pegp;
using nets::Graph;

namespace {

nets::MlpParams random_mlp(int in, int hidden, int out, std::uint64_t seed) {
  numerics::RngStream rng(seed);
  auto p = nets::MlpParams::glorot(in, hidden, out, rng);
  p.b1 = oracle::random_matrix(hidden, 1, seed + 1) * 0.1;
  p.b2 = oracle::random_matrix(out, 1, seed + 2) * 0.1;
  return p;
}

// Scalar w . f(x) through the graph, gradient with respect to the input row.
double decode_weighted(const nets::MlpParams& p, const Matrix& y, const Matrix& w, Matrix* grad) {
  Graph g;
  const auto nodes = nets::add_parameters(g, p);
  const auto in = g.parameter(y);
  const auto out = nets::mlp_forward(g, nodes, in, nets::OutputActivation::Sigmoid);
  const auto root = g.sum(g.hadamard(out, g.constant(w)));
  if (grad) {
    g.backward(root);
    *grad = g.grad(in);
  }
  return g.scalar(root);
}

}  // namespace

TEST_CASE("graph: square at three") {
  Graph g;
  const auto w = g.parameter(Matrix::Constant(1, 1, 3.0));
  const auto root = g.sum(g.square(w));
  g.backward(root);
  CHECK(g.grad(w)(0, 0) == 6.0);
}

TEST_CASE("graph: constants carry no gradient") {
  Graph g;
  const auto c = g.constant(Matrix::Constant(2, 2, 1.5));
  const auto p = g.parameter(Matrix::Ones(2, 2));
  const auto root = g.sum(g.hadamard(c, c));
  CHECK_FALSE(g.requires_grad(root));
  g.backward(root);
  CHECK(g.grad(p).isZero(0.0));
  Graph fresh;
  const auto q = fresh.parameter(Matrix::Ones(1, 1));
  CHECK_THROWS_AS(fresh.grad(q), Error);
}

TEST_CASE("graph: every op agrees with finite differences") {
  const Matrix a0 = oracle::random_matrix(3, 4, 1) * 0.8;
  const Matrix b0 = oracle::random_matrix(4, 2, 2);
  const Matrix c0 = oracle::random_matrix(3, 4, 3);
  const Matrix bias0 = oracle::random_matrix(2, 1, 4);
  const Matrix pos0 = (oracle::random_matrix(3, 4, 5).array().abs() + 0.5).matrix();

  auto build = [&](const Matrix& a, Matrix* ga) {
    Graph g;
    const auto na = g.parameter(a);
    const auto nb = g.constant(b0), nc = g.constant(c0), nbias = g.constant(bias0), npos = g.constant(pos0);
    auto x = g.add_row_bias(g.matmul(g.tanh(na), nb), nbias);                  // 3 x 2
    auto y = g.matmul_transposed(g.sigmoid(g.add(na, nc)), g.exp(g.scale(nc, 0.3)));  // 3 x 3
    auto z = g.sub(g.hadamard(na, g.log(g.add(npos, g.square(na)))), nc);       // 3 x 4
    auto cols = g.columns(z, 1, 2);
    const auto root = g.add(g.add(g.sum(g.square(x)), g.sum(y)), g.sum(g.hadamard(cols, cols)));
    if (ga) {
      g.backward(root);
      *ga = g.grad(na);
    }
    return g.scalar(root);
  };
  Matrix grad;
  build(a0, &grad);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < a0.rows(); ++i) {
    for (Eigen::Index j = 0; j < a0.cols(); ++j) {
      Matrix up = a0, down = a0;
      up(i, j) += h;
      down(i, j) -= h;
      const double fd = (build(up, nullptr) - build(down, nullptr)) / (2 * h);
      CHECK(std::abs(fd - grad(i, j)) <= 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("graph: custom node backward is used") {
  Graph g;
  const auto x = g.parameter(Matrix::Constant(2, 1, 2.0));
  const auto cube = g.custom({x}, g.value(x).array().cube().matrix(), [&](const Matrix& up) {
    return std::vector<Matrix>{(3.0 * g.value(x).array().square() * up.array()).matrix()};
  });
  const auto root = g.sum(cube);
  g.backward(root);
  CHECK(g.grad(x)(0, 0) == 12.0);
}

TEST_CASE("encoder: zero network") {
  const auto p = nets::MlpParams::zeros(16, 8, 4);
  const auto out = nets::encode(p, Vector::Ones(16));
  CHECK(out.mu.isZero(0.0));
  CHECK(out.log_sigma.isZero(0.0));
  CHECK(out.sigma() == Vector::Ones(2));
}

TEST_CASE("encoder: deterministic and W2 perturbation is local") {
  const auto p = random_mlp(16, 8, 4, 10);
  const Vector frame = oracle::random_matrix(16, 1, 11).cwiseAbs();
  const auto a = nets::encode(p, frame), b = nets::encode(p, frame);
  CHECK(a.mu == b.mu);
  CHECK(a.log_sigma == b.log_sigma);

  const double eps = 1e-6;
  auto q = p;
  q.w2(1, 3) += eps;
  const auto c = nets::encode(q, frame);
  const double hidden3 = std::tanh((p.w1 * frame + p.b1)(3));
  CHECK(c.mu(0) == a.mu(0));
  CHECK(c.log_sigma == a.log_sigma);
  CHECK((c.mu(1) - a.mu(1)) / eps == doctest::Approx(hidden3).epsilon(1e-6));
  CHECK_THROWS_AS(nets::encode(p, Vector::Ones(5)), Error);
}

TEST_CASE("decoder: range and zero network") {
  const auto zero = nets::MlpParams::zeros(2, 8, 16);
  CHECK((nets::decode(zero, Vector::Ones(2)).array() == 0.5).all());
  const auto p = random_mlp(2, 8, 16, 20);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Vector y = oracle::random_matrix(2, 1, s) * 1000.0;
    const Vector r = nets::decode(p, y);
    CHECK(r.allFinite());
    CHECK(((r.array() > 0.0) && (r.array() < 1.0)).all());
  }
}

TEST_CASE("decoder: input gradient matches finite differences") {
  const auto p = random_mlp(2, 12, 9, 30);
  const Matrix w = oracle::random_matrix(1, 9, 31);
  const Matrix y = oracle::random_matrix(1, 2, 32);
  Matrix grad;
  decode_weighted(p, y, w, &grad);
  const double h = 1e-6;
  for (Eigen::Index j = 0; j < 2; ++j) {
    Matrix up = y, down = y;
    up(0, j) += h;
    down(0, j) -= h;
    const double fd = (decode_weighted(p, up, w, nullptr) - decode_weighted(p, down, w, nullptr)) / (2 * h);
    CHECK(std::abs(fd - grad(0, j)) <= 1e-5 * std::abs(fd) + 1e-10);
  }
  // The graph forward agrees with the plain decoder.
  const Vector direct = nets::decode(p, y.transpose());
  CHECK(decode_weighted(p, y, w, nullptr) == doctest::Approx(w.row(0).dot(direct)).epsilon(1e-13));
}

TEST_CASE("Bernoulli log-likelihood") {
  const Vector half = Vector::Constant(4, 0.5);
  CHECK(nets::bernoulli_loglik(Vector::Ones(4), half) == doctest::Approx(4 * std::log(0.5)).epsilon(1e-14));
  Vector v = Vector::Zero(3), rho(3);
  rho << 0.2, 0.3, 0.9;
  v(2) = 1.0;
  CHECK(nets::bernoulli_loglik(v, rho) == doctest::Approx(std::log(0.8) + std::log(0.7) + std::log(0.9)));
  CHECK(std::isfinite(nets::bernoulli_loglik(Vector::Ones(1), Vector::Zero(1))));

  const Matrix targets = (oracle::random_matrix(2, 5, 40).array() > 0.0).cast<double>();
  const Matrix probs = (oracle::random_matrix(2, 5, 41).array().abs() * 0.8 + 0.1).matrix();
  auto value = [&](const Matrix& pr, Matrix* grad) {
    Graph g;
    const auto np = g.parameter(pr);
    const auto root = g.bernoulli_loglik(np, targets);
    if (grad) {
      g.backward(root);
      *grad = g.grad(np);
    }
    return g.scalar(root);
  };
  Matrix grad;
  value(probs, &grad);
  const double h = 1e-7;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      Matrix up = probs, down = probs;
      up(i, j) += h;
      down(i, j) -= h;
      const double fd = (value(up, nullptr) - value(down, nullptr)) / (2 * h);
      CHECK(std::abs(fd - grad(i, j)) <= 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("Adam: zero gradient leaves parameters unchanged") {
  Matrix w = oracle::random_matrix(3, 3, 50);
  const Matrix before = w;
  nets::AdamState state;
  std::vector<nets::ParameterRef> refs{{"w", &w}};
  std::vector<Matrix> grads{Matrix::Zero(3, 3)};
  nets::adam_step(state, refs, grads);
  CHECK(w == before);
}

TEST_CASE("Adam: first step moves by the learning rate against the gradient sign") {
  Matrix w = Matrix::Zero(2, 2);
  Matrix g(2, 2);
  g << 0.3, -2.0, 1e-3, -5e-4;
  nets::AdamState state;
  state.learning_rate = 0.01;
  std::vector<nets::ParameterRef> refs{{"w", &w}};
  std::vector<Matrix> grads{g};
  nets::adam_step(state, refs, grads);
  for (Eigen::Index i = 0; i < 4; ++i) {
    // m_hat = g, v_hat = g^2 after bias correction.
    const double expect = -0.01 * g(i) / (std::abs(g(i)) + 1e-8);
    CHECK(w(i) == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(state.step == 1);
}

TEST_CASE("Adam: identical states give identical updates; bad gradients are rejected") {
  Matrix a = oracle::random_matrix(2, 3, 60), b = a;
  const Matrix g = oracle::random_matrix(2, 3, 61);
  nets::AdamState sa, sb;
  std::vector<nets::ParameterRef> ra{{"a", &a}}, rb{{"b", &b}};
  std::vector<Matrix> grads{g};
  for (int k = 0; k < 3; ++k) {
    nets::adam_step(sa, ra, grads);
    nets::adam_step(sb, rb, grads);
  }
  CHECK(a == b);

  const Matrix keep = a;
  Matrix bad = g;
  bad(1, 1) = std::nan("");
  std::vector<Matrix> bad_grads{bad};
  CHECK_THROWS_AS(nets::adam_step(sa, ra, bad_grads), TrainingDivergence);
  CHECK(a == keep);
}
