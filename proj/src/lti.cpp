#include "pegp/lti.hpp"

#include <cmath>
#include <map>

#include <json.hpp>

#include "pegp/error.hpp"

namespace pegp::lti {

namespace {

using nlohmann::json;

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) fail(ErrorKind::InvalidArgument, std::string("non-finite entry in ") + name);
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty()) fail(ErrorKind::Config, std::string("matrix ") + name + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      fail(ErrorKind::Config, std::string("matrix ") + name + " has ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

const char* slot_name(MatrixSlot s) {
  switch (s) {
    case MatrixSlot::A: return "A";
    case MatrixSlot::B: return "B";
    case MatrixSlot::C: return "C";
  }
  return "?";
}

MatrixSlot slot_from_name(const std::string& name) {
  if (name == "A") return MatrixSlot::A;
  if (name == "B") return MatrixSlot::B;
  if (name == "C") return MatrixSlot::C;
  fail(ErrorKind::Config, "unknown matrix slot '" + name + "'");
}

void check_grid(std::span<const double> times, const char* what) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k])) fail(ErrorKind::InvalidGrid, std::string(what) + " contains a non-finite time");
    if (k > 0 && !(times[k] > times[k - 1])) {
      fail(ErrorKind::InvalidGrid, std::string(what) + " is not strictly increasing at index " + std::to_string(k));
    }
  }
}

}  // namespace

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c) : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
  if (a_.rows() != a_.cols()) fail(ErrorKind::Dimension, "A must be square");
  if (b_.rows() != a_.rows()) fail(ErrorKind::Dimension, "B must have as many rows as A");
  if (c_.cols() != a_.rows()) fail(ErrorKind::Dimension, "C must have as many columns as A");
  require_finite(a_, "A");
  require_finite(b_, "B");
  require_finite(c_, "C");
}

Matrix& LtiSystem::slot(MatrixSlot s) {
  switch (s) {
    case MatrixSlot::A: return a_;
    case MatrixSlot::B: return b_;
    case MatrixSlot::C: return c_;
  }
  return a_;
}

std::size_t LtiSystem::bind_parameter(MatrixSlot s, Eigen::Index row, Eigen::Index col) {
  Matrix& m = slot(s);
  if (row < 0 || col < 0 || row >= m.rows() || col >= m.cols()) {
    fail(ErrorKind::Dimension, std::string("parameter binding outside ") + slot_name(s));
  }
  for (const auto& b : bindings_) {
    if (b == ParameterBinding{s, row, col}) fail(ErrorKind::InvalidArgument, "entry already bound");
  }
  bindings_.push_back({s, row, col});
  phi_.push_back(m(row, col));
  return phi_.size() - 1;
}

void LtiSystem::set_parameters(std::span<const double> phi) {
  if (phi.size() != phi_.size()) fail(ErrorKind::Dimension, "parameter vector length mismatch");
  for (double v : phi) {
    if (!std::isfinite(v)) fail(ErrorKind::InvalidArgument, "non-finite parameter");
  }
  phi_.assign(phi.begin(), phi.end());
  apply_parameters();
}

void LtiSystem::apply_parameters() {
  for (std::size_t k = 0; k < bindings_.size(); ++k) {
    slot(bindings_[k].slot)(bindings_[k].row, bindings_[k].col) = phi_[k];
  }
}

bool LtiSystem::operator==(const LtiSystem& other) const {
  return a_ == other.a_ && b_ == other.b_ && c_ == other.c_ && bindings_ == other.bindings_ && phi_ == other.phi_;
}

std::string LtiSystem::to_json() const {
  json j;
  j["A"] = matrix_to_json(a_);
  j["B"] = matrix_to_json(b_);
  j["C"] = matrix_to_json(c_);
  json phi = json::array();
  for (std::size_t k = 0; k < bindings_.size(); ++k) {
    phi.push_back({{"matrix", slot_name(bindings_[k].slot)},
                   {"row", bindings_[k].row},
                   {"col", bindings_[k].col},
                   {"value", phi_[k]}});
  }
  j["phi"] = std::move(phi);
  return j.dump(2);
}

LtiSystem LtiSystem::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("system JSON: ") + e.what());
  }
  for (const auto& [key, _] : j.items()) {
    if (key != "A" && key != "B" && key != "C" && key != "phi") fail(ErrorKind::Config, "unknown system key '" + key + "'");
  }
  try {
    LtiSystem sys(matrix_from_json(j.at("A"), "A"), matrix_from_json(j.at("B"), "B"),
                  matrix_from_json(j.at("C"), "C"));
    if (j.contains("phi")) {
      std::vector<double> values;
      for (const json& p : j.at("phi")) {
        sys.bind_parameter(slot_from_name(p.at("matrix").get<std::string>()), p.at("row").get<Eigen::Index>(),
                           p.at("col").get<Eigen::Index>());
        values.push_back(p.at("value").get<double>());
      }
      sys.set_parameters(values);
    }
    return sys;
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("system JSON: ") + e.what());
  }
}

Matrix greens_function(const LtiSystem& sys, double t, double t_prime) {
  if (t < t_prime) {
    fail(ErrorKind::Causality, "Green's function requested for t < t' (" + std::to_string(t) + " < " +
                                   std::to_string(t_prime) + ")");
  }
  if (t == t_prime) return sys.c() * sys.b();
  return sys.c() * numerics::matrix_exponential(sys.a(), t - t_prime) * sys.b();
}

std::vector<double> uniform_grid(double start, double step, std::size_t count) {
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = start + step * static_cast<double>(k);
  return grid;
}

LatentTrajectory simulate(const LtiSystem& sys, const InputSignal& input, const Vector& x0,
                          std::span<const double> output_times) {
  const Eigen::Index n = sys.state_dim();
  const Eigen::Index m = sys.input_dim();
  check_grid(input.times, "input grid");
  check_grid(output_times, "output grid");
  if (input.times.empty()) fail(ErrorKind::InvalidGrid, "empty input grid");
  if (input.values.rows() != m || input.values.cols() != static_cast<Eigen::Index>(input.times.size())) {
    fail(ErrorKind::Dimension, "input values must be m x (number of input times)");
  }
  if (x0.size() != n) fail(ErrorKind::Dimension, "initial state has wrong length");
  if (!x0.allFinite()) fail(ErrorKind::InvalidArgument, "non-finite initial state");
  if (!output_times.empty() &&
      (output_times.front() < input.times.front() || output_times.back() > input.times.back())) {
    fail(ErrorKind::InvalidGrid, "output times must lie within the input grid");
  }

  // Augmented generator [[A, B], [0, 0]]; its exponential over h holds the
  // state transition and the zero-order-hold input gain.
  Matrix augmented = Matrix::Zero(n + m, n + m);
  augmented.topLeftCorner(n, n) = sys.a();
  augmented.topRightCorner(n, m) = sys.b();

  std::map<double, std::pair<Matrix, Matrix>> cache;
  auto step = [&](const Vector& x, const Vector& u, double h) -> Vector {
    if (h == 0.0) return x;
    auto it = cache.find(h);
    if (it == cache.end()) {
      const Matrix phi = numerics::matrix_exponential(augmented, h);
      it = cache.emplace(h, std::make_pair(Matrix(phi.topLeftCorner(n, n)), Matrix(phi.topRightCorner(n, m)))).first;
    }
    return it->second.first * x + it->second.second * u;
  };

  LatentTrajectory out;
  out.times.assign(output_times.begin(), output_times.end());
  out.states.resize(n, static_cast<Eigen::Index>(output_times.size()));

  Vector x = x0;
  std::size_t next = 0;
  const std::size_t intervals = input.times.size();
  for (std::size_t k = 0; k < intervals && next < output_times.size(); ++k) {
    const double t0 = input.times[k];
    const double t1 = (k + 1 < intervals) ? input.times[k + 1] : t0;
    const Vector u = input.values.col(static_cast<Eigen::Index>(k));
    while (next < output_times.size() && output_times[next] <= t1 &&
           (output_times[next] < t1 || k + 1 == intervals)) {
      out.states.col(static_cast<Eigen::Index>(next)) = step(x, u, output_times[next] - t0);
      ++next;
    }
    if (k + 1 < intervals) x = step(x, u, t1 - t0);
  }
  out.outputs = sys.c() * out.states;
  return out;
}

}  // namespace pegp::lti
