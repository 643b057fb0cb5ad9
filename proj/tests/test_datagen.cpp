#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "oracles.hpp"
#include "pegp/datagen.hpp"
#include "pegp/error.hpp"

using namespace pegp;
namespace fs = std::filesystem;

namespace {

std::pair<double, double> centroid(const std::vector<std::uint8_t>& px, int d) {
  double r = 0.0, c = 0.0, n = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (px[static_cast<std::size_t>(i * d + j)]) {
        r += i;
        c += j;
        n += 1.0;
      }
    }
  }
  return {r / n, c / n};
}

int lit(const std::vector<std::uint8_t>& px) {
  int n = 0;
  for (auto v : px) n += v;
  return n;
}

datagen::DatasetConfig small_config() {
  datagen::DatasetConfig cfg;
  cfg.pilot_sequences = 16;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("oscillator constants") {
  const auto k = datagen::oscillator_constants({});
  CHECK(k.c1 == doctest::Approx(std::pow(2 * M_PI * 0.0477, 2)).epsilon(1e-12));
  CHECK(k.c1 == doctest::Approx(0.0898).epsilon(1e-3));
  CHECK(k.d1 == doctest::Approx(2 * 0.02 * 2 * M_PI * 0.0477).epsilon(1e-12));
  CHECK(k.d1 == doctest::Approx(0.01199).epsilon(1e-3));
  CHECK(k.c2 == doctest::Approx(0.1597).epsilon(1e-3));
  CHECK(k.d2 == doctest::Approx(0.00799).epsilon(1e-3));
  const auto sys = datagen::build_experiment_system();
  const Eigen::EigenSolver<Matrix> es(sys.a());
  CHECK((es.eigenvalues().real().array() < 0.0).all());
}

TEST_CASE("force sampling") {
  const auto grid = lti::uniform_grid(0.0, 0.5, 41);
  numerics::RngStream tiny(1);
  const std::vector<kernels::SeKernel> small{{1e-12, 5.0}};
  CHECK(numerics::max_abs(datagen::sample_forces(tiny, small, grid)) < 1e-4);

  const std::vector<kernels::SeKernel> two{{1.0, 5.0}, {2.0, 3.0}};
  numerics::RngStream a(7), b(7);
  CHECK(datagen::sample_forces(a, two, grid) == datagen::sample_forces(b, two, grid));

  const datagen::ForceSampler sampler(two, grid);
  numerics::RngStream mc(8);
  const int n = 500;
  double c00 = 0.0, c0k = 0.0, cross = 0.0;
  const int k = 6;  // t = 3
  for (int i = 0; i < n; ++i) {
    const Matrix u = sampler.sample(mc);
    c00 += u(0, 0) * u(0, 0);
    c0k += u(0, 0) * u(0, k);
    cross += u(0, 0) * u(1, 0);
  }
  CHECK(c00 / n == doctest::Approx(1.0).epsilon(0.1));
  CHECK(c0k / n == doctest::Approx(kernels::se_eval(two[0], 0.0, 3.0)).epsilon(0.1));
  CHECK(std::abs(cross / n) < 0.15);
}

TEST_CASE("rendering") {
  const datagen::RenderSettings rs;
  const auto centre = datagen::render_frame(Vector::Zero(2), rs);
  const auto [r, c] = centroid(centre, rs.d);
  CHECK(r == doctest::Approx(20.0).epsilon(0.03));
  CHECK(c == doctest::Approx(20.0).epsilon(0.03));
  CHECK(lit(centre) >= 6);
  CHECK(lit(centre) <= 14);
  CHECK(std::all_of(centre.begin(), centre.end(), [](auto v) { return v == 0 || v == 1; }));

  Vector far(2);
  far << 30.0, 0.0;
  CHECK(lit(datagen::render_frame(far, rs)) == 0);

  const double px = 2.0 * rs.half_width / rs.d;
  for (double x : {-1.3, -0.4, 0.25, 0.9}) {
    Vector y0(2), y1(2), y2(2);
    y0 << x, 0.37;
    y1 << x + px, 0.37;
    y2 << x, 0.37 + px;
    const auto a = centroid(datagen::render_frame(y0, rs), rs.d);
    const auto b = centroid(datagen::render_frame(y1, rs), rs.d);
    const auto up = centroid(datagen::render_frame(y2, rs), rs.d);
    CHECK(std::abs((b.second - a.second) - 1.0) <= 0.2);
    CHECK(std::abs(b.first - a.first) <= 0.2);
    CHECK(std::abs((a.first - up.first) - 1.0) <= 0.2);
  }
}

TEST_CASE("generated sequences are binary, equidistant and consistent with the system") {
  const auto cfg = small_config();
  const numerics::RngStream rng(3);
  const auto ds = datagen::generate_dataset(4, cfg, rng);
  REQUIRE(ds.sequences.size() == 4);
  const auto sys = datagen::build_experiment_system();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& seq = ds.sequences[i];
    CHECK(seq.d == 40);
    CHECK(seq.n_frames == 30);
    const auto t = seq.times();
    for (std::size_t k = 0; k < t.size(); ++k) CHECK(t[k] == doctest::Approx((k + 1) * 1.0).epsilon(1e-15));
    CHECK(std::all_of(seq.pixels.begin(), seq.pixels.end(), [](auto v) { return v <= 1; }));

    const auto& gt = ds.truths[i];
    CHECK(gt.latent.times.front() == 0.0);
    CHECK(gt.latent.times.back() == doctest::Approx(50.0));
    CHECK(std::abs(gt.latent.times[1] - 0.1) < 1e-12);
    const double h = gt.latent.times[1] - gt.latent.times[0];
    for (std::size_t k = 0; k + 1 < gt.latent.times.size(); ++k) {
      const Vector xdot = (gt.latent.states.col(k + 1) - gt.latent.states.col(k)) / h;
      const Vector xmid = 0.5 * (gt.latent.states.col(k + 1) + gt.latent.states.col(k));
      const Vector rhs = sys.a() * xmid + sys.b() * gt.forces.values.col(k);
      CHECK((xdot - rhs).norm() <= 1e-3 * (1.0 + rhs.norm()));
    }
    // Frame k shows the truth at (k + 1) dt.
    const Matrix at = datagen::truth_at(gt, t);
    CHECK(datagen::render_frame(at.row(4).transpose(), cfg.render) ==
          std::vector<std::uint8_t>(seq.frame(4).begin(), seq.frame(4).end()));
  }
}

TEST_CASE("calibration keeps the particle in view") {
  const auto cfg = small_config();
  const numerics::RngStream rng(4);
  const auto ds = datagen::generate_dataset(100, cfg, rng);
  int visible = 0, frames = 0;
  double sq = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    const auto& seq = ds.sequences[i];
    for (int k = 0; k < seq.n_frames; ++k) {
      const auto f = seq.frame(k);
      visible += std::any_of(f.begin(), f.end(), [](auto v) { return v != 0; }) ? 1 : 0;
      ++frames;
    }
    const Matrix y = datagen::truth_at(ds.truths[i], seq.times());
    sq += y.squaredNorm();
    count += static_cast<int>(y.size());
  }
  CHECK(visible >= 0.95 * frames);
  CHECK(std::sqrt(sq / count) == doctest::Approx(1.0).epsilon(0.25));
  CHECK(ds.force_variance.size() == 2);
}

TEST_CASE("dataset files round trip and are reproducible") {
  const fs::path dir = fs::temp_directory_path() / "pegp_test_datagen";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto cfg = small_config();
  cfg.force_variance = std::vector<double>{0.01, 0.02};
  const auto a = datagen::generate_dataset(1, cfg, numerics::RngStream(5));
  const auto b = datagen::generate_dataset(1, cfg, numerics::RngStream(5));
  datagen::write_sequence((dir / "a.pegv").string(), a.sequences[0]);
  datagen::write_sequence((dir / "b.pegv").string(), b.sequences[0]);
  datagen::write_ground_truth((dir / "a.csv").string(), a.truths[0]);
  datagen::write_ground_truth((dir / "b.csv").string(), b.truths[0]);
  CHECK(slurp((dir / "a.pegv").string()) == slurp((dir / "b.pegv").string()));
  CHECK(slurp((dir / "a.csv").string()) == slurp((dir / "b.csv").string()));

  CHECK(datagen::read_sequence((dir / "a.pegv").string()) == a.sequences[0]);
  const auto gt = datagen::read_ground_truth((dir / "a.csv").string());
  CHECK(numerics::max_abs(gt.latent.outputs - a.truths[0].latent.outputs) == 0.0);
  CHECK(numerics::max_abs(gt.forces.values - a.truths[0].forces.values) == 0.0);

  const std::vector<double> grey{0.0, 0.5, 1.0, 0.25};
  datagen::write_pgm((dir / "f.pgm").string(), 2, grey);
  CHECK(slurp((dir / "f.pgm").string()).rfind("P5", 0) == 0);

  std::ofstream((dir / "bad.pegv").string()) << "nope";
  CHECK_THROWS_AS(datagen::read_sequence((dir / "bad.pegv").string()), Error);
  CHECK_THROWS_AS(datagen::read_sequence((dir / "missing.pegv").string()), Error);
  fs::remove_all(dir);
}
