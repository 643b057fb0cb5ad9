#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pegp/datagen.hpp"
#include "pegp/error.hpp"

namespace pegp::datagen {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'E', 'G', 'V'};
constexpr std::uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) fail(ErrorKind::Io, "truncated file " + path);
  return v;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) fail(ErrorKind::Io, "cannot write " + path);
  return os;
}

std::vector<double> parse_row(const std::string& line, const std::string& path) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str()) fail(ErrorKind::Io, "malformed number '" + cell + "' in " + path);
    row.push_back(v);
  }
  return row;
}

}  // namespace

void write_sequence(const std::string& path, const VideoSequence& seq) {
  seq.validate();
  if (seq.d > 0xffff || seq.n_frames > 0xffff) fail(ErrorKind::InvalidArgument, "sequence too large for the file format");
  std::ofstream os = open_out(path, std::ios::binary);
  os.write(kMagic.data(), kMagic.size());
  put<std::uint16_t>(os, kVersion);
  put<std::uint16_t>(os, static_cast<std::uint16_t>(seq.d));
  put<std::uint16_t>(os, static_cast<std::uint16_t>(seq.n_frames));
  put<double>(os, seq.dt);
  os.write(reinterpret_cast<const char*>(seq.pixels.data()), static_cast<std::streamsize>(seq.pixels.size()));
  if (!os) fail(ErrorKind::Io, "failed writing " + path);
}

VideoSequence read_sequence(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::NotFound, "cannot open sequence " + path);
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) fail(ErrorKind::Io, path + " is not a sequence file");
  if (get<std::uint16_t>(is, path) != kVersion) fail(ErrorKind::Io, "unsupported sequence version in " + path);
  VideoSequence seq;
  seq.d = get<std::uint16_t>(is, path);
  seq.n_frames = get<std::uint16_t>(is, path);
  seq.dt = get<double>(is, path);
  seq.pixels.resize(static_cast<std::size_t>(seq.n_frames) * static_cast<std::size_t>(seq.d) *
                    static_cast<std::size_t>(seq.d));
  if (!is.read(reinterpret_cast<char*>(seq.pixels.data()), static_cast<std::streamsize>(seq.pixels.size()))) {
    fail(ErrorKind::Io, "truncated file " + path);
  }
  seq.validate();
  return seq;
}

void write_ground_truth(const std::string& path, const GroundTruth& truth) {
  const auto& lat = truth.latent;
  const auto n = lat.times.size();
  if (static_cast<std::size_t>(lat.outputs.cols()) != n || truth.forces.times != lat.times ||
      static_cast<std::size_t>(truth.forces.values.cols()) != n) {
    fail(ErrorKind::Dimension, "ground-truth outputs and forces must share one grid");
  }
  std::ofstream os = open_out(path);
  os << "time";
  for (Eigen::Index i = 0; i < lat.outputs.rows(); ++i) os << ",y" << i + 1;
  for (Eigen::Index i = 0; i < truth.forces.values.rows(); ++i) os << ",u" << i + 1;
  os << '\n';
  char buf[32];
  auto cell = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < n; ++k) {
    cell(lat.times[k]);
    for (Eigen::Index i = 0; i < lat.outputs.rows(); ++i) {
      os << ',';
      cell(lat.outputs(i, static_cast<Eigen::Index>(k)));
    }
    for (Eigen::Index i = 0; i < truth.forces.values.rows(); ++i) {
      os << ',';
      cell(truth.forces.values(i, static_cast<Eigen::Index>(k)));
    }
    os << '\n';
  }
  if (!os) fail(ErrorKind::Io, "failed writing " + path);
}

GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::NotFound, "cannot open ground truth " + path);
  std::string header;
  std::getline(is, header);
  Eigen::Index p = 0, m = 0;
  {
    std::stringstream ss(header);
    std::string name;
    std::getline(ss, name, ',');
    if (name != "time") fail(ErrorKind::Io, "unexpected ground-truth header in " + path);
    while (std::getline(ss, name, ',')) {
      if (!name.empty() && name[0] == 'y') ++p;
      else if (!name.empty() && name[0] == 'u') ++m;
      else fail(ErrorKind::Io, "unexpected column '" + name + "' in " + path);
    }
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_row(line, path));
    if (static_cast<Eigen::Index>(rows.back().size()) != 1 + p + m) fail(ErrorKind::Io, "ragged row in " + path);
  }
  GroundTruth truth;
  const auto n = static_cast<Eigen::Index>(rows.size());
  truth.latent.outputs.resize(p, n);
  truth.forces.values.resize(m, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    truth.latent.times.push_back(r[0]);
    for (Eigen::Index i = 0; i < p; ++i) truth.latent.outputs(i, k) = r[static_cast<std::size_t>(1 + i)];
    for (Eigen::Index i = 0; i < m; ++i) truth.forces.values(i, k) = r[static_cast<std::size_t>(1 + p + i)];
  }
  truth.forces.times = truth.latent.times;
  return truth;
}

void write_pgm(const std::string& path, int d, std::span<const double> values) {
  if (d < 1 || values.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
    fail(ErrorKind::Dimension, "write_pgm needs d * d values");
  }
  std::ofstream os = open_out(path, std::ios::binary);
  os << "P5\n" << d << ' ' << d << "\n255\n";
  for (double v : values) {
    const auto level = static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    os.put(static_cast<char>(level));
  }
  if (!os) fail(ErrorKind::Io, "failed writing " + path);
}

}  // namespace pegp::datagen
