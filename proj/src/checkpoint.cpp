#include "pegp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "pegp/error.hpp"

namespace pegp::checkpoint {

namespace {

constexpr char kMagic[8] = {'P', 'E', 'G', 'P', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  void string32(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void tensor(const std::string& name, const Matrix& m) {
    put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    raw(name.data(), name.size());
    put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(m(r, c));
    }
  }
  std::vector<char> take() { return std::move(bytes_); }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<char>& bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  std::string string(std::size_t n) {
    const char* p = take(n);
    return {p, p + n};
  }
  std::pair<std::string, Matrix> tensor() {
    std::string name = string(get<std::uint16_t>());
    const auto rows = get<std::uint32_t>();
    const auto cols = get<std::uint32_t>();
    if (static_cast<std::uint64_t>(rows) * cols * sizeof(double) > bytes_.size() - pos_) truncated();
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get<double>();
    }
    return {std::move(name), std::move(m)};
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  const char* take(std::size_t n) {
    if (n > bytes_.size() - pos_) truncated();
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  [[noreturn]] void truncated() const { fail(ErrorKind::Io, origin_ + " is truncated"); }

  const std::vector<char>& bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

struct Named {
  std::string name;
  Matrix* value;
};

std::vector<Named> network_tensors(vae::Model& m) {
  return {{"encoder.w1", &m.encoder.w1}, {"encoder.b1", &m.encoder.b1}, {"encoder.w2", &m.encoder.w2},
          {"encoder.b2", &m.encoder.b2}, {"decoder.w1", &m.decoder.w1}, {"decoder.b1", &m.decoder.b1},
          {"decoder.w2", &m.decoder.w2}, {"decoder.b2", &m.decoder.b2}};
}

}  // namespace

std::vector<char> serialize(const vae::TrainState& state) {
  state.model.validate();
  const auto& prior = state.model.prior;
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(prior.kind == vae::KernelKind::Physics ? 0u : 1u);
  w.put<std::int64_t>(state.iteration);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(prior.quad_nodes));
  w.put<double>(prior.quad_tol);
  w.string32(prior.system ? prior.system->to_json() : std::string());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(prior.kernels.size()));
  for (const auto& k : prior.kernels) {
    w.put<double>(k.variance);
    w.put<double>(k.lengthscale);
  }
  const auto& adam = state.adam;
  w.put<std::int64_t>(adam.step);
  w.put<double>(adam.learning_rate);
  w.put<double>(adam.beta1);
  w.put<double>(adam.beta2);
  w.put<double>(adam.epsilon);

  vae::Model copy = state.model;
  const auto nets = network_tensors(copy);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(nets.size() + 2 * adam.first_moment.size()));
  for (const auto& t : nets) w.tensor(t.name, *t.value);
  for (std::size_t k = 0; k < adam.first_moment.size(); ++k) {
    w.tensor("adam.m." + std::to_string(k), adam.first_moment[k]);
  }
  for (std::size_t k = 0; k < adam.second_moment.size(); ++k) {
    w.tensor("adam.v." + std::to_string(k), adam.second_moment[k]);
  }
  return w.take();
}

vae::TrainState deserialize(const std::vector<char>& bytes, const std::string& origin) {
  Reader r(bytes, origin);
  if (r.string(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    fail(ErrorKind::Io, origin + " is not a checkpoint file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) fail(ErrorKind::Io, origin + " has unsupported version " + std::to_string(version));
  const auto kind = r.get<std::uint32_t>();
  if (kind > 1) fail(ErrorKind::Io, origin + " names an unknown kernel");

  vae::TrainState state;
  state.iteration = r.get<std::int64_t>();
  auto& prior = state.model.prior;
  prior.kind = kind == 0 ? vae::KernelKind::Physics : vae::KernelKind::SeBaseline;
  prior.quad_nodes = r.get<std::uint32_t>();
  prior.quad_tol = r.get<double>();
  const std::string system_json = r.string(r.get<std::uint32_t>());
  if (!system_json.empty()) prior.system = lti::LtiSystem::from_json(system_json);
  const auto kernel_count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < kernel_count; ++k) {
    const double variance = r.get<double>();
    const double lengthscale = r.get<double>();
    prior.kernels.push_back({variance, lengthscale});
  }
  auto& adam = state.adam;
  adam.step = r.get<std::int64_t>();
  adam.learning_rate = r.get<double>();
  adam.beta1 = r.get<double>();
  adam.beta2 = r.get<double>();
  adam.epsilon = r.get<double>();

  const auto tensor_count = r.get<std::uint32_t>();
  auto nets = network_tensors(state.model);
  if (tensor_count < nets.size() || (tensor_count - nets.size()) % 2 != 0) {
    fail(ErrorKind::Io, origin + " has an inconsistent tensor table");
  }
  for (const auto& t : nets) {
    auto [name, value] = r.tensor();
    if (name != t.name) fail(ErrorKind::Io, origin + ": expected tensor " + t.name + ", found " + name);
    *t.value = std::move(value);
  }
  const std::size_t moments = (tensor_count - nets.size()) / 2;
  for (int which = 0; which < 2; ++which) {
    auto& into = which == 0 ? adam.first_moment : adam.second_moment;
    for (std::size_t k = 0; k < moments; ++k) {
      auto [name, value] = r.tensor();
      const std::string expected = std::string(which == 0 ? "adam.m." : "adam.v.") + std::to_string(k);
      if (name != expected) fail(ErrorKind::Io, origin + ": expected tensor " + expected + ", found " + name);
      into.push_back(std::move(value));
    }
  }
  if (!r.done()) fail(ErrorKind::Io, origin + " has trailing bytes");
  state.model.validate();
  return state;
}

void save(const std::string& path, const vae::TrainState& state) {
  const std::vector<char> bytes = serialize(state);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::Io, "cannot write " + tmp);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) fail(ErrorKind::Io, "failed writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot move checkpoint into " + path + ": " + ec.message());
}

vae::TrainState load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::NotFound, "cannot open checkpoint " + path);
  const std::vector<char> bytes{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
  return deserialize(bytes, path);
}

}  // namespace pegp::checkpoint
