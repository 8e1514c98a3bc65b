#include "gradspin/lattice.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace gradspin {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

Torus::Torus(std::size_t n) : n_(n) {
  if (n < 2) throw std::invalid_argument("torus needs at least 2 sites");
}

std::size_t Torus::neighbor(std::size_t x, int dir) const {
  if (x >= n_) throw std::out_of_range("site index outside torus");
  if (dir == 1) return x + 1 == n_ ? 0 : x + 1;
  if (dir == -1) return x == 0 ? n_ - 1 : x - 1;
  throw std::invalid_argument("direction must be +1 or -1");
}

ConfigKind kind_of(const Configuration& config) noexcept {
  return std::holds_alternative<EnergyConfig>(config) ? ConfigKind::energy
                                                      : ConfigKind::particle;
}

std::size_t size_of(const Configuration& config) noexcept {
  return std::visit([](const auto& c) { return c.values.size(); }, config);
}

void validate(const Configuration& config) {
  std::visit(
      [](const auto& c) {
        for (std::size_t x = 0; x < c.values.size(); ++x) {
          const double v = static_cast<double>(c.values[x]);
          if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(
                fmt::format("configuration entry {} is {} (must be finite and >= 0)", x, v));
          }
        }
      },
      config);
}

double total_mass(const EnergyConfig& config) noexcept {
  return std::accumulate(config.values.begin(), config.values.end(), 0.0);
}

std::int64_t total_mass(const ParticleConfig& config) noexcept {
  return std::accumulate(config.values.begin(), config.values.end(), std::int64_t{0});
}

double total_mass(const Configuration& config) noexcept {
  return std::visit([](const auto& c) { return static_cast<double>(total_mass(c)); }, config);
}

double value_at(const Configuration& config, std::size_t x) {
  return std::visit([x](const auto& c) { return static_cast<double>(c.values.at(x)); }, config);
}

std::vector<double> as_doubles(const Configuration& config) {
  return std::visit(
      [](const auto& c) { return std::vector<double>(c.values.begin(), c.values.end()); },
      config);
}

double discrete_laplacian(const Configuration& config, std::size_t x) {
  const std::size_t n = size_of(config);
  const Torus torus(n);
  const double nd = static_cast<double>(n);
  const double left = value_at(config, torus.neighbor(x, -1));
  const double right = value_at(config, torus.neighbor(x, +1));
  return nd * nd * (right + left - 2.0 * value_at(config, x));
}

void write_csv(std::ostream& out, const Configuration& config) {
  out << "site,value\n";
  std::visit(
      [&out](const auto& c) {
        for (std::size_t x = 0; x < c.values.size(); ++x) {
          if constexpr (std::is_same_v<std::decay_t<decltype(c)>, EnergyConfig>) {
            out << fmt::format("{},{:.17g}\n", x, c.values[x]);
          } else {
            out << fmt::format("{},{}\n", x, c.values[x]);
          }
        }
      },
      config);
}

Configuration read_csv(std::istream& in, ConfigKind kind) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("site,value", 0) != 0) {
    throw std::runtime_error("configuration CSV: missing 'site,value' header");
  }
  std::vector<std::string> cells;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("configuration CSV: malformed row");
    if (std::stoull(line.substr(0, comma)) != expected++) {
      throw std::runtime_error("configuration CSV: sites must be listed in order");
    }
    cells.push_back(line.substr(comma + 1));
  }
  Configuration config;
  if (kind == ConfigKind::energy) {
    EnergyConfig c;
    for (const auto& s : cells) c.values.push_back(std::stod(s));
    config = std::move(c);
  } else {
    ParticleConfig c;
    for (const auto& s : cells) c.values.push_back(std::stoll(s));
    config = std::move(c);
  }
  validate(config);
  return config;
}

namespace {

constexpr std::array<char, 4> kMagic{'G', 'S', 'P', 'N'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("snapshot: truncated input");
  }
  return v;
}

}  // namespace

void write_snapshot(std::ostream& out, const Configuration& config) {
  out.write(kMagic.data(), kMagic.size());
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(size_of(config)));
  put(out, static_cast<std::uint8_t>(kind_of(config)));
  const std::array<char, 7> pad{};
  out.write(pad.data(), pad.size());
  std::visit(
      [&out](const auto& c) {
        out.write(reinterpret_cast<const char*>(c.values.data()),
                  static_cast<std::streamsize>(c.values.size() * 8));
      },
      config);
}

Configuration read_snapshot(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("snapshot: bad magic");
  }
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("snapshot: unknown version");
  const auto n = get<std::uint64_t>(in);
  const auto kind = get<std::uint8_t>(in);
  std::array<char, 7> pad{};
  in.read(pad.data(), pad.size());
  if (kind > 1) throw std::runtime_error("snapshot: unknown kind");
  Configuration config;
  if (kind == 0) {
    EnergyConfig c;
    c.values.resize(n);
    if (!in.read(reinterpret_cast<char*>(c.values.data()), static_cast<std::streamsize>(n * 8))) {
      throw std::runtime_error("snapshot: truncated payload");
    }
    config = std::move(c);
  } else {
    ParticleConfig c;
    c.values.resize(n);
    if (!in.read(reinterpret_cast<char*>(c.values.data()), static_cast<std::streamsize>(n * 8))) {
      throw std::runtime_error("snapshot: truncated payload");
    }
    config = std::move(c);
  }
  validate(config);
  return config;
}

}  // namespace gradspin
