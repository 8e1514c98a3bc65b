#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace gradspin {

/// The discrete one-dimensional torus {0, ..., N-1}, N >= 2.
class Torus {
public:
  explicit Torus(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  /// (x + dir) mod N for dir in {+1, -1}.
  std::size_t neighbor(std::size_t x, int dir) const;

private:
  std::size_t n_;
};

/// Energy configuration: N non-negative reals.
struct EnergyConfig {
  std::vector<double> values;
};

/// Particle configuration: N non-negative integers.
struct ParticleConfig {
  std::vector<std::int64_t> values;
};

using Configuration = std::variant<EnergyConfig, ParticleConfig>;

enum class ConfigKind : std::uint8_t { energy = 0, particle = 1 };

ConfigKind kind_of(const Configuration& config) noexcept;
std::size_t size_of(const Configuration& config) noexcept;

/// Throws std::invalid_argument on negative or non-finite entries.
void validate(const Configuration& config);

double total_mass(const EnergyConfig& config) noexcept;
std::int64_t total_mass(const ParticleConfig& config) noexcept;
double total_mass(const Configuration& config) noexcept;

/// Value at site x as a double.
double value_at(const Configuration& config, std::size_t x);

/// Copies the occupation values into doubles.
std::vector<double> as_doubles(const Configuration& config);

/// N^2 (eta_{x+1} + eta_{x-1} - 2 eta_x) with periodic wrap; N = config size.
double discrete_laplacian(const Configuration& config, std::size_t x);

// ---------------------------------------------------------------------------
// Serialization.
//
// CSV: header "site,value", one row per site, LF endings. Energies are
// written with 17 significant digits so they round-trip exactly.
//
// Binary snapshot, little endian:
//   offset 0  char[4]  magic "GSPN"
//   offset 4  u32      format version (1)
//   offset 8  u64      N
//   offset 16 u8       kind (0 = energy/f64 payload, 1 = particle/i64 payload)
//   offset 17 u8[7]    zero padding
//   offset 24 N x 8 bytes payload
// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const Configuration& config);
Configuration read_csv(std::istream& in, ConfigKind kind);

void write_snapshot(std::ostream& out, const Configuration& config);
Configuration read_snapshot(std::istream& in);

}  // namespace gradspin
