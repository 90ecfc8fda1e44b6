#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace honeytopo {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = std::numbers::pi;

// Lengths are in units of the resonance wavelength, so k0 = 2*pi.
inline constexpr double k0 = 2.0 * pi;

/// Frequencies in units of the single-atom decay rate, lengths in wavelengths.
struct PhysicalParams {
  double a = 1.0 / 20.0;   ///< nearest-neighbour spacing
  double delta_B = 0.0;    ///< Zeeman shift
  double delta_AB = 0.0;   ///< sublattice detuning, +delta_AB on A and -delta_AB on B

  void validate() const {
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("lattice spacing a must be positive");
    if (!std::isfinite(delta_B) || !std::isfinite(delta_AB))
      throw std::invalid_argument("detunings must be finite");
  }

  /// Width of the ideal-lattice band gap, 2 ||delta_B| - |delta_AB||.
  double gap_width() const { return 2.0 * std::abs(std::abs(delta_B) - std::abs(delta_AB)); }
  bool topological() const { return std::abs(delta_B) > std::abs(delta_AB); }
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 p, Vec2 q) { return {p.x + q.x, p.y + q.y}; }
  friend Vec2 operator-(Vec2 p, Vec2 q) { return {p.x - q.x, p.y - q.y}; }
  friend Vec2 operator-(Vec2 p) { return {-p.x, -p.y}; }
  friend Vec2 operator*(double s, Vec2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Vec2, Vec2) = default;
  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 q) const { return x * q.x + y * q.y; }
};

// Errors. Everything the library throws derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryError : Error {
  using Error::Error;
};
struct SingularArgument : Error {
  using Error::Error;
};
struct CoincidentAtoms : Error {
  CoincidentAtoms(std::size_t m, std::size_t n)
      : Error("atoms " + std::to_string(m) + " and " + std::to_string(n) + " coincide"),
        first(m),
        second(n) {}
  explicit CoincidentAtoms(const std::string& what) : Error(what) {}
  std::size_t first = 0;
  std::size_t second = 0;
};
struct EigenError : Error {
  using Error::Error;
};
struct DegenerateSpectrum : Error {
  DegenerateSpectrum(std::size_t a, std::size_t b, const std::string& what)
      : Error(what), alpha(a), beta(b) {}
  std::size_t alpha;
  std::size_t beta;
};
struct IllConditionedProjector : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace honeytopo
