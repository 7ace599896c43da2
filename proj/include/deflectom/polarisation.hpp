#pragma once

// Polarisation states in the spherical basis.
//
// The spherical unit vectors are e_{+1} = -(x + iy)/sqrt(2), e_0 = z,
// e_{-1} = (x - iy)/sqrt(2) with respect to the quantisation axis z of the
// frame the state is used in. A field E = sum_q c_q e_q drives Delta m = q
// transitions with amplitude proportional to c_q.

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "deflectom/angular.hpp"
#include "deflectom/errors.hpp"

namespace deflectom {

enum class PolarisationMode { Pi0, Pi45, Pi90, Pi135, SigmaPlus, SigmaMinus, Elliptical };

inline const char* to_string(PolarisationMode m) {
  switch (m) {
    case PolarisationMode::Pi0: return "pi_0";
    case PolarisationMode::Pi45: return "pi_45";
    case PolarisationMode::Pi90: return "pi_90";
    case PolarisationMode::Pi135: return "pi_135";
    case PolarisationMode::SigmaPlus: return "sigma_plus";
    case PolarisationMode::SigmaMinus: return "sigma_minus";
    case PolarisationMode::Elliptical: return "elliptical";
  }
  return "?";
}

inline PolarisationMode polarisation_mode_from_string(const std::string& s) {
  for (auto m : {PolarisationMode::Pi0, PolarisationMode::Pi45, PolarisationMode::Pi90,
                 PolarisationMode::Pi135, PolarisationMode::SigmaPlus, PolarisationMode::SigmaMinus,
                 PolarisationMode::Elliptical})
    if (s == to_string(m)) return m;
  throw config_error("unknown polarisation mode '" + s + "'");
}

// Is the mode a pure deflection polarisation (linear or circular)?
inline bool is_pure_mode(PolarisationMode m) { return m != PolarisationMode::Elliptical; }
inline bool is_linear_mode(PolarisationMode m) {
  return m == PolarisationMode::Pi0 || m == PolarisationMode::Pi45 ||
         m == PolarisationMode::Pi90 || m == PolarisationMode::Pi135;
}
inline double linear_mode_angle(PolarisationMode m) {
  switch (m) {
    case PolarisationMode::Pi0: return 0.0;
    case PolarisationMode::Pi45: return kPi / 4.0;
    case PolarisationMode::Pi90: return kPi / 2.0;
    case PolarisationMode::Pi135: return 3.0 * kPi / 4.0;
    default: throw config_error("not a linear polarisation mode");
  }
}

struct PolarisationState {
  PolarisationMode mode = PolarisationMode::Elliptical;
  double waveplate_angle = 0.0;  // meaningful for Elliptical only
  // components[0] = e_{-1}, components[1] = e_0, components[2] = e_{+1}
  std::array<std::complex<double>, 3> components{};

  std::complex<double> e(int q) const { return components[q + 1]; }

  double norm2() const {
    double n = 0.0;
    for (const auto& c : components) n += std::norm(c);
    return n;
  }

  // Global phase convention: first nonzero component (in e_{-1}, e_0, e_{+1}
  // order) real and positive, so equality comparisons are well defined.
  void canonicalise() {
    const double n = std::sqrt(norm2());
    if (n == 0.0) throw config_error("polarisation state must be nonzero");
    for (auto& c : components) c /= n;
    for (const auto& c : components) {
      if (std::abs(c) > 1e-14) {
        const std::complex<double> phase = c / std::abs(c);
        for (auto& x : components) x /= phase;
        break;
      }
    }
  }

  static PolarisationState from_components(std::complex<double> e_minus, std::complex<double> e_zero,
                                           std::complex<double> e_plus,
                                           PolarisationMode mode = PolarisationMode::Elliptical) {
    PolarisationState p;
    p.mode = mode;
    p.components = {e_minus, e_zero, e_plus};
    p.canonicalise();
    return p;
  }

  // Components of a pure mode in its own laser frame: linear light is pi
  // (e_0) along the frame z-axis, circular light e_{+1}/e_{-1} along the
  // propagation z-axis.
  static PolarisationState pure_mode_in_laser_frame(PolarisationMode mode) {
    switch (mode) {
      case PolarisationMode::SigmaPlus: return from_components(0, 0, 1, mode);
      case PolarisationMode::SigmaMinus: return from_components(1, 0, 0, mode);
      case PolarisationMode::Elliptical:
        throw config_error("elliptical light is not a pure deflection mode");
      default: return from_components(0, 1, 0, mode);
    }
  }
};

// Output of a quarter-wave plate at angle theta acting on light linearly
// polarised along x (the pi_0 axis), propagating along +z. Jones calculus
// with the fast axis convention that theta = pi/4 yields sigma_plus.
// e_0 vanishes because the light propagates along the quantisation axis.
inline PolarisationState waveplate_polarisation(double theta) {
  if (!std::isfinite(theta)) throw config_error("waveplate angle must be finite");
  const double c = std::cos(theta), s = std::sin(theta);
  // E = R(theta) diag(1, -i) R(-theta) (1, 0)^T
  const std::complex<double> i1(0.0, 1.0);
  const std::complex<double> ex = c * c - i1 * s * s;
  const std::complex<double> ey = s * c * (1.0 + i1);
  const std::complex<double> e_plus = -(ex - i1 * ey) / std::sqrt(2.0);
  const std::complex<double> e_minus = (ex + i1 * ey) / std::sqrt(2.0);
  PolarisationState p = PolarisationState::from_components(e_minus, 0.0, e_plus);
  p.mode = PolarisationMode::Elliptical;
  p.waveplate_angle = theta;
  return p;
}

// Cartesian field vector sum_q c_q e_q for transversality checks.
inline Eigen::Vector3cd cartesian_field(const PolarisationState& p) {
  const std::complex<double> i1(0.0, 1.0);
  const Eigen::Vector3cd e_plus(-1.0 / std::sqrt(2.0), -i1 / std::sqrt(2.0), 0.0);
  const Eigen::Vector3cd e_minus(1.0 / std::sqrt(2.0), -i1 / std::sqrt(2.0), 0.0);
  const Eigen::Vector3cd e_zero(0.0, 0.0, 1.0);
  return p.e(-1) * e_minus + p.e(0) * e_zero + p.e(+1) * e_plus;
}

}  // namespace deflectom
