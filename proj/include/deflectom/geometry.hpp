#pragma once

// Reference frames.
//
// Natural frame: z along the propagation direction of the preparation laser,
// x along the atomic beam, y = z cross x. States are prepared and
// reconstructed in this frame.
//
// Laser frame of a deflection beam: for linear polarisation, z_L is the
// polarisation axis and x_L the propagation direction; for circular
// polarisation, z_L is the propagation direction and x_L the atomic beam
// direction. The density matrix transforms by the Euler rotation carrying
// the natural axes onto the laser axes.

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "deflectom/angular.hpp"
#include "deflectom/density_matrix.hpp"
#include "deflectom/errors.hpp"
#include "deflectom/polarisation.hpp"

namespace deflectom {

inline Eigen::Vector3d named_direction(const std::string& name) {
  if (name == "z") return Eigen::Vector3d::UnitZ();
  if (name == "y") return Eigen::Vector3d::UnitY();
  if (name == "x") return Eigen::Vector3d::UnitX();
  throw config_error("unknown beam direction '" + name + "' (expected x, y or z)");
}

// Linear polarisation axis for a deflection beam along k_hat. The angle is
// measured from the reference axis e1 (the atomic beam direction when
// possible) rotating towards -e2 with e2 = k_hat cross e1; this sign choice
// fixes which circular sense the 45-degree settings favour and is applied
// consistently everywhere.
inline Eigen::Vector3d linear_polarisation_axis(const Eigen::Vector3d& k_hat, double angle) {
  Eigen::Vector3d e1 = Eigen::Vector3d::UnitX();
  if (std::abs(k_hat.dot(e1)) > 1.0 - 1e-9) e1 = Eigen::Vector3d::UnitY();
  e1 = (e1 - k_hat * k_hat.dot(e1)).normalized();
  const Eigen::Vector3d e2 = k_hat.cross(e1);
  return std::cos(angle) * e1 - std::sin(angle) * e2;
}

struct LaserGeometry {
  Eigen::Vector3d propagation = Eigen::Vector3d::UnitZ();
  PolarisationMode mode = PolarisationMode::SigmaPlus;

  LaserGeometry() = default;
  LaserGeometry(const Eigen::Vector3d& k_hat, PolarisationMode m) : propagation(k_hat), mode(m) {
    if (std::abs(propagation.norm() - 1.0) > 1e-9)
      throw geometry_error("laser propagation direction must be a unit vector");
    if (!is_pure_mode(mode)) throw geometry_error("deflection laser needs a pure polarisation mode");
  }
};

// Rotation whose columns are the laser frame axes (x_L | y_L | z_L)
// expressed in natural coordinates.
inline Eigen::Matrix3d laser_frame_rotation(const LaserGeometry& g) {
  Eigen::Vector3d z_l, x_l;
  if (is_linear_mode(g.mode)) {
    z_l = linear_polarisation_axis(g.propagation, linear_mode_angle(g.mode));
    if (std::abs(z_l.dot(g.propagation)) > 1e-9)
      throw geometry_error("linear polarisation must be orthogonal to the propagation direction");
    x_l = g.propagation;
  } else {
    z_l = g.propagation;
    x_l = Eigen::Vector3d::UnitX();  // atomic beam direction
    if (std::abs(z_l.dot(x_l)) > 1.0 - 1e-9)
      throw geometry_error("circular deflection along the atomic beam leaves the laser frame x-axis undefined");
    x_l = (x_l - z_l * z_l.dot(x_l)).normalized();
  }
  const Eigen::Vector3d y_l = z_l.cross(x_l);
  Eigen::Matrix3d r;
  r.col(0) = x_l;
  r.col(1) = y_l;
  r.col(2) = z_l;
  return r;
}

inline EulerAngles natural_to_laser_angles(const LaserGeometry& g) {
  // rho^L = U(R)^dagger rho^N U(R) with R the frame rotation, i.e. an active
  // rotation by the inverse Euler angles.
  return euler_from_rotation(laser_frame_rotation(g)).inverse();
}

inline DensityMatrix natural_to_laser(const DensityMatrix& rho_n, const LaserGeometry& g) {
  if (rho_n.frame != Frame::Natural)
    throw frame_error("natural_to_laser: input must be in the natural frame");
  DensityMatrix out = rotate_density(rho_n, natural_to_laser_angles(g));
  out.frame = Frame::Laser;
  return out;
}

inline DensityMatrix laser_to_natural(const DensityMatrix& rho_l, const LaserGeometry& g) {
  if (rho_l.frame != Frame::Laser)
    throw frame_error("laser_to_natural: input must be in the laser frame");
  DensityMatrix out = rotate_density(rho_l, natural_to_laser_angles(g).inverse());
  out.frame = Frame::Natural;
  return out;
}

// Validates that an explicit polarisation is transverse to the propagation
// direction (|E . k| below tolerance).
inline void require_transverse(const PolarisationState& pol, const Eigen::Vector3d& k_hat) {
  const Eigen::Vector3cd field = cartesian_field(pol);
  if (std::abs(field.dot(k_hat.cast<std::complex<double>>())) > 1e-9)
    throw geometry_error("polarisation has a component along the propagation direction");
}

}  // namespace deflectom
