#pragma once

// Angular momentum machinery: Wigner d and D matrices, Clebsch-Gordan
// coefficients, and z-y-z Euler angle handling.
//
// Conventions used throughout the library (fixed here, nowhere else):
//   * Euler angles (alpha, beta, gamma) are z-y-z, describing the ACTIVE
//     rotation operator U = exp(-i alpha Jz) exp(-i beta Jy) exp(-i gamma Jz).
//   * D^f_{m'm}(alpha,beta,gamma) = <f m'| U |f m>
//                                 = exp(-i alpha m') d^f_{m'm}(beta) exp(-i gamma m).
//   * Matrix rows/columns are ordered m = -f ... +f (index m + f).

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

#include "deflectom/errors.hpp"

namespace deflectom {

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {

inline double factorial(int n) {
  static const double table[] = {
      1.0,        1.0,         2.0,          6.0,           24.0,
      120.0,      720.0,       5040.0,       40320.0,       362880.0,
      3628800.0,  39916800.0,  479001600.0,  6227020800.0,  87178291200.0,
      1307674368000.0, 20922789888000.0, 355687428096000.0, 6402373705728000.0,
      121645100408832000.0, 2432902008176640000.0};
  if (n < 0 || n > 20) throw std::domain_error("factorial argument out of range");
  return table[n];
}

// Angular momenta are carried as doubled integers so half-integer f is exact.
inline int doubled(double f, const char* name) {
  const double two_f = 2.0 * f;
  const int t = static_cast<int>(std::lround(two_f));
  if (std::abs(two_f - t) > 1e-9)
    throw std::domain_error(std::string(name) + " must be integer or half-integer");
  return t;
}

}  // namespace detail

// Single element d^f_{m_row, m_col}(beta) from the Wigner sum formula.
inline double wigner_small_d_element(double f, double m_row, double m_col, double beta) {
  const int f2 = detail::doubled(f, "f");
  const int mr2 = detail::doubled(m_row, "m_row");
  const int mc2 = detail::doubled(m_col, "m_col");
  if (f2 < 0 || f2 > 8) throw std::domain_error("wigner_small_d: supported range is f in [0, 4]");
  if (std::abs(mr2) > f2 || std::abs(mc2) > f2 || (f2 - mr2) % 2 != 0 || (f2 - mc2) % 2 != 0)
    throw std::domain_error("wigner_small_d: invalid magnetic quantum number");
  if (!std::isfinite(beta)) throw std::domain_error("wigner_small_d: beta must be finite");

  using detail::factorial;
  const int jpm = (f2 + mc2) / 2;   // f + m
  const int jmm = (f2 - mc2) / 2;   // f - m
  const int jpmp = (f2 + mr2) / 2;  // f + m'
  const int jmmp = (f2 - mr2) / 2;  // f - m'
  const int dm = (mr2 - mc2) / 2;   // m' - m

  const double norm = std::sqrt(factorial(jpmp) * factorial(jmmp) * factorial(jpm) * factorial(jmm));
  const double c = std::cos(0.5 * beta);
  const double s = std::sin(0.5 * beta);

  double sum = 0.0;
  const int k_min = std::max(0, -dm);
  const int k_max = std::min(jpm, jmmp);
  for (int k = k_min; k <= k_max; ++k) {
    const double denom = factorial(jpm - k) * factorial(k) * factorial(jmmp - k) * factorial(dm + k);
    const double sign = ((dm + k) % 2 == 0) ? 1.0 : -1.0;
    // Powers can hit 0^0 at beta = 0 or pi; std::pow handles that as 1.
    sum += sign * std::pow(c, f2 - dm - 2 * k) * std::pow(s, dm + 2 * k) / denom;
  }
  return norm * sum;
}

// Full (2f+1) x (2f+1) small-d matrix, rows m' = -f..f, columns m = -f..f.
inline Eigen::MatrixXd wigner_small_d(double f, double beta) {
  const int f2 = detail::doubled(f, "f");
  const int dim = f2 + 1;
  Eigen::MatrixXd d(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      d(r, c) = wigner_small_d_element(f, -f + r, -f + c, beta);
  return d;
}

struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  // Canonicalise to [0, 2*pi).
  EulerAngles canonical() const {
    auto wrap = [](double x) {
      if (!std::isfinite(x)) throw std::domain_error("Euler angle must be finite");
      x = std::fmod(x, 2.0 * kPi);
      return x < 0.0 ? x + 2.0 * kPi : x;
    };
    return {wrap(alpha), wrap(beta), wrap(gamma)};
  }

  // Angles of the inverse rotation: (a,b,g)^-1 = (-g,-b,-a).
  EulerAngles inverse() const { return EulerAngles{-gamma, -beta, -alpha}; }
};

// D^f(alpha, beta, gamma), unitary.
inline Eigen::MatrixXcd wigner_big_d(double f, const EulerAngles& angles) {
  const int f2 = detail::doubled(f, "f");
  const int dim = f2 + 1;
  const Eigen::MatrixXd d = wigner_small_d(f, angles.beta);
  Eigen::MatrixXcd out(dim, dim);
  const std::complex<double> i1(0.0, 1.0);
  for (int r = 0; r < dim; ++r) {
    const double mp = -f + r;
    for (int c = 0; c < dim; ++c) {
      const double m = -f + c;
      out(r, c) = std::exp(-i1 * angles.alpha * mp) * d(r, c) * std::exp(-i1 * angles.gamma * m);
    }
  }
  return out;
}

// z-y-z Euler angles of a proper rotation matrix (columns = rotated axes).
inline EulerAngles euler_from_rotation(const Eigen::Matrix3d& r) {
  if (std::abs(r.determinant() - 1.0) > 1e-9 ||
      (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw geometry_error("euler_from_rotation: input is not a proper rotation matrix");

  EulerAngles e;
  const double sb = std::hypot(r(2, 0), r(2, 1));
  e.beta = std::atan2(sb, r(2, 2));
  if (sb > 1e-12) {
    e.alpha = std::atan2(r(1, 2), r(0, 2));
    e.gamma = std::atan2(r(2, 1), -r(2, 0));
  } else if (r(2, 2) > 0.0) {  // beta = 0: only alpha + gamma fixed
    e.alpha = std::atan2(r(1, 0), r(0, 0));
    e.gamma = 0.0;
  } else {  // beta = pi: only alpha - gamma fixed
    e.alpha = std::atan2(-r(1, 0), -r(0, 0));
    e.gamma = 0.0;
  }
  return e.canonical();
}

inline Eigen::Matrix3d rotation_from_euler(const EulerAngles& e) {
  Eigen::Matrix3d rz1 = Eigen::AngleAxisd(e.alpha, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  Eigen::Matrix3d ry = Eigen::AngleAxisd(e.beta, Eigen::Vector3d::UnitY()).toRotationMatrix();
  Eigen::Matrix3d rz2 = Eigen::AngleAxisd(e.gamma, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return rz1 * ry * rz2;
}

// <f1 m1; f2 m2 | F M>, Racah closed form. Invalid combinations return 0.
inline double clebsch_gordan(double f1, double m1, double f2, double m2, double F, double M) {
  using detail::factorial;
  const int j1 = detail::doubled(f1, "f1"), mm1 = detail::doubled(m1, "m1");
  const int j2 = detail::doubled(f2, "f2"), mm2 = detail::doubled(m2, "m2");
  const int J = detail::doubled(F, "F"), MM = detail::doubled(M, "M");

  if (mm1 + mm2 != MM) return 0.0;
  if (std::abs(mm1) > j1 || std::abs(mm2) > j2 || std::abs(MM) > J) return 0.0;
  if (J < std::abs(j1 - j2) || J > j1 + j2) return 0.0;
  if ((j1 + mm1) % 2 != 0 || (j2 + mm2) % 2 != 0 || (J + MM) % 2 != 0) return 0.0;
  if ((j1 + j2 + J) % 2 != 0) return 0.0;  // triangle with half-integers must close

  auto f = [](int doubled_value) { return factorial(doubled_value / 2); };

  const double pre =
      std::sqrt((J + 1.0) * f(j1 + j2 - J) * f(j1 - j2 + J) * f(-j1 + j2 + J) / f(j1 + j2 + J + 2)) *
      std::sqrt(f(J + MM) * f(J - MM) * f(j1 - mm1) * f(j1 + mm1) * f(j2 - mm2) * f(j2 + mm2));

  double sum = 0.0;
  const int k_min = std::max({0, (j2 - J - mm1) / 2, (j1 - J + mm2) / 2});
  const int k_max = std::min({(j1 + j2 - J) / 2, (j1 - mm1) / 2, (j2 + mm2) / 2});
  for (int k = k_min; k <= k_max; ++k) {
    const double denom = factorial(k) * f(j1 + j2 - J - 2 * k) * f(j1 - mm1 - 2 * k) *
                         f(j2 + mm2 - 2 * k) * f(J - j2 + mm1 + 2 * k) * f(J - j1 - mm2 + 2 * k);
    sum += ((k % 2 == 0) ? 1.0 : -1.0) / denom;
  }
  return pre * sum;
}

}  // namespace deflectom
