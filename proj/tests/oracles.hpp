#pragma once

// Reference implementations used only by the test suites. They are kept
// independent of the library code paths they check: rotations come from
// matrix exponentials of angular momentum operators, Clebsch-Gordan
// coefficients from the ladder construction, and the two-level results from
// the analytic optical Bloch solutions.

#include <cmath>
#include <complex>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using complexd = std::complex<double>;

// Angular momentum operator Jy for spin f (rows/cols m = -f..f).
inline Eigen::MatrixXcd spin_jy(double f) {
  const int dim = static_cast<int>(std::lround(2 * f)) + 1;
  Eigen::MatrixXcd jp = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i + 1 < dim; ++i) {
    const double m = -f + i;
    jp(i + 1, i) = std::sqrt(f * (f + 1) - m * (m + 1));
  }
  const Eigen::MatrixXcd jm = jp.adjoint();
  return (jp - jm) / complexd(0.0, 2.0);
}

inline Eigen::MatrixXcd spin_jz(double f) {
  const int dim = static_cast<int>(std::lround(2 * f)) + 1;
  Eigen::MatrixXcd jz = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) jz(i, i) = -f + i;
  return jz;
}

// d^f(beta) = exp(-i beta Jy) via the spectral decomposition of Jy.
inline Eigen::MatrixXd wigner_small_d_expm(double f, double beta) {
  const Eigen::MatrixXcd jy = spin_jy(f);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(jy);
  Eigen::VectorXcd phases = (-complexd(0.0, 1.0) * beta * es.eigenvalues().cast<complexd>()).array().exp();
  Eigen::MatrixXcd d = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  return d.real();
}

// Clebsch-Gordan coefficients by explicit ladder construction in the
// product basis, Condon-Shortley phases.
class ClebschLadder {
 public:
  ClebschLadder(double f1, double f2) : f1_(f1), f2_(f2) {
    const int d1 = static_cast<int>(std::lround(2 * f1)) + 1;
    const int d2 = static_cast<int>(std::lround(2 * f2)) + 1;
    dim_ = d1 * d2;
    // product-state index: (i1, i2) -> i1 * d2 + i2, m = -f + i
    auto lower = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
      for (int i1 = 0; i1 < d1; ++i1)
        for (int i2 = 0; i2 < d2; ++i2) {
          const double c = v(i1 * d2 + i2);
          if (c == 0.0) continue;
          const double m1 = -f1 + i1, m2 = -f2 + i2;
          if (i1 > 0) out((i1 - 1) * d2 + i2) += c * std::sqrt(f1 * (f1 + 1) - m1 * (m1 - 1));
          if (i2 > 0) out(i1 * d2 + i2 - 1) += c * std::sqrt(f2 * (f2 + 1) - m2 * (m2 - 1));
        }
      return out;
    };

    for (double F = f1 + f2; F >= std::abs(f1 - f2) - 1e-9; F -= 1.0) {
      Eigen::VectorXd top;
      if (std::abs(F - (f1 + f2)) < 1e-9) {
        top = Eigen::VectorXd::Zero(dim_);
        top(dim_ - 1) = 1.0;  // |f1 f1> |f2 f2>
      } else {
        // Orthogonal complement of the already-built states within M = F.
        Eigen::VectorXd seed = Eigen::VectorXd::Zero(dim_);
        for (int i1 = d1 - 1; i1 >= 0; --i1) {
          const double m1 = -f1 + i1, m2 = F - m1;
          const int i2 = static_cast<int>(std::lround(m2 + f2));
          if (i2 < 0 || i2 >= d2) continue;
          seed(i1 * d2 + i2) = 1.0 + 0.1 * i1;  // generic vector in the subspace
        }
        for (int pass = 0; pass < 2; ++pass)  // repeated Gram-Schmidt for precision
          for (const auto& [key, vec] : states_) {
            if (std::abs(key.second - F) < 1e-9) seed -= vec.dot(seed) * vec;
          }
        top = seed;
      }
      top.normalize();
      // Condon-Shortley: coefficient at maximal m1 positive.
      [&] {
        for (int i1 = d1 - 1; i1 >= 0; --i1)
          for (int j2 = d2 - 1; j2 >= 0; --j2) {
            const double c = top(i1 * d2 + j2);
            if (std::abs(c) > 1e-12) {
              if (c < 0) top = -top;
              return;
            }
          }
      }();
      states_[{F, F}] = top;
      Eigen::VectorXd cur = top;
      for (double M = F - 1.0; M >= -F - 1e-9; M -= 1.0) {
        cur = lower(cur) / std::sqrt(F * (F + 1) - (M + 1) * M);
        states_[{F, M}] = cur;
      }
    }
  }

  double coefficient(double m1, double m2, double F, double M) const {
    auto it = states_.find({F, M});
    if (it == states_.end()) return 0.0;
    const int d2 = static_cast<int>(std::lround(2 * f2_)) + 1;
    const int i1 = static_cast<int>(std::lround(m1 + f1_));
    const int i2 = static_cast<int>(std::lround(m2 + f2_));
    if (i1 < 0 || i2 < 0 || i2 >= d2 || i1 * d2 + i2 >= dim_) return 0.0;
    return it->second(i1 * d2 + i2);
  }

 private:
  double f1_, f2_;
  int dim_;
  std::map<std::pair<double, double>, Eigen::VectorXd> states_;
};

// Steady-state excited population of a driven, damped two-level atom.
inline double two_level_steady_state(double rabi, double detuning, double gamma = 1.0) {
  return (rabi * rabi / 4.0) /
         (detuning * detuning + gamma * gamma / 4.0 + rabi * rabi / 2.0);
}

// Resonant (delta = 0) excited population vs time, atom starting in the
// ground state: damped Rabi oscillation with complex frequency
// mu = sqrt(rabi^2 - gamma^2/16).
inline double two_level_resonant_excited(double rabi, double t, double gamma = 1.0) {
  const double ss = rabi * rabi / (gamma * gamma + 2.0 * rabi * rabi);
  const complexd mu = std::sqrt(complexd(rabi * rabi - gamma * gamma / 16.0, 0.0));
  complexd osc;
  if (std::abs(mu) < 1e-12) {
    osc = 1.0 + 3.0 * gamma * t / 4.0;  // critically damped limit
  } else {
    osc = std::cos(mu * t) + (3.0 * gamma / (4.0 * mu)) * std::sin(mu * t);
  }
  return ss * (1.0 - std::exp(-3.0 * gamma * t / 4.0) * osc).real();
}

// Random dense density matrix (unit trace, PSD).
inline Eigen::MatrixXcd random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXcd a(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) a(r, c) = complexd(n(rng), n(rng));
  Eigen::MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace();
}

// Random state of the reconstructable family for F = 2: diagonal populations
// plus the Delta m = 4 coherence (m = +/-2) and the Delta m = 2 coherence
// between m = +/-1; no even/odd cross terms. Returned with unit trace.
inline Eigen::MatrixXcd random_nine_parameter_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd pop(5);
  for (int i = 0; i < 5; ++i) pop(i) = u(rng) + 0.02;
  pop /= pop.sum();
  // indices: m = -2, -1, 0, 1, 2 -> 0..4
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) rho(i, i) = pop(i);
  const double r24 = u(rng) * std::sqrt(pop(0) * pop(4));
  const double phi4 = 2.0 * M_PI * u(rng);
  rho(4, 0) = r24 * std::exp(complexd(0.0, phi4));
  rho(0, 4) = std::conj(rho(4, 0));
  const double r12 = u(rng) * std::sqrt(pop(1) * pop(3));
  const double phi2 = 2.0 * M_PI * u(rng);
  rho(3, 1) = r12 * std::exp(complexd(0.0, phi2));
  rho(1, 3) = std::conj(rho(3, 1));
  return rho;
}

// Uhlmann fidelity between density matrices.
inline double fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXcd sqrt_rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  Eigen::MatrixXcd inner = sqrt_rho * sigma * sqrt_rho;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es2(inner);
  const double tr = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return tr * tr;
}

}  // namespace oracles
