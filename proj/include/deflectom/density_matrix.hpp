#pragma once

// Density matrix of one hyperfine manifold, tagged with the reference frame
// it is expressed in. The matrix itself is kept at unit trace; losses to
// other manifolds are carried by population_scale.

#include <complex>
#include <string>

#include <Eigen/Dense>

#include "deflectom/angular.hpp"
#include "deflectom/errors.hpp"

namespace deflectom {

enum class Frame { Natural, Laser };

inline const char* to_string(Frame f) { return f == Frame::Natural ? "natural" : "laser"; }

struct DensityMatrix {
  int f = 0;                        // total angular momentum of the manifold
  Eigen::MatrixXcd elements;        // (2f+1) x (2f+1), rows/cols m = -f..f
  Frame frame = Frame::Natural;
  double population_scale = 1.0;    // total population held by this manifold

  int dim() const { return 2 * f + 1; }
  int index_of(int m) const { return m + f; }

  std::complex<double> rho(int m, int mp) const { return elements(index_of(m), index_of(mp)); }

  // Unnormalised matrix: population_scale * elements.
  Eigen::MatrixXcd scaled() const { return population_scale * elements; }

  static DensityMatrix pure(int f, int m, Frame frame = Frame::Natural) {
    DensityMatrix rho;
    rho.f = f;
    rho.frame = frame;
    rho.elements = Eigen::MatrixXcd::Zero(2 * f + 1, 2 * f + 1);
    rho.elements(m + f, m + f) = 1.0;
    return rho;
  }

  static DensityMatrix maximally_mixed(int f, Frame frame = Frame::Natural) {
    DensityMatrix rho;
    rho.f = f;
    rho.frame = frame;
    rho.elements = Eigen::MatrixXcd::Identity(2 * f + 1, 2 * f + 1) / double(2 * f + 1);
    return rho;
  }
};

inline double min_eigenvalue(const Eigen::MatrixXcd& hermitian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Checks the physicality invariants; throws std::invalid_argument on failure.
inline void validate(const DensityMatrix& rho, const std::string& context = "density matrix") {
  if (rho.f < 0) throw std::invalid_argument(context + ": f must be >= 0");
  if (rho.elements.rows() != rho.dim() || rho.elements.cols() != rho.dim())
    throw std::invalid_argument(context + ": wrong matrix dimension");
  if (rho.population_scale < 0.0)
    throw std::invalid_argument(context + ": population_scale must be >= 0");
  if (rho.population_scale == 0.0) return;  // empty manifold, elements unconstrained
  const double herm = (rho.elements - rho.elements.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-12) throw std::invalid_argument(context + ": not Hermitian");
  if (std::abs(rho.elements.trace().real() - 1.0) > 1e-12 || std::abs(rho.elements.trace().imag()) > 1e-12)
    throw std::invalid_argument(context + ": internal trace must be 1");
  if (min_eigenvalue(rho.elements) < -1e-10)
    throw std::invalid_argument(context + ": not positive semidefinite");
}

// Active rotation rho' = D(a,b,g) rho D(a,b,g)^dagger. Frame tag unchanged.
inline DensityMatrix rotate_density(const DensityMatrix& rho, const EulerAngles& angles) {
  const Eigen::MatrixXcd d = wigner_big_d(double(rho.f), angles);
  DensityMatrix out = rho;
  out.elements = d * rho.elements * d.adjoint();
  return out;
}

}  // namespace deflectom
