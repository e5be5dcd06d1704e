#include "cmvlab/cmv_core.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cmvlab/errors.hpp"

namespace cmvlab {

namespace {

void place_block(Eigen::MatrixXcd& m, const CoefficientSequence& seq, std::size_t k) {
  const auto i = static_cast<Eigen::Index>(k);
  if (k + 1 == seq.n) {
    m(i, i) = std::polar(1.0, -seq.eta);
    return;
  }
  const Complex a = seq.alphas[k];
  const double r = seq.rho(k);
  m(i, i) = std::conj(a);
  m(i, i + 1) = r;
  m(i + 1, i) = r;
  m(i + 1, i + 1) = -a;
}

}  // namespace

DenseUnitary build_truncation(const CoefficientSequence& seq) {
  seq.validate();
  const auto n = static_cast<Eigen::Index>(seq.n);
  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  m(0, 0) = 1.0;
  for (std::size_t k = 0; k < seq.n; ++k) place_block(k % 2 == 0 ? l : m, seq, k);
  return DenseUnitary{l * m};
}

PolyPair szego_evaluate(const CoefficientSequence& seq, Complex z, std::size_t k) {
  if (k >= seq.n) throw DomainError("szego_evaluate: degree must be at most n-1");
  PolyPair p;
  for (std::size_t j = 0; j < k; ++j) {
    const Complex a = seq.alphas[j];
    const Complex zphi = z * p.phi;
    const Complex next_phi = zphi - std::conj(a) * p.phi_star;
    p.phi_star = p.phi_star - a * zphi;
    p.phi = next_phi;
  }
  p.degree = k;
  return p;
}

Complex char_poly_eval(const CoefficientSequence& seq, Complex z) {
  const PolyPair p = szego_evaluate(seq, z, seq.n - 1);
  return z * p.phi - std::polar(1.0, -seq.eta) * p.phi_star;
}

std::vector<Complex> char_poly_coefficients(const CoefficientSequence& seq) {
  seq.validate();
  std::vector<Complex> phi{1.0};
  std::vector<Complex> phi_star{1.0};
  for (std::size_t j = 0; j + 1 < seq.n; ++j) {
    const Complex a = seq.alphas[j];
    std::vector<Complex> zphi(phi.size() + 1, 0.0);
    for (std::size_t i = 0; i < phi.size(); ++i) zphi[i + 1] = phi[i];
    std::vector<Complex> next_phi = zphi;
    std::vector<Complex> next_star(zphi.size(), 0.0);
    for (std::size_t i = 0; i < phi_star.size(); ++i) {
      next_phi[i] -= std::conj(a) * phi_star[i];
      next_star[i] = phi_star[i];
    }
    for (std::size_t i = 0; i < zphi.size(); ++i) next_star[i] -= a * zphi[i];
    phi = std::move(next_phi);
    phi_star = std::move(next_star);
  }
  std::vector<Complex> out(seq.n + 1, 0.0);
  const Complex boundary = std::polar(1.0, -seq.eta);
  for (std::size_t i = 0; i < phi.size(); ++i) out[i + 1] += phi[i];
  for (std::size_t i = 0; i < phi_star.size(); ++i) out[i] -= boundary * phi_star[i];
  return out;
}

double unitarity_defect(const DenseUnitary& u) {
  const auto n = u.entries.rows();
  const Eigen::MatrixXcd d = u.entries.adjoint() * u.entries - Eigen::MatrixXcd::Identity(n, n);
  return d.cwiseAbs().maxCoeff();
}

std::size_t bandwidth(const DenseUnitary& u, double threshold) {
  std::size_t width = 0;
  const auto n = u.entries.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(u.entries(i, j)) > threshold) {
        width = std::max<std::size_t>(width, static_cast<std::size_t>(std::abs(i - j)));
      }
    }
  }
  return width;
}

void write_matrix_csv(const DenseUnitary& u, std::ostream& out) {
  out << "row,col,re,im\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < u.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < u.entries.cols(); ++j) {
      const Complex v = u.entries(i, j);
      out << i << ',' << j << ',' << v.real() << ',' << v.imag() << '\n';
    }
  }
}

}  // namespace cmvlab
