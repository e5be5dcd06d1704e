#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "cmvlab/coeff_sampling.hpp"
#include "cmvlab/types.hpp"

namespace cmvlab {

/// Explicit n x n CMV truncation. Only oracle tests and resolvent
/// computations build one; statistics pipelines work with phases.
struct DenseUnitary {
  Eigen::MatrixXcd entries;

  std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }
};

/// Values of the orthogonal polynomial Phi_k and its reversal Phi*_k at z.
struct PolyPair {
  Complex phi{1.0, 0.0};
  Complex phi_star{1.0, 0.0};
  std::size_t degree = 0;
};

/// The n x n block of LM with alpha_{n-1} = e^{i eta}, rho_{n-1} = 0.
///
/// L = diag(Xi_0, Xi_2, ...), M = diag([1], Xi_1, Xi_3, ...) with
/// Xi_k = [[conj(alpha_k), rho_k], [rho_k, -alpha_k]]. The terminal block
/// Xi_{n-1} collapses to the 1 x 1 block [e^{-i eta}].
DenseUnitary build_truncation(const CoefficientSequence& seq);

/// Forward recurrence Phi_{k+1} = z Phi_k - conj(alpha_k) Phi*_k,
/// Phi*_{k+1} = Phi*_k - alpha_k z Phi_k from Phi_0 = Phi*_0 = 1.
/// Requires 0 <= k <= n-1.
PolyPair szego_evaluate(const CoefficientSequence& seq, Complex z, std::size_t k);

/// det(z - C) = z Phi_{n-1}(z) - e^{-i eta} Phi*_{n-1}(z).
Complex char_poly_eval(const CoefficientSequence& seq, Complex z);

/// Coefficients c_0..c_n (ascending powers) of det(z - C).
std::vector<Complex> char_poly_coefficients(const CoefficientSequence& seq);

/// max |U*U - I| over all entries.
double unitarity_defect(const DenseUnitary& u);

/// Number of nonzero diagonals above and below the main one (|entry| > threshold).
std::size_t bandwidth(const DenseUnitary& u, double threshold = 0.0);

/// Writes "row,col,re,im" lines for every entry.
void write_matrix_csv(const DenseUnitary& u, std::ostream& out);

}  // namespace cmvlab
