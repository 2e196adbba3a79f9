#pragma once

#include "nmatch/tensor.hpp"

namespace nmatch {

struct EigenResult {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // column i is the eigenvector of values[i],
                                // stored row-major n x n, orthonormal
};

// Cyclic Jacobi on a symmetric matrix (row-major, n x n). Throws
// std::domain_error if the input is asymmetric beyond `sym_tol`.
EigenResult jacobi_eigen(const std::vector<double>& a, int n,
                         double sym_tol = 1e-9);

// Tensor wrapper over jacobi_eigen (no gradient).
// Returns (eigenvalues [n], eigenvectors [n,n] with columns as vectors).
std::pair<Tensor, Tensor> self_adjoint_eigen(const Tensor& a);

// Unit eigenvector of the smallest eigenvalue of a symmetric matrix, sign
// fixed so the first nonzero entry is positive. Differentiable with respect
// to the matrix entries (standard eigenvector perturbation).
Tensor smallest_eigvec(const Tensor& a);

}  // namespace nmatch
