#pragma once

#include <Eigen/Dense>
#include <complex>

#include "bdris/complex_ops.hpp"
#include "bdris/tensor.hpp"

namespace bdris::linalg {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

// Conversions between the autodiff tensors (row-major fp64) and Eigen types.
MatrixXd to_eigen(const ad::Tensor& t);
ad::Tensor to_tensor(const MatrixXd& m);
MatrixXcd to_eigen(const ad::ComplexMatrix& m);
ad::ComplexMatrix to_cmatrix(const MatrixXcd& m);

/// Inverse square root of a symmetric positive definite matrix via
/// eigendecomposition. Exactly diagonal inputs take a closed-form path so the
/// decoupled case reproduces bit-exact results. Throws DomainError when the
/// matrix is not PD.
MatrixXd invsqrt_spd(const MatrixXd& m);

bool is_spd(const MatrixXd& m, double min_eig = 0.0);

double max_singular_value(const MatrixXcd& m);

}  // namespace bdris::linalg
