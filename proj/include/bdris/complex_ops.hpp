#pragma once

#include <complex>

#include "bdris/tensor.hpp"

namespace bdris::ad {

/// Complex matrix carried as a (real, imag) pair of equally-shaped tensors.
/// All complex arithmetic is composed from real primitives, so reverse-mode
/// gradients flow without any dedicated complex calculus.
struct ComplexMatrix {
    Tensor re, im;

    ComplexMatrix() = default;
    ComplexMatrix(Tensor real, Tensor imag);

    std::size_t rows() const { return re.rows(); }
    std::size_t cols() const { return re.cols(); }
    std::complex<double> at(std::size_t i, std::size_t j) const {
        return {re.at(i, j), im.at(i, j)};
    }

    static ComplexMatrix zeros(std::size_t rows, std::size_t cols);
    static ComplexMatrix identity(std::size_t n);
};

ComplexMatrix cadd(Tape&, const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix csub(Tape&, const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix cmatmul(Tape&, const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix cscale(Tape&, const ComplexMatrix& a, std::complex<double> c);
ComplexMatrix ctranspose(Tape&, const ComplexMatrix& a);
ComplexMatrix cadjoint(Tape&, const ComplexMatrix& a);
ComplexMatrix cslice_rows(Tape&, const ComplexMatrix& a, std::size_t r0, std::size_t r1);
ComplexMatrix cslice_cols(Tape&, const ComplexMatrix& a, std::size_t c0, std::size_t c1);

/// Purely susceptive admittance Y = jB.
ComplexMatrix from_susceptance(Tape&, const Tensor& b);

/// Inverse of a square complex matrix, differentiated through the 2n×2n real
/// block embedding [[re, -im], [im, re]].
ComplexMatrix complex_inverse(Tape&, const ComplexMatrix& a);

/// log2 det(A) for Hermitian positive definite A. Computed as half the
/// log-determinant of the (symmetric PD) real block embedding.
Tensor logdet_hermitian_pd(Tape&, const ComplexMatrix& a);

/// (y0 I + Y)^-1 (y0 I - Y).
ComplexMatrix cayley_map(Tape&, const ComplexMatrix& y, double y0);

/// Squared Frobenius norm, sum |a_ij|^2.
Tensor frob_sq(Tape&, const ComplexMatrix& a);

}  // namespace bdris::ad
