#include "bdris/complex_ops.hpp"

#include <cmath>

namespace bdris::ad {

ComplexMatrix::ComplexMatrix(Tensor real, Tensor imag) : re(std::move(real)), im(std::move(imag)) {
    if (re.rows() != im.rows() || re.cols() != im.cols()) {
        throw ShapeError("ComplexMatrix: re/im shapes differ");
    }
}

ComplexMatrix ComplexMatrix::zeros(std::size_t rows, std::size_t cols) {
    return {Tensor::zeros(rows, cols), Tensor::zeros(rows, cols)};
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    return {Tensor::identity(n), Tensor::zeros(n, n)};
}

ComplexMatrix cadd(Tape& tp, const ComplexMatrix& a, const ComplexMatrix& b) {
    return {add(tp, a.re, b.re), add(tp, a.im, b.im)};
}

ComplexMatrix csub(Tape& tp, const ComplexMatrix& a, const ComplexMatrix& b) {
    return {sub(tp, a.re, b.re), sub(tp, a.im, b.im)};
}

ComplexMatrix cmatmul(Tape& tp, const ComplexMatrix& a, const ComplexMatrix& b) {
    // (ar + j ai)(br + j bi) = (ar br - ai bi) + j (ar bi + ai br)
    Tensor re = sub(tp, matmul(tp, a.re, b.re), matmul(tp, a.im, b.im));
    Tensor im = add(tp, matmul(tp, a.re, b.im), matmul(tp, a.im, b.re));
    return {std::move(re), std::move(im)};
}

ComplexMatrix cscale(Tape& tp, const ComplexMatrix& a, std::complex<double> c) {
    Tensor re = sub(tp, affine(tp, a.re, c.real(), 0.0), affine(tp, a.im, c.imag(), 0.0));
    Tensor im = add(tp, affine(tp, a.re, c.imag(), 0.0), affine(tp, a.im, c.real(), 0.0));
    return {std::move(re), std::move(im)};
}

ComplexMatrix ctranspose(Tape& tp, const ComplexMatrix& a) {
    return {transpose(tp, a.re), transpose(tp, a.im)};
}

ComplexMatrix cadjoint(Tape& tp, const ComplexMatrix& a) {
    return {transpose(tp, a.re), affine(tp, transpose(tp, a.im), -1.0, 0.0)};
}

ComplexMatrix cslice_rows(Tape& tp, const ComplexMatrix& a, std::size_t r0, std::size_t r1) {
    return {slice(tp, a.re, r0, r1, 0, a.cols()), slice(tp, a.im, r0, r1, 0, a.cols())};
}

ComplexMatrix cslice_cols(Tape& tp, const ComplexMatrix& a, std::size_t c0, std::size_t c1) {
    return {slice(tp, a.re, 0, a.rows(), c0, c1), slice(tp, a.im, 0, a.rows(), c0, c1)};
}

ComplexMatrix from_susceptance(Tape& tp, const Tensor& b) {
    (void)tp;
    return {Tensor::zeros(b.rows(), b.cols()), b};
}

namespace {

/// [[re, -im], [im, re]]
Tensor embed(Tape& tp, const ComplexMatrix& a) {
    Tensor top = concat_cols(tp, a.re, affine(tp, a.im, -1.0, 0.0));
    Tensor bottom = concat_cols(tp, a.im, a.re);
    return concat_rows(tp, top, bottom);
}

}  // namespace

ComplexMatrix complex_inverse(Tape& tp, const ComplexMatrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("complex_inverse: matrix not square");
    const std::size_t n = a.rows();
    Tensor minv = mat_inverse(tp, embed(tp, a));
    return {slice(tp, minv, 0, n, 0, n), slice(tp, minv, n, 2 * n, 0, n)};
}

Tensor logdet_hermitian_pd(Tape& tp, const ComplexMatrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("logdet_hermitian_pd: matrix not square");
    // det(embed(A)) = det(A)^2 with det(A) real positive for Hermitian PD A,
    // hence log2 det(A) = logdet(embed) / (2 ln 2).
    Tensor ld = logdet_spd(tp, embed(tp, a));
    return affine(tp, ld, 0.5 / std::log(2.0), 0.0);
}

ComplexMatrix cayley_map(Tape& tp, const ComplexMatrix& y, double y0) {
    if (y.rows() != y.cols()) throw ShapeError("cayley_map: matrix not square");
    ComplexMatrix eye = ComplexMatrix::identity(y.rows());
    ComplexMatrix scaled{affine(tp, eye.re, y0, 0.0), eye.im};
    ComplexMatrix plus = cadd(tp, scaled, y);
    ComplexMatrix minus = csub(tp, scaled, y);
    return cmatmul(tp, complex_inverse(tp, plus), minus);
}

Tensor frob_sq(Tape& tp, const ComplexMatrix& a) {
    Tensor re2 = sum_all(tp, mul(tp, a.re, a.re));
    Tensor im2 = sum_all(tp, mul(tp, a.im, a.im));
    return add(tp, re2, im2);
}

}  // namespace bdris::ad
