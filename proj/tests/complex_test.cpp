#include <doctest.h>

#include <complex>

#include "bdris/complex_ops.hpp"
#include "bdris/linalg.hpp"
#include "helpers.hpp"

using namespace bdris;
using namespace bdris::ad;
using testutil::gradcheck;
using testutil::random_tensor;

namespace {

ComplexMatrix random_cmatrix(Rng& rng, std::size_t r, std::size_t c) {
    return {testutil::random_tensor(rng, r, c), testutil::random_tensor(rng, r, c)};
}

double frob_dist_to_identity(Tape& tp, const ComplexMatrix& m) {
    ComplexMatrix d = csub(tp, m, ComplexMatrix::identity(m.rows()));
    return std::sqrt(frob_sq(tp, d).value());
}

}  // namespace

TEST_CASE("complex multiply matches std::complex arithmetic") {
    Rng rng(5);
    Tape tp;
    ComplexMatrix a = random_cmatrix(rng, 3, 4), b = random_cmatrix(rng, 4, 2);
    ComplexMatrix c = cmatmul(tp, a, b);
    auto ea = linalg::to_eigen(a), eb = linalg::to_eigen(b);
    linalg::MatrixXcd ec = ea * eb;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(c.at(i, j).real() == doctest::Approx(ec(i, j).real()).epsilon(1e-12));
            CHECK(c.at(i, j).imag() == doctest::Approx(ec(i, j).imag()).epsilon(1e-12));
        }
}

TEST_CASE("complex_inverse: identity, j*I and residual bound") {
    Tape tp;
    ComplexMatrix inv_eye = complex_inverse(tp, ComplexMatrix::identity(3));
    CHECK(frob_dist_to_identity(tp, inv_eye) == doctest::Approx(0.0).epsilon(1e-14));

    // (j I)^-1 = -j I
    ComplexMatrix ji{Tensor::zeros(3, 3), Tensor::identity(3)};
    ComplexMatrix inv = complex_inverse(tp, ji);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(inv.at(i, j).real() == doctest::Approx(0.0));
            CHECK(inv.at(i, j).imag() == doctest::Approx(i == j ? -1.0 : 0.0));
        }

    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        ComplexMatrix a = random_cmatrix(rng, 4, 4);
        for (std::size_t i = 0; i < 4; ++i) a.re.at(i, i) += 4.0;  // keep well-conditioned
        ComplexMatrix ainv = complex_inverse(tp, a);
        CHECK(frob_dist_to_identity(tp, cmatmul(tp, a, ainv)) <= 1e-10);
    }
}

TEST_CASE("complex_inverse gradient of Re{trace(A^-1)} matches finite differences") {
    Rng rng(23);
    Tensor re = random_tensor(rng, 4, 4), im = random_tensor(rng, 4, 4);
    for (std::size_t i = 0; i < 4; ++i) re.at(i, i) += 4.0;
    auto res = gradcheck(
        [](Tape& tp, std::vector<Tensor>& in) {
            ComplexMatrix inv = complex_inverse(tp, {in[0], in[1]});
            return sum_all(tp, diag_part(tp, inv.re));
        },
        {re, im}, 1e-5);
    CHECK_MESSAGE(res.ok, "max err ", res.max_abs);
}

TEST_CASE("logdet_hermitian_pd: identity, scaled identity, eigenvalue oracle") {
    Tape tp;
    CHECK(logdet_hermitian_pd(tp, ComplexMatrix::identity(4)).value() ==
          doctest::Approx(0.0).epsilon(1e-14));

    ComplexMatrix two{affine(tp, Tensor::identity(3), 2.0, 0.0), Tensor::zeros(3, 3)};
    CHECK(logdet_hermitian_pd(tp, two).value() == doctest::Approx(3.0).epsilon(1e-12));

    // Hermitian PD A = M M^H + n I; oracle: log2 det = sum log2(eigenvalues),
    // taken from a hand-rolled Jacobi solve of the real embedding.
    Rng rng(31);
    for (int rep = 0; rep < 5; ++rep) {
        ComplexMatrix m = random_cmatrix(rng, 4, 4);
        ComplexMatrix a = cmatmul(tp, m, cadjoint(tp, m));
        a.re = add(tp, a.re, affine(tp, Tensor::identity(4), 0.5, 0.0));

        Tensor embed = Tensor::zeros(8, 8);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                embed.at(i, j) = a.re.at(i, j);
                embed.at(i, j + 4) = -a.im.at(i, j);
                embed.at(i + 4, j) = a.im.at(i, j);
                embed.at(i + 4, j + 4) = a.re.at(i, j);
            }
        double oracle = 0.0;
        for (double lam : testutil::jacobi_eigenvalues(embed)) oracle += std::log2(lam);
        oracle *= 0.5;  // embedding doubles every eigenvalue of A

        double got = logdet_hermitian_pd(tp, a).value();
        CHECK(got == doctest::Approx(oracle).epsilon(1e-10));
    }
}

TEST_CASE("logdet_hermitian_pd gradient matches finite differences") {
    Rng rng(37);
    Tape tp0;
    ComplexMatrix m = random_cmatrix(rng, 3, 3);
    ComplexMatrix a0 = cmatmul(tp0, m, cadjoint(tp0, m));
    a0.re = add(tp0, a0.re, Tensor::identity(3));
    auto res = gradcheck(
        [](Tape& tp, std::vector<Tensor>& in) {
            return logdet_hermitian_pd(tp, {in[0], in[1]});
        },
        {a0.re.detached(), a0.im.detached()}, 1e-5);
    CHECK_MESSAGE(res.ok, "max err ", res.max_abs);
}

TEST_CASE("cayley map of a susceptance is unitary and symmetric") {
    Rng rng(41);
    Tape tp;
    for (int rep = 0; rep < 20; ++rep) {
        Tensor b = testutil::random_symmetric(rng, 5, 0.05);
        ComplexMatrix theta = cayley_map(tp, from_susceptance(tp, b), 0.02);
        ComplexMatrix gram = cmatmul(tp, cadjoint(tp, theta), theta);
        CHECK(frob_dist_to_identity(tp, gram) <= 1e-10);
        ComplexMatrix skew = csub(tp, theta, ctranspose(tp, theta));
        CHECK(std::sqrt(frob_sq(tp, skew).value()) <= 1e-12);
    }
}
