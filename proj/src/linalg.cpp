#include "bdris/linalg.hpp"

#include <cmath>

#include "bdris/errors.hpp"

namespace bdris::linalg {

MatrixXd to_eigen(const ad::Tensor& t) {
    MatrixXd m(t.rows(), t.cols());
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at(i, j);
    return m;
}

ad::Tensor to_tensor(const MatrixXd& m) {
    ad::Tensor t = ad::Tensor::zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) t.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j);
    return t;
}

MatrixXcd to_eigen(const ad::ComplexMatrix& m) {
    MatrixXcd out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m.at(i, j);
    return out;
}

ad::ComplexMatrix to_cmatrix(const MatrixXcd& m) {
    auto rows = static_cast<std::size_t>(m.rows());
    auto cols = static_cast<std::size_t>(m.cols());
    ad::Tensor re = ad::Tensor::zeros(rows, cols), im = ad::Tensor::zeros(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            re.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j).real();
            im.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = m(i, j).imag();
        }
    return {std::move(re), std::move(im)};
}

MatrixXd invsqrt_spd(const MatrixXd& m) {
    if (m.rows() != m.cols()) throw ShapeError("invsqrt_spd: matrix not square");
    bool diagonal = true;
    for (Eigen::Index i = 0; i < m.rows() && diagonal; ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) != 0.0) {
                diagonal = false;
                break;
            }
    if (diagonal) {
        MatrixXd out = MatrixXd::Zero(m.rows(), m.cols());
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, i) <= 0.0) throw DomainError("invsqrt_spd: non-positive diagonal entry");
            out(i, i) = 1.0 / std::sqrt(m(i, i));
        }
        return out;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw DomainError("invsqrt_spd: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) <= 0.0) throw DomainError("invsqrt_spd: matrix is not positive definite");
        lam(i) = 1.0 / std::sqrt(lam(i));
    }
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

bool is_spd(const MatrixXd& m, double min_eig) {
    if (m.rows() != m.cols()) return false;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > min_eig;
}

double max_singular_value(const MatrixXcd& m) {
    Eigen::JacobiSVD<MatrixXcd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace bdris::linalg
