#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "bdris/errors.hpp"

namespace bdris::ad {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

inline std::size_t tril_count(std::size_t n) { return n * (n - 1) / 2; }

/// Flat index of the strict-lower-triangle entry (i, j), i > j, ordered
/// row-major by i then j. This ordering is shared by architecture bitstrings,
/// probability vectors, edge features, and susceptance assembly.
inline std::size_t tril_index(std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; }

/// Dense row-major fp64 tensor. Rank is fixed at 2 (vectors are n×1 or 1×n,
/// scalars 1×1). A tensor is either a constant or tracked on a Tape via its
/// node id.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data, NodeId node = kNoNode);

    static Tensor zeros(std::size_t rows, std::size_t cols);
    static Tensor full(std::size_t rows, std::size_t cols, double value);
    static Tensor identity(std::size_t n);
    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
    static Tensor row(std::initializer_list<double> v);
    static Tensor col(std::initializer_list<double> v);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    const std::vector<std::size_t> shape() const { return {rows_, cols_}; }

    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator[](std::size_t k) { return data_[k]; }
    double operator[](std::size_t k) const { return data_[k]; }
    double value() const;  // 1×1 convenience accessor

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    NodeId node() const { return node_; }
    bool tracked() const { return node_ != kNoNode; }
    /// Same values, no tape association.
    Tensor detached() const { return Tensor(rows_, cols_, data_); }

private:
    friend class Tape;
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
    NodeId node_ = kNoNode;
};

/// Result of a backward pass: per-node gradient tensors.
class Gradients {
public:
    /// Gradient of the loss w.r.t. a tracked tensor; throws if none reached it.
    const Tensor& at(const Tensor& t) const;
    /// nullptr when the tensor is untracked or received no gradient.
    const Tensor* find(const Tensor& t) const;

private:
    friend class Tape;
    std::vector<Tensor> by_node_;
};

/// Reverse-mode differentiation tape. Records one node per op output in
/// topological order; a single backward pass visits each node exactly once.
/// A tape is a single-threaded unit of work; distinct tapes may run on
/// distinct threads.
class Tape {
public:
    using BackFn = std::function<void(const Tensor& grad_out, std::vector<Tensor>& grad_by_node)>;

    /// Register a leaf (parameter or differentiable input). Returns a tracked copy.
    Tensor var(const Tensor& value);

    /// Backpropagate from a scalar loss. Throws ContractError for non-scalar
    /// or untracked losses.
    Gradients backward(const Tensor& loss) const;

    std::size_t node_count() const { return records_.size(); }

    /// When set, every op output is scanned for NaN/Inf (DomainError on hit).
    void set_check_finite(bool on) { check_finite_ = on; }
    bool check_finite() const { return check_finite_; }

    /// Op-author interface: finalize `out` as a new node if any parent is
    /// tracked; otherwise return it as a constant.
    Tensor emit(Tensor out, std::initializer_list<const Tensor*> parents, BackFn fn,
                const char* op_name);

private:
    struct Record {
        BackFn fn;  // empty for leaves
    };
    std::vector<Record> records_;
    bool check_finite_ = true;
};

// ---- primitive ops -------------------------------------------------------
// Each op computes the forward value and, when an input is tracked, records
// the exact reverse-mode rule. Callers never differentiate manually.

Tensor add(Tape&, const Tensor& a, const Tensor& b);
Tensor sub(Tape&, const Tensor& a, const Tensor& b);
Tensor mul(Tape&, const Tensor& a, const Tensor& b);  // elementwise
/// scale * a + shift, elementwise with scalar constants.
Tensor affine(Tape&, const Tensor& a, double scale, double shift);
Tensor matmul(Tape&, const Tensor& a, const Tensor& b);
Tensor transpose(Tape&, const Tensor& a);
Tensor relu(Tape&, const Tensor& a);     // subgradient at 0 is 0
Tensor sigmoid(Tape&, const Tensor& a);
Tensor abs_val(Tape&, const Tensor& a);  // subgradient at 0 is 0
Tensor sqrt_el(Tape&, const Tensor& a);
Tensor recip(Tape&, const Tensor& a);
Tensor softmax_rows(Tape&, const Tensor& a);
Tensor row_sum(Tape&, const Tensor& a);   // m×n -> m×1
Tensor sum_all(Tape&, const Tensor& a);   // -> 1×1
/// Column means over rows. Accumulates each column in sorted order so the
/// result is exactly invariant to row permutations.
Tensor mean_rows(Tape&, const Tensor& a);  // m×n -> 1×n
Tensor add_rowvec(Tape&, const Tensor& x, const Tensor& b);  // broadcast 1×n over rows
Tensor mul_scalar(Tape&, const Tensor& x, const Tensor& s);  // s is 1×1
Tensor concat_cols(Tape&, const Tensor& a, const Tensor& b);
Tensor concat_rows(Tape&, const Tensor& a, const Tensor& b);
Tensor slice(Tape&, const Tensor& a, std::size_t r0, std::size_t r1, std::size_t c0,
             std::size_t c1);  // half-open ranges
Tensor reshape(Tape&, const Tensor& a, std::size_t rows, std::size_t cols);
Tensor gather_rows(Tape&, const Tensor& a, const std::vector<std::size_t>& idx);
Tensor diag_part(Tape&, const Tensor& a);  // n×n -> n×1
Tensor tril_part(Tape&, const Tensor& a);  // n×n -> n(n-1)/2 × 1
/// Symmetric matrix from a diagonal vector and strict-lower-triangle vector.
Tensor sym_matrix(Tape&, const Tensor& diag, const Tensor& tril);
/// Nodal-admittance assembly from per-branch values: off-diagonal (i,j) gets
/// -tril[k(i,j)], diagonal (i,i) gets diag[i] + sum_j tril[k(i,j)].
Tensor branch_matrix(Tape&, const Tensor& diag, const Tensor& tril);
/// Square-matrix inverse. Throws SingularityError when the 1-norm condition
/// estimate exceeds 1e12.
Tensor mat_inverse(Tape&, const Tensor& a);
/// Natural log-determinant of a symmetric positive definite matrix via
/// Cholesky. Throws DomainError when the factorization fails.
Tensor logdet_spd(Tape&, const Tensor& a);
/// Identity forward, zero backward.
Tensor stopgrad(Tape&, const Tensor& a);
/// Straight-through surrogate: forward takes `forward_value` bit-exactly,
/// backward passes the upstream gradient to `x` unchanged (gradient 1).
Tensor ste_identity(Tape&, const Tensor& x, const Tensor& forward_value);

}  // namespace bdris::ad
