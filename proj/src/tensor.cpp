#include "bdris/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bdris::ad {

namespace {

std::string shape_str(const Tensor& t) {
    std::ostringstream os;
    os << t.rows() << "x" << t.cols();
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
    }
}

void assert_finite(const Tensor& t, const char* op) {
    for (double v : t.data()) {
        if (!std::isfinite(v)) {
            throw DomainError(std::string(op) + ": non-finite value in output");
        }
    }
}

/// dst += src, initializing dst on first touch.
void accum(Tensor& dst, const Tensor& src) {
    if (dst.empty()) {
        dst = src.detached();
        return;
    }
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
}

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<const EMat>;

EMap emap(const Tensor& t) {
    return EMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

Tensor from_emat(const EMat& m) {
    Tensor out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
               std::vector<double>(m.data(), m.data() + m.size()));
    return out;
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data, NodeId node)
    : rows_(rows), cols_(cols), data_(std::move(data)), node_(node) {
    if (rows_ * cols_ != data_.size()) {
        throw ShapeError("Tensor: " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                         " shape does not match data length " + std::to_string(data_.size()));
    }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
    return Tensor(rows, cols, std::vector<double>(rows * cols, 0.0));
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
    return Tensor(rows, cols, std::vector<double>(rows * cols, value));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::row(std::initializer_list<double> v) {
    return Tensor(1, v.size(), std::vector<double>(v));
}

Tensor Tensor::col(std::initializer_list<double> v) {
    return Tensor(v.size(), 1, std::vector<double>(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> v) {
    return Tensor(rows, cols, std::vector<double>(v));
}

double Tensor::value() const {
    if (size() != 1) throw ContractError("Tensor::value: tensor is " + shape_str(*this));
    return data_[0];
}

const Tensor& Gradients::at(const Tensor& t) const {
    const Tensor* g = find(t);
    if (!g) throw ContractError("Gradients::at: no gradient recorded for this tensor");
    return *g;
}

const Tensor* Gradients::find(const Tensor& t) const {
    if (!t.tracked()) return nullptr;
    auto id = static_cast<std::size_t>(t.node());
    if (id >= by_node_.size() || by_node_[id].empty()) return nullptr;
    return &by_node_[id];
}

Tensor Tape::var(const Tensor& value) {
    Tensor out = value.detached();
    out.node_ = static_cast<NodeId>(records_.size());
    records_.push_back(Record{});
    return out;
}

Tensor Tape::emit(Tensor out, std::initializer_list<const Tensor*> parents, BackFn fn,
                  const char* op_name) {
    if (check_finite_) assert_finite(out, op_name);
    bool any_tracked = false;
    for (const Tensor* p : parents) {
        if (p->tracked()) any_tracked = true;
    }
    if (!any_tracked) return out;
    out.node_ = static_cast<NodeId>(records_.size());
    records_.push_back(Record{std::move(fn)});
    return out;
}

Gradients Tape::backward(const Tensor& loss) const {
    if (loss.size() != 1) throw ContractError("backward: loss must be scalar (1x1)");
    if (!loss.tracked()) throw ContractError("backward: loss is not tracked on this tape");
    Gradients grads;
    grads.by_node_.resize(records_.size());
    auto root = static_cast<std::size_t>(loss.node());
    grads.by_node_[root] = Tensor::scalar(1.0);
    for (std::size_t i = root + 1; i-- > 0;) {
        const Record& rec = records_[i];
        if (!rec.fn || grads.by_node_[i].empty()) continue;
        rec.fn(grads.by_node_[i], grads.by_node_);
    }
    return grads;
}

// ---- elementwise ----------------------------------------------------------

Tensor add(Tape& tp, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a.detached();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += b[k];
    NodeId pa = a.node(), pb = b.node();
    return tp.emit(
        std::move(out), {&a, &b},
        [pa, pb](const Tensor& g, std::vector<Tensor>& gs) {
            if (pa >= 0) accum(gs[pa], g);
            if (pb >= 0) accum(gs[pb], g);
        },
        "add");
}

Tensor sub(Tape& tp, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a.detached();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= b[k];
    NodeId pa = a.node(), pb = b.node();
    return tp.emit(
        std::move(out), {&a, &b},
        [pa, pb](const Tensor& g, std::vector<Tensor>& gs) {
            if (pa >= 0) accum(gs[pa], g);
            if (pb >= 0) {
                Tensor neg = g.detached();
                for (double& v : neg.data()) v = -v;
                accum(gs[pb], neg);
            }
        },
        "sub");
}

Tensor mul(Tape& tp, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a.detached();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= b[k];
    NodeId pa = a.node(), pb = b.node();
    Tensor av = a.detached(), bv = b.detached();
    return tp.emit(
        std::move(out), {&a, &b},
        [pa, pb, av, bv](const Tensor& g, std::vector<Tensor>& gs) {
            if (pa >= 0) {
                Tensor ga = g.detached();
                for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= bv[k];
                accum(gs[pa], ga);
            }
            if (pb >= 0) {
                Tensor gb = g.detached();
                for (std::size_t k = 0; k < gb.size(); ++k) gb[k] *= av[k];
                accum(gs[pb], gb);
            }
        },
        "mul");
}

Tensor affine(Tape& tp, const Tensor& a, double scale, double shift) {
    Tensor out = a.detached();
    for (double& v : out.data()) v = scale * v + shift;
    NodeId pa = a.node();
    return tp.emit(
        std::move(out), {&a},
        [pa, scale](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = g.detached();
            for (double& v : ga.data()) v *= scale;
            accum(gs[pa], ga);
        },
        "affine");
}

namespace {

template <typename F, typename DF>
Tensor unary_op(Tape& tp, const Tensor& a, F f, DF df, const char* name) {
    Tensor out = a.detached();
    for (double& v : out.data()) v = f(v);
    NodeId pa = a.node();
    Tensor av = a.detached();
    return tp.emit(
        std::move(out), {&a},
        [pa, av, df](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = g.detached();
            for (std::size_t k = 0; k < ga.size(); ++k) ga[k] *= df(av[k]);
            accum(gs[pa], ga);
        },
        name);
}

}  // namespace

Tensor relu(Tape& tp, const Tensor& a) {
    return unary_op(
        tp, a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x) { return x > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor sigmoid(Tape& tp, const Tensor& a) {
    auto f = [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); };
    return unary_op(
        tp, a, f, [f](double x) { double s = f(x); return s * (1.0 - s); }, "sigmoid");
}

Tensor abs_val(Tape& tp, const Tensor& a) {
    return unary_op(
        tp, a, [](double x) { return std::fabs(x); },
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }, "abs");
}

Tensor sqrt_el(Tape& tp, const Tensor& a) {
    for (double v : a.data()) {
        if (v < 0.0) throw DomainError("sqrt: negative input");
    }
    return unary_op(
        tp, a, [](double x) { return std::sqrt(x); },
        [](double x) { return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0; }, "sqrt");
}

Tensor recip(Tape& tp, const Tensor& a) {
    for (double v : a.data()) {
        if (v == 0.0) throw DomainError("recip: division by zero");
    }
    return unary_op(
        tp, a, [](double x) { return 1.0 / x; }, [](double x) { return -1.0 / (x * x); },
        "recip");
}

// ---- linear algebra --------------------------------------------------------

Tensor matmul(Tape& tp, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a) + " * " +
                         shape_str(b));
    }
    const std::size_t m = a.rows(), kk = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < kk; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.data()[k * n];
            double* orow = &out.data()[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    NodeId pa = a.node(), pb = b.node();
    Tensor av = a.detached(), bv = b.detached();
    return tp.emit(
        std::move(out), {&a, &b},
        [pa, pb, av, bv](const Tensor& g, std::vector<Tensor>& gs) {
            if (pa >= 0) {
                // dL/dA = G * B^T
                Tensor ga = Tensor::zeros(av.rows(), av.cols());
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) {
                        const double gij = g.at(i, j);
                        if (gij == 0.0) continue;
                        for (std::size_t k = 0; k < bv.rows(); ++k)
                            ga.at(i, k) += gij * bv.at(k, j);
                    }
                accum(gs[pa], ga);
            }
            if (pb >= 0) {
                // dL/dB = A^T * G
                Tensor gb = Tensor::zeros(bv.rows(), bv.cols());
                for (std::size_t i = 0; i < av.rows(); ++i)
                    for (std::size_t k = 0; k < av.cols(); ++k) {
                        const double aik = av.at(i, k);
                        if (aik == 0.0) continue;
                        for (std::size_t j = 0; j < g.cols(); ++j)
                            gb.at(k, j) += aik * g.at(i, j);
                    }
                accum(gs[pb], gb);
            }
        },
        "matmul");
}

Tensor transpose(Tape& tp, const Tensor& a) {
    Tensor out = Tensor::zeros(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    NodeId pa = a.node();
    return tp.emit(
        std::move(out), {&a},
        [pa](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor gt = Tensor::zeros(g.cols(), g.rows());
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) gt.at(j, i) = g.at(i, j);
            accum(gs[pa], gt);
        },
        "transpose");
}

Tensor softmax_rows(Tape& tp, const Tensor& a) {
    Tensor out = a.detached();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double mx = a.at(i, 0);
        for (std::size_t j = 1; j < a.cols(); ++j) mx = std::max(mx, a.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out.at(i, j) = std::exp(a.at(i, j) - mx);
            sum += out.at(i, j);
        }
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) /= sum;
    }
    NodeId pa = a.node();
    Tensor sv = out.detached();
    return tp.emit(
        std::move(out), {&a},
        [pa, sv](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = Tensor::zeros(g.rows(), g.cols());
            for (std::size_t i = 0; i < g.rows(); ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < g.cols(); ++j) dot += g.at(i, j) * sv.at(i, j);
                for (std::size_t j = 0; j < g.cols(); ++j)
                    ga.at(i, j) = sv.at(i, j) * (g.at(i, j) - dot);
            }
            accum(gs[pa], ga);
        },
        "softmax_rows");
}

// ---- reductions & broadcasts ----------------------------------------------

Tensor row_sum(Tape& tp, const Tensor& a) {
    Tensor out = Tensor::zeros(a.rows(), 1);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a.at(i, j);
        out.at(i, 0) = s;
    }
    NodeId pa = a.node();
    std::size_t cols = a.cols();
    return tp.emit(
        std::move(out), {&a},
        [pa, cols](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = Tensor::zeros(g.rows(), cols);
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < cols; ++j) ga.at(i, j) = g.at(i, 0);
            accum(gs[pa], ga);
        },
        "row_sum");
}

Tensor sum_all(Tape& tp, const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    NodeId pa = a.node();
    std::size_t r = a.rows(), c = a.cols();
    return tp.emit(
        Tensor::scalar(s), {&a},
        [pa, r, c](const Tensor& g, std::vector<Tensor>& gs) {
            accum(gs[pa], Tensor::full(r, c, g[0]));
        },
        "sum_all");
}

Tensor mean_rows(Tape& tp, const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor out = Tensor::zeros(1, n);
    std::vector<double> column(m);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) column[i] = a.at(i, j);
        // sorted accumulation: row permutations cannot perturb the sum
        std::sort(column.begin(), column.end());
        double s = 0.0;
        for (double v : column) s += v;
        out.at(0, j) = s / static_cast<double>(m);
    }
    NodeId pa = a.node();
    return tp.emit(
        std::move(out), {&a},
        [pa, m, n](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = Tensor::zeros(m, n);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga.at(i, j) = g.at(0, j) / static_cast<double>(m);
            accum(gs[pa], ga);
        },
        "mean_rows");
}

Tensor add_rowvec(Tape& tp, const Tensor& x, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != x.cols()) {
        throw ShapeError("add_rowvec: bias " + shape_str(b) + " does not broadcast over " +
                         shape_str(x));
    }
    Tensor out = x.detached();
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out.at(i, j) += b.at(0, j);
    NodeId px = x.node(), pb = b.node();
    return tp.emit(
        std::move(out), {&x, &b},
        [px, pb](const Tensor& g, std::vector<Tensor>& gs) {
            if (px >= 0) accum(gs[px], g);
            if (pb >= 0) {
                Tensor gb = Tensor::zeros(1, g.cols());
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < g.cols(); ++j) gb.at(0, j) += g.at(i, j);
                accum(gs[pb], gb);
            }
        },
        "add_rowvec");
}

Tensor mul_scalar(Tape& tp, const Tensor& x, const Tensor& s) {
    if (s.size() != 1) throw ShapeError("mul_scalar: scale must be 1x1, got " + shape_str(s));
    Tensor out = x.detached();
    for (double& v : out.data()) v *= s[0];
    NodeId px = x.node(), ps = s.node();
    Tensor xv = x.detached();
    double sv = s[0];
    return tp.emit(
        std::move(out), {&x, &s},
        [px, ps, xv, sv](const Tensor& g, std::vector<Tensor>& gs) {
            if (px >= 0) {
                Tensor gx = g.detached();
                for (double& v : gx.data()) v *= sv;
                accum(gs[px], gx);
            }
            if (ps >= 0) {
                double acc = 0.0;
                for (std::size_t k = 0; k < g.size(); ++k) acc += g[k] * xv[k];
                accum(gs[ps], Tensor::scalar(acc));
            }
        },
        "mul_scalar");
}

// ---- structure ops ---------------------------------------------------------

Tensor concat_cols(Tape& tp, const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("concat_cols: row counts differ, " + shape_str(a) + " vs " +
                         shape_str(b));
    }
    Tensor out = Tensor::zeros(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
    }
    NodeId pa = a.node(), pb = b.node();
    std::size_t ac = a.cols(), bc = b.cols();
    return tp.emit(
        std::move(out), {&a, &b},
        [pa, pb, ac, bc](const Tensor& g, std::vector<Tensor>& gs) {
            if (pa >= 0) {
                Tensor ga = Tensor::zeros(g.rows(), ac);
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < ac; ++j) ga.at(i, j) = g.at(i, j);
                accum(gs[pa], ga);
            }
            if (pb >= 0) {
                Tensor gb = Tensor::zeros(g.rows(), bc);
                for (std::size_t i = 0; i < g.rows(); ++i)
                    for (std::size_t j = 0; j < bc; ++j) gb.at(i, j) = g.at(i, ac + j);
                accum(gs[pb], gb);
            }
        },
        "concat_cols");
}

Tensor concat_rows(Tape& tp, const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("concat_rows: column counts differ, " + shape_str(a) + " vs " +
                         shape_str(b));
    }
    Tensor out = Tensor::zeros(a.rows() + b.rows(), a.cols());
    std::copy(a.data().begin(), a.data().end(), out.data().begin());
    std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<long>(a.size()));
    NodeId pa = a.node(), pb = b.node();
    std::size_t ar = a.rows(), br = b.rows(), c = a.cols();
    return tp.emit(
        std::move(out), {&a, &b},
        [pa, pb, ar, br, c](const Tensor& g, std::vector<Tensor>& gs) {
            if (pa >= 0) {
                Tensor ga(ar, c, std::vector<double>(g.data().begin(),
                                                     g.data().begin() + static_cast<long>(ar * c)));
                accum(gs[pa], ga);
            }
            if (pb >= 0) {
                Tensor gb(br, c, std::vector<double>(g.data().begin() + static_cast<long>(ar * c),
                                                     g.data().end()));
                accum(gs[pb], gb);
            }
        },
        "concat_rows");
}

Tensor slice(Tape& tp, const Tensor& a, std::size_t r0, std::size_t r1, std::size_t c0,
             std::size_t c1) {
    if (r1 > a.rows() || c1 > a.cols() || r0 > r1 || c0 > c1) {
        throw ShapeError("slice: range out of bounds for " + shape_str(a));
    }
    Tensor out = Tensor::zeros(r1 - r0, c1 - c0);
    for (std::size_t i = r0; i < r1; ++i)
        for (std::size_t j = c0; j < c1; ++j) out.at(i - r0, j - c0) = a.at(i, j);
    NodeId pa = a.node();
    std::size_t ar = a.rows(), ac = a.cols();
    return tp.emit(
        std::move(out), {&a},
        [pa, ar, ac, r0, c0](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = Tensor::zeros(ar, ac);
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) ga.at(r0 + i, c0 + j) = g.at(i, j);
            accum(gs[pa], ga);
        },
        "slice");
}

Tensor reshape(Tape& tp, const Tensor& a, std::size_t rows, std::size_t cols) {
    if (rows * cols != a.size()) {
        throw ShapeError("reshape: cannot view " + shape_str(a) + " as " + std::to_string(rows) +
                         "x" + std::to_string(cols));
    }
    Tensor out(rows, cols, a.data());
    NodeId pa = a.node();
    std::size_t ar = a.rows(), ac = a.cols();
    return tp.emit(
        std::move(out), {&a},
        [pa, ar, ac](const Tensor& g, std::vector<Tensor>& gs) {
            accum(gs[pa], Tensor(ar, ac, g.data()));
        },
        "reshape");
}

Tensor gather_rows(Tape& tp, const Tensor& a, const std::vector<std::size_t>& idx) {
    Tensor out = Tensor::zeros(idx.size(), a.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] >= a.rows()) throw ShapeError("gather_rows: index out of range");
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(r, j) = a.at(idx[r], j);
    }
    NodeId pa = a.node();
    std::size_t ar = a.rows(), ac = a.cols();
    auto indices = idx;
    return tp.emit(
        std::move(out), {&a},
        [pa, ar, ac, indices](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = Tensor::zeros(ar, ac);
            for (std::size_t r = 0; r < indices.size(); ++r)
                for (std::size_t j = 0; j < ac; ++j) ga.at(indices[r], j) += g.at(r, j);
            accum(gs[pa], ga);
        },
        "gather_rows");
}

Tensor diag_part(Tape& tp, const Tensor& a) {
    if (a.rows() != a.cols()) throw ShapeError("diag_part: matrix not square, " + shape_str(a));
    const std::size_t n = a.rows();
    Tensor out = Tensor::zeros(n, 1);
    for (std::size_t i = 0; i < n; ++i) out.at(i, 0) = a.at(i, i);
    NodeId pa = a.node();
    return tp.emit(
        std::move(out), {&a},
        [pa, n](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = Tensor::zeros(n, n);
            for (std::size_t i = 0; i < n; ++i) ga.at(i, i) = g.at(i, 0);
            accum(gs[pa], ga);
        },
        "diag_part");
}

Tensor tril_part(Tape& tp, const Tensor& a) {
    if (a.rows() != a.cols()) throw ShapeError("tril_part: matrix not square, " + shape_str(a));
    const std::size_t n = a.rows();
    Tensor out = Tensor::zeros(tril_count(n), 1);
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) out.at(tril_index(i, j), 0) = a.at(i, j);
    NodeId pa = a.node();
    return tp.emit(
        std::move(out), {&a},
        [pa, n](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = Tensor::zeros(n, n);
            for (std::size_t i = 1; i < n; ++i)
                for (std::size_t j = 0; j < i; ++j) ga.at(i, j) = g.at(tril_index(i, j), 0);
            accum(gs[pa], ga);
        },
        "tril_part");
}

namespace {

std::size_t sym_dim(const Tensor& diag, const Tensor& tril, const char* op) {
    const std::size_t n = diag.size();
    if (tril.size() != tril_count(n)) {
        throw ShapeError(std::string(op) + ": diag length " + std::to_string(n) +
                         " inconsistent with tril length " + std::to_string(tril.size()));
    }
    return n;
}

}  // namespace

Tensor sym_matrix(Tape& tp, const Tensor& diag, const Tensor& tril) {
    const std::size_t n = sym_dim(diag, tril, "sym_matrix");
    Tensor out = Tensor::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) out.at(i, i) = diag[i];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            out.at(i, j) = tril[tril_index(i, j)];
            out.at(j, i) = tril[tril_index(i, j)];
        }
    NodeId pd = diag.node(), pl = tril.node();
    return tp.emit(
        std::move(out), {&diag, &tril},
        [pd, pl, n](const Tensor& g, std::vector<Tensor>& gs) {
            if (pd >= 0) {
                Tensor gd = Tensor::zeros(n, 1);
                for (std::size_t i = 0; i < n; ++i) gd.at(i, 0) = g.at(i, i);
                accum(gs[pd], gd);
            }
            if (pl >= 0) {
                Tensor gl = Tensor::zeros(tril_count(n), 1);
                for (std::size_t i = 1; i < n; ++i)
                    for (std::size_t j = 0; j < i; ++j)
                        gl.at(tril_index(i, j), 0) = g.at(i, j) + g.at(j, i);
                accum(gs[pl], gl);
            }
        },
        "sym_matrix");
}

Tensor branch_matrix(Tape& tp, const Tensor& diag, const Tensor& tril) {
    const std::size_t n = sym_dim(diag, tril, "branch_matrix");
    Tensor out = Tensor::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) out.at(i, i) = diag[i];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double y = tril[tril_index(i, j)];
            out.at(i, j) = -y;
            out.at(j, i) = -y;
            out.at(i, i) += y;
            out.at(j, j) += y;
        }
    NodeId pd = diag.node(), pl = tril.node();
    return tp.emit(
        std::move(out), {&diag, &tril},
        [pd, pl, n](const Tensor& g, std::vector<Tensor>& gs) {
            if (pd >= 0) {
                Tensor gd = Tensor::zeros(n, 1);
                for (std::size_t i = 0; i < n; ++i) gd.at(i, 0) = g.at(i, i);
                accum(gs[pd], gd);
            }
            if (pl >= 0) {
                Tensor gl = Tensor::zeros(tril_count(n), 1);
                for (std::size_t i = 1; i < n; ++i)
                    for (std::size_t j = 0; j < i; ++j)
                        gl.at(tril_index(i, j), 0) =
                            g.at(i, i) + g.at(j, j) - g.at(i, j) - g.at(j, i);
                accum(gs[pl], gl);
            }
        },
        "branch_matrix");
}

Tensor mat_inverse(Tape& tp, const Tensor& a) {
    if (a.rows() != a.cols()) throw ShapeError("mat_inverse: matrix not square, " + shape_str(a));
    EMat m = emap(a);
    Eigen::PartialPivLU<EMat> lu(m);
    EMat inv = lu.inverse();
    if (!inv.allFinite()) throw SingularityError("mat_inverse: singular matrix");
    // 1-norm condition estimate; the inverse is available, so it is exact.
    double na = 0.0, ni = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        na = std::max(na, m.col(j).cwiseAbs().sum());
        ni = std::max(ni, inv.col(j).cwiseAbs().sum());
    }
    if (na * ni > 1e12) {
        throw SingularityError("mat_inverse: condition estimate " + std::to_string(na * ni) +
                               " exceeds 1e12");
    }
    Tensor out = from_emat(inv);
    NodeId pa = a.node();
    Tensor invv = out.detached();
    return tp.emit(
        std::move(out), {&a},
        [pa, invv](const Tensor& g, std::vector<Tensor>& gs) {
            // d(A^-1) = -A^-1 dA A^-1  =>  dL/dA = -(A^-1)^T G (A^-1)^T
            const std::size_t n = invv.rows();
            Tensor tmp = Tensor::zeros(n, n);  // G * inv^T
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < n; ++k) s += g.at(i, k) * invv.at(j, k);
                    tmp.at(i, j) = s;
                }
            Tensor ga = Tensor::zeros(n, n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < n; ++k) s += invv.at(k, i) * tmp.at(k, j);
                    ga.at(i, j) = -s;
                }
            accum(gs[pa], ga);
        },
        "mat_inverse");
}

Tensor logdet_spd(Tape& tp, const Tensor& a) {
    if (a.rows() != a.cols()) throw ShapeError("logdet_spd: matrix not square, " + shape_str(a));
    // Symmetrize so the factorization and the gradient agree entrywise.
    EMat m = 0.5 * (emap(a) + emap(a).transpose());
    Eigen::LLT<EMat> llt(m);
    if (llt.info() != Eigen::Success) {
        throw DomainError("logdet_spd: matrix is not positive definite");
    }
    double ld = 0.0;
    EMat lmat = llt.matrixL();
    for (Eigen::Index i = 0; i < lmat.rows(); ++i) ld += 2.0 * std::log(lmat(i, i));
    EMat inv = llt.solve(EMat::Identity(m.rows(), m.cols()));
    Tensor invt = from_emat(inv);
    NodeId pa = a.node();
    return tp.emit(
        Tensor::scalar(ld), {&a},
        [pa, invt](const Tensor& g, std::vector<Tensor>& gs) {
            Tensor ga = invt.detached();
            for (double& v : ga.data()) v *= g[0];
            accum(gs[pa], ga);
        },
        "logdet_spd");
}

Tensor stopgrad(Tape& tp, const Tensor& a) {
    (void)tp;
    return a.detached();
}

Tensor ste_identity(Tape& tp, const Tensor& x, const Tensor& forward_value) {
    require_same_shape(x, forward_value, "ste_identity");
    NodeId px = x.node();
    return tp.emit(
        forward_value.detached(), {&x},
        [px](const Tensor& g, std::vector<Tensor>& gs) { accum(gs[px], g); }, "ste_identity");
}

}  // namespace bdris::ad
