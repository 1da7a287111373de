#include "bdris/optimizer_net.hpp"

#include <cmath>

#include "bdris/errors.hpp"

namespace bdris {

using ad::ComplexMatrix;
using ad::Tape;
using ad::Tensor;
using ad::tril_count;

Codebook Codebook::init(std::size_t n_b, double tau) {
    if (n_b < 1) throw ConfigError("codebook: n_b must be >= 1");
    const std::size_t m = std::size_t{1} << (n_b - 1);
    const double lo = std::log(0.1 * kY0), hi = std::log(10.0 * kY0);
    Tensor mags = Tensor::zeros(1, m);
    for (std::size_t i = 0; i < m; ++i) {
        double t = m == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(m - 1);
        mags[i] = std::exp(lo + (hi - lo) * t);
    }
    Codebook cb;
    cb.mags = std::move(mags);
    cb.tau = tau;
    return cb;
}

OptimizerNet OptimizerNet::init(Variant v, const SystemConfig& sys, const NetConfig& cfg,
                                const DiscreteConfig& disc, Rng& rng) {
    OptimizerNet net;
    net.variant = v;
    net.n_i = sys.n_i;
    net.n_t = sys.n_t;
    net.n_r = sys.n_r();
    net.multiuser = sys.k > 1;

    const std::size_t feat = 2 * (net.n_t + net.n_r);
    net.node_embed.push_back(init_dense(feat, cfg.ne_width, rng));
    net.node_embed.push_back(init_dense(cfg.ne_width, cfg.ne_width, rng));
    std::size_t in = cfg.ne_width;
    for (std::size_t l = 0; l < cfg.gc_layers; ++l) {
        net.gc_w.push_back(init_dense(in, cfg.gc_width, rng, false).w);
        in = cfg.gc_width;
    }
    const std::size_t d_gc = in;
    in = 2 * net.n_i * (net.n_t + net.n_r);
    for (std::size_t l = 0; l < cfg.rfc_layers; ++l) {
        net.residual.push_back(init_dense(in, cfg.rfc_width, rng));
        in = cfg.rfc_width;
    }
    net.rc_diag_w = init_dense(in, net.n_i, rng, false).w;
    net.rc_low_w = init_dense(in, tril_count(net.n_i), rng, false).w;
    net.head_diag = init_dense(2 * d_gc + 1, net.n_i, rng);
    net.head_low = init_dense(2 * d_gc + 1, tril_count(net.n_i), rng);
    if (net.multiuser) {
        std::size_t pin = 2 * net.n_t * net.n_r;
        for (std::size_t l = 0; l + 1 < cfg.pfc_layers; ++l) {
            net.precoder.push_back(init_dense(pin, cfg.pfc_width, rng));
            pin = cfg.pfc_width;
        }
        net.precoder.push_back(init_dense(pin, 2 * net.n_t * net.n_r, rng));
    }
    if (v == Variant::Discrete) net.codebook = Codebook::init(disc.n_b, disc.tau);
    return net;
}

OptimizerNet tracked(Tape& tp, const OptimizerNet& net) {
    OptimizerNet view = net;
    view.for_each_param([&](const std::string&, Tensor& t) {
        if (!t.empty()) t = tp.var(t);
    });
    return view;
}

Tensor node_features(const ChannelRealization& real, Variant variant) {
    const bool coupled = variant == Variant::MutualCoupling;
    if (coupled != real.coupled) {
        throw ContractError("node_features: realization does not match variant " +
                            to_string(variant));
    }
    const ComplexMatrix& m_it = coupled ? real.s_it : real.h_it;
    const ComplexMatrix& m_ri = coupled ? real.s_ri : real.h_ri;
    const std::size_t n_i = m_it.rows(), n_t = m_it.cols(), n_r = m_ri.rows();
    Tensor x = Tensor::zeros(n_i, 2 * (n_t + n_r));
    for (std::size_t i = 0; i < n_i; ++i) {
        std::size_t col = 0;
        for (std::size_t j = 0; j < n_t; ++j) x.at(i, col++) = m_it.re.at(i, j);
        for (std::size_t j = 0; j < n_t; ++j) x.at(i, col++) = m_it.im.at(i, j);
        for (std::size_t j = 0; j < n_r; ++j) x.at(i, col++) = m_ri.re.at(j, i);
        for (std::size_t j = 0; j < n_r; ++j) x.at(i, col++) = m_ri.im.at(j, i);
    }
    return x;
}

Tensor gcn_forward(Tape& tp, const OptimizerNet& net, const Tensor& a, const Tensor& x_ne) {
    // normalized adjacency: A ∘ (d^-1/2 d^-T/2), degrees d_i = sum_j A_ij
    Tensor d = row_sum(tp, a);
    Tensor d_isqrt = recip(tp, sqrt_el(tp, d));
    Tensor norm = mul(tp, a, matmul(tp, d_isqrt, transpose(tp, d_isqrt)));
    Tensor x = x_ne;
    for (const Tensor& w : net.gc_w) {
        x = relu(tp, matmul(tp, matmul(tp, norm, x), w));
    }
    return x;
}

EdgeFeatures edge_features(Tape& tp, const Tensor& node_feats) {
    const std::size_t n = node_feats.rows();
    EdgeFeatures out;
    out.diag = concat_cols(tp, node_feats, node_feats);
    std::vector<std::size_t> rows_i, rows_j;
    rows_i.reserve(tril_count(n));
    rows_j.reserve(tril_count(n));
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            rows_i.push_back(i);
            rows_j.push_back(j);
        }
    out.low = concat_cols(tp, gather_rows(tp, node_feats, rows_i),
                          gather_rows(tp, node_feats, rows_j));
    return out;
}

ResidualFeatures residual_path(Tape& tp, const OptimizerNet& net, const Tensor& x_n) {
    Tensor h = reshape(tp, x_n, 1, x_n.size());
    for (const Dense& l : net.residual) {
        h = relu(tp, add_rowvec(tp, matmul(tp, h, l.w), l.b));
    }
    ResidualFeatures out;
    out.diag = transpose(tp, matmul(tp, h, net.rc_diag_w));
    out.low = transpose(tp, matmul(tp, h, net.rc_low_w));
    return out;
}

namespace {

/// diag([X, r] W) + b implemented as a rowwise dot product: output i is the
/// inner product of row i with column i of W.
Tensor rowwise_head(Tape& tp, const Tensor& feats, const Tensor& res, const Dense& head) {
    Tensor x = concat_cols(tp, feats, res);
    if (x.cols() != head.w.rows() || x.rows() != head.w.cols()) {
        throw ShapeError("rowwise_head: feature block does not match head weights");
    }
    Tensor prod = mul(tp, x, transpose(tp, head.w));
    return add(tp, row_sum(tp, prod), transpose(tp, head.b));
}

}  // namespace

Tensor quantize(Tape& tp, const Tensor& values, const Codebook& cb, QuantizeMode mode) {
    if (cb.mags.empty()) throw ContractError("quantize: empty codebook");
    if (cb.tau <= 0.0) throw ContractError("quantize: tau must be positive");
    const std::size_t n = values.size();
    const std::size_t m = cb.mags.size();
    // codeword row [+B_1..+B_m, -B_1..-B_m]
    Tensor words = concat_cols(tp, cb.mags, affine(tp, cb.mags, -1.0, 0.0));
    Tensor vcol = reshape(tp, values, n, 1);
    Tensor dist = abs_val(tp, sub(tp, matmul(tp, vcol, Tensor::full(1, 2 * m, 1.0)),
                                  matmul(tp, Tensor::full(n, 1, 1.0), words)));
    Tensor hard_vals = Tensor::zeros(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < 2 * m; ++k) {
            if (dist.at(i, k) < dist.at(i, best)) best = k;
        }
        hard_vals.at(i, 0) = words[best];
    }
    Tensor hard = ste_identity(tp, vcol, hard_vals);
    Tensor out;
    if (mode == QuantizeMode::Train) {
        Tensor s = softmax_rows(tp, affine(tp, dist, -1.0 / cb.tau, 0.0));
        Tensor soft = matmul(tp, s, transpose(tp, words));
        // forward-exact: soft - stopgrad(soft) vanishes in value
        out = add(tp, hard, sub(tp, soft, stopgrad(tp, soft)));
    } else {
        out = std::move(hard);
    }
    return reshape(tp, out, values.rows(), values.cols());
}

Regressed regress_matrix(Tape& tp, const OptimizerNet& net, const EdgeFeatures& edges,
                         const ResidualFeatures& res, const Tensor& a, const LossyConfig& lossy,
                         QuantizeMode mode) {
    Regressed out;
    Tensor vals_d = rowwise_head(tp, edges.diag, res.diag, net.head_diag);
    Tensor vals_l = rowwise_head(tp, edges.low, res.low, net.head_low);
    switch (net.variant) {
        case Variant::Ideal:
        case Variant::MutualCoupling:
            break;
        case Variant::Lossy: {
            // smooth range clamp into [c_min, c_max]
            const double span = lossy.c_max - lossy.c_min;
            vals_d = affine(tp, sigmoid(tp, vals_d), span, lossy.c_min);
            vals_l = affine(tp, sigmoid(tp, vals_l), span, lossy.c_min);
            break;
        }
        case Variant::Discrete:
            vals_d = quantize(tp, vals_d, net.codebook, mode);
            vals_l = quantize(tp, vals_l, net.codebook, mode);
            break;
    }
    Tensor masked_d = mul(tp, vals_d, diag_part(tp, a));
    Tensor masked_l = mul(tp, vals_l, tril_part(tp, a));
    out.matrix = sym_matrix(tp, masked_d, masked_l);
    out.vals_diag = std::move(vals_d);
    out.vals_low = std::move(vals_l);
    return out;
}

ComplexMatrix precoder_head(Tape& tp, const OptimizerNet& net, const ComplexMatrix& h_eff,
                            double p_t) {
    if (net.precoder.empty()) {
        throw ContractError("precoder_head: net has no precoder stack (single-user variant)");
    }
    const std::size_t n_t = net.n_t, n_r = net.n_r;
    Tensor x = concat_cols(tp, reshape(tp, h_eff.re, 1, n_t * n_r),
                           reshape(tp, h_eff.im, 1, n_t * n_r));
    for (std::size_t l = 0; l < net.precoder.size(); ++l) {
        const Dense& layer = net.precoder[l];
        x = add_rowvec(tp, matmul(tp, x, layer.w), layer.b);
        if (l + 1 < net.precoder.size()) x = relu(tp, x);
    }
    Tensor re = reshape(tp, slice(tp, x, 0, 1, 0, n_t * n_r), n_t, n_r);
    Tensor im = reshape(tp, slice(tp, x, 0, 1, n_t * n_r, 2 * n_t * n_r), n_t, n_r);
    Tensor norm2 = add(tp, sum_all(tp, mul(tp, re, re)), sum_all(tp, mul(tp, im, im)));
    if (norm2.value() == 0.0) {
        return ComplexMatrix::zeros(n_t, n_r);
    }
    Tensor scale = affine(tp, recip(tp, sqrt_el(tp, norm2)), std::sqrt(p_t), 0.0);
    return {mul_scalar(tp, re, scale), mul_scalar(tp, im, scale)};
}

OptimizerForward optimizer_forward(Tape& tp, const OptimizerNet& net, const Tensor& a,
                                   const ChannelRealization& real, const SystemConfig& sys,
                                   const LossyConfig& lossy, QuantizeMode mode) {
    Tensor x_n = node_features(real, net.variant);
    Tensor x = x_n;
    for (const Dense& l : net.node_embed) {
        x = relu(tp, add_rowvec(tp, matmul(tp, x, l.w), l.b));
    }
    Tensor node_out = gcn_forward(tp, net, a, x);
    EdgeFeatures edges = edge_features(tp, node_out);
    ResidualFeatures res = residual_path(tp, net, x_n);
    Regressed reg = regress_matrix(tp, net, edges, res, a, lossy, mode);

    OptimizerForward fwd;
    fwd.tunable = reg.matrix;
    switch (net.variant) {
        case Variant::Ideal:
        case Variant::Discrete: {
            fwd.theta = admittance_to_scattering(tp, from_susceptance(tp, reg.matrix));
            fwd.h_eff = effective_channel_ideal(tp, real, fwd.theta);
            break;
        }
        case Variant::MutualCoupling: {
            McChannel mc = effective_channel_mc(tp, real, reg.matrix);
            fwd.theta = std::move(mc.theta);
            fwd.h_eff = std::move(mc.h_eff);
            break;
        }
        case Variant::Lossy: {
            LossyResult lr = lossy_admittance_branches(tp, reg.vals_diag, reg.vals_low,
                                                       diag_part(tp, a), tril_part(tp, a), lossy);
            fwd.theta = std::move(lr.theta);
            fwd.h_eff = effective_channel_ideal(tp, real, fwd.theta);
            break;
        }
    }
    if (net.multiuser) {
        fwd.precoder = precoder_head(tp, net, fwd.h_eff, sys.p_t);
        fwd.objective = sum_rate(tp, fwd.precoder, fwd.h_eff, sys.n_k, sys.sigma2);
    } else {
        fwd.objective = channel_gain(tp, fwd.h_eff);
    }
    return fwd;
}

Tensor optimizer_loss(Tape& tp, const OptimizerForward& fwd) {
    return affine(tp, fwd.objective, -1.0, 0.0);
}

}  // namespace bdris
