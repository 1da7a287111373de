#pragma once

#include <string>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/config.hpp"
#include "bdris/generator.hpp"

namespace bdris {

/// Sign-symmetric learnable codebook {±B_1, ..., ±B_m} with m = 2^(Nb-1).
/// Codewords are ordered [+B_1..+B_m, -B_1..-B_m]; nearest-codeword ties go to
/// the lowest index.
struct Codebook {
    ad::Tensor mags;  // 1 x 2^(Nb-1), positive
    double tau = 0.1;

    std::size_t words() const { return 2 * mags.size(); }
    /// Log-spaced magnitudes in [0.1*Y0, 10*Y0].
    static Codebook init(std::size_t n_b, double tau);
};

enum class QuantizeMode { Train, Eval };

/// Per-realization tunable-matrix regression: node embeddings, degree-
/// normalized graph convolutions over the architecture adjacency, edge
/// features, a residual FC path, variant-specific output heads, and the
/// precoder stack for multi-user rate maximization.
struct OptimizerNet {
    Variant variant = Variant::Ideal;
    std::size_t n_i = 0, n_t = 0, n_r = 0;
    bool multiuser = false;

    std::vector<Dense> node_embed;   // 2 layers
    std::vector<ad::Tensor> gc_w;    // graph-convolution weights, bias-free
    std::vector<Dense> residual;
    ad::Tensor rc_diag_w, rc_low_w;  // bias-free residual heads
    Dense head_diag, head_low;       // rowwise heads: W is (2d_gc+1) x n_out
    std::vector<Dense> precoder;     // multi-user only
    Codebook codebook;               // discrete only

    static OptimizerNet init(Variant v, const SystemConfig& sys, const NetConfig& cfg,
                             const DiscreteConfig& disc, Rng& rng);

    template <typename F>
    void for_each_param(F&& f) {
        std::size_t idx = 0;
        for (auto& l : node_embed) {
            f("opt/ne" + std::to_string(idx) + "/w", l.w);
            f("opt/ne" + std::to_string(idx) + "/b", l.b);
            ++idx;
        }
        idx = 0;
        for (auto& w : gc_w) f("opt/gc" + std::to_string(idx++) + "/w", w);
        idx = 0;
        for (auto& l : residual) {
            f("opt/rfc" + std::to_string(idx) + "/w", l.w);
            f("opt/rfc" + std::to_string(idx) + "/b", l.b);
            ++idx;
        }
        f("opt/rc_diag/w", rc_diag_w);
        f("opt/rc_low/w", rc_low_w);
        f("opt/head_diag/w", head_diag.w);
        f("opt/head_diag/b", head_diag.b);
        f("opt/head_low/w", head_low.w);
        f("opt/head_low/b", head_low.b);
        idx = 0;
        for (auto& l : precoder) {
            f("opt/pfc" + std::to_string(idx) + "/w", l.w);
            f("opt/pfc" + std::to_string(idx) + "/b", l.b);
            ++idx;
        }
        if (variant == Variant::Discrete) f("opt/codebook/mags", codebook.mags);
    }
};

OptimizerNet tracked(ad::Tape&, const OptimizerNet& net);

/// Node feature matrix [Re(H_IT), Im(H_IT), Re(H_RI^T), Im(H_RI^T)] columnwise
/// (transformed S blocks for coupled realizations). Constant, n_i x 2(n_t+n_r).
ad::Tensor node_features(const ChannelRealization& real, Variant variant);

/// N_GC layers of ReLU(D^-1/2 A D^-1/2 X W). The adjacency enters as real
/// values so straight-through gradients can flow into the generator.
ad::Tensor gcn_forward(ad::Tape&, const OptimizerNet& net, const ad::Tensor& a,
                       const ad::Tensor& x_ne);

struct EdgeFeatures {
    ad::Tensor diag;  // n x 2d, rows [x_i, x_i]
    ad::Tensor low;   // n(n-1)/2 x 2d, rows [x_i, x_j] for i > j in tril order
};
EdgeFeatures edge_features(ad::Tape&, const ad::Tensor& node_feats);

struct ResidualFeatures {
    ad::Tensor diag;  // n x 1
    ad::Tensor low;   // n(n-1)/2 x 1
};
ResidualFeatures residual_path(ad::Tape&, const OptimizerNet& net, const ad::Tensor& x_n);

struct Regressed {
    ad::Tensor vals_diag;  // n x 1, variant-processed, unmasked
    ad::Tensor vals_low;   // n(n-1)/2 x 1, variant-processed, unmasked
    ad::Tensor matrix;     // masked symmetric matrix (B, B_bar, C~ or quantized B)
};
Regressed regress_matrix(ad::Tape&, const OptimizerNet& net, const EdgeFeatures& edges,
                         const ResidualFeatures& res, const ad::Tensor& a,
                         const LossyConfig& lossy, QuantizeMode mode);

/// Hard nearest-codeword forward (L1 distance); in train mode the softmax
/// assignment is added and subtracted under stop-gradient so the forward
/// value stays exact while the backward pass sees the soft gradient plus the
/// straight-through pass-through.
ad::Tensor quantize(ad::Tape&, const ad::Tensor& values, const Codebook& cb, QuantizeMode mode);

/// FC stack over vec(Re/Im H_eff), reshaped to N_T x N_R and rescaled to
/// ||P||_F^2 = P_T. A zero raw output returns the zero matrix.
ad::ComplexMatrix precoder_head(ad::Tape&, const OptimizerNet& net,
                                const ad::ComplexMatrix& h_eff, double p_t);

struct OptimizerForward {
    ad::Tensor objective;  // channel gain (single-user) or sum rate (multi-user)
    ad::ComplexMatrix h_eff;
    ad::ComplexMatrix theta;
    ad::Tensor tunable;  // regressed masked matrix
    ad::ComplexMatrix precoder;
};

/// Full per-realization pipeline for the net's variant.
OptimizerForward optimizer_forward(ad::Tape&, const OptimizerNet& net, const ad::Tensor& a,
                                   const ChannelRealization& real, const SystemConfig& sys,
                                   const LossyConfig& lossy, QuantizeMode mode);

/// Negative objective.
ad::Tensor optimizer_loss(ad::Tape&, const OptimizerForward& fwd);

}  // namespace bdris
