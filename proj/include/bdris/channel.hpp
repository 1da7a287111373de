#pragma once

#include <string>
#include <vector>

#include "bdris/architecture.hpp"
#include "bdris/complex_ops.hpp"
#include "bdris/config.hpp"
#include "bdris/linalg.hpp"
#include "bdris/rng.hpp"

namespace bdris {

/// One channel draw. All matrices are untracked constants, ready to enter a
/// differentiation tape. Ideal-family sets carry the three-block chain; a
/// mutual-coupling set instead carries the admittance blocks of the multiport
/// model plus the derived quantities consumed by the coupled channel chain.
struct ChannelRealization {
    ad::ComplexMatrix h_rt, h_ri, h_it;

    bool coupled = false;
    ad::ComplexMatrix y_ii, y_it, y_ri, y_rt;
    // Derived once per realization:
    ad::ComplexMatrix s_rt, s_ri, s_it;  // transformed channel blocks
    ad::Tensor w_invsqrt;                // W = (Re{Y_II}/Y0)^{-1/2}
    ad::Tensor im_yii;
};

struct ChannelSet {
    bool coupled = false;
    std::size_t n_t = 0, n_i = 0;
    std::vector<std::size_t> n_k;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::vector<ChannelRealization> realizations;

    std::size_t n_r() const;
};

/// Rician synthesis per the simulation setup: deterministic broadside-steered
/// LoS component (unit-modulus entries) mixed with i.i.d. complex-normal NLoS
/// parts, scaled by the distance-based gains. The direct link is zero when
/// blocked.
ChannelSet synth_realizations(const SystemConfig& sys, const FadingConfig& fade,
                              std::uint64_t seed);

/// Deterministic synthetic coupling impedance: Z0 on the diagonal plus a
/// complex kernel kappa*Z0*exp(-j*2*pi*d/lambda)/(2*pi*d/lambda) over the UPA
/// element distances d.
linalg::MatrixXcd synthetic_coupling_impedance(std::size_t n_i, const CouplingConfig& coupling);

/// Mutual-coupling synthesis: Z_II from the synthetic model or a coupling
/// file, Y blocks from gain-scaled Rayleigh draws. Asserts Re{Y_II} PD.
ChannelSet synth_mc_realizations(const SystemConfig& sys, const FadingConfig& fade,
                                 const CouplingConfig& coupling, std::uint64_t seed);

void write_channel_set(const std::string& path, const ChannelSet& set);
ChannelSet read_channel_set(const std::string& path);
void export_channels_csv(const std::string& path, const ChannelSet& set);

void write_coupling_matrix(const std::string& path, const linalg::MatrixXcd& z_ii);
linalg::MatrixXcd read_coupling_matrix(const std::string& path);

// ---- differentiable physics ------------------------------------------------

/// Theta = (Y0 I + Y)^-1 (Y0 I - Y).
ad::ComplexMatrix admittance_to_scattering(ad::Tape&, const ad::ComplexMatrix& y);

/// H = H_RT + H_RI Theta H_IT.
ad::ComplexMatrix effective_channel_ideal(ad::Tape&, const ChannelRealization& real,
                                          const ad::ComplexMatrix& theta);

struct McChannel {
    ad::ComplexMatrix h_eff;
    ad::ComplexMatrix theta;
    ad::Tensor b_prime;
};

/// Coupled chain: B' = W (B_bar + Im{Y_II}) W, Theta from jB', then
/// H = S_RT + S_RI Theta S_IT with the transformed constant blocks.
McChannel effective_channel_mc(ad::Tape&, const ChannelRealization& real,
                               const ad::Tensor& b_bar);

struct LossyResult {
    ad::ComplexMatrix y;
    ad::ComplexMatrix theta;
};

/// Per-branch RLC admittance from capacitance vectors (diag and strict lower
/// triangle, already inside [c_min, c_max]), masked by the architecture,
/// assembled into the nodal admittance matrix, then mapped to Theta.
LossyResult lossy_admittance_branches(ad::Tape&, const ad::Tensor& c_diag,
                                      const ad::Tensor& c_tril, const ad::Tensor& mask_diag,
                                      const ad::Tensor& mask_tril, const LossyConfig& cfg);

/// Matrix-level wrapper over a full capacitance matrix and a fixed topology.
LossyResult lossy_admittance(ad::Tape&, const ad::Tensor& c_mat, const Architecture& arch,
                             const LossyConfig& cfg);

/// Squared Frobenius norm of the effective channel.
ad::Tensor channel_gain(ad::Tape&, const ad::ComplexMatrix& h_eff);

/// Sum over users of log2 det(I + signal * (interference + noise)^-1),
/// evaluated as logdet(S+T) - logdet(T). Column split of P follows the
/// per-user antenna counts (s_k = N_k).
ad::Tensor sum_rate(ad::Tape&, const ad::ComplexMatrix& p, const ad::ComplexMatrix& h_eff,
                    const std::vector<std::size_t>& n_k, double sigma2);

}  // namespace bdris
