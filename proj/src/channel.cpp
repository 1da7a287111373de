#include "bdris/channel.hpp"

#include <cmath>
#include <complex>
#include <fstream>

#include <nlohmann/json.hpp>

#include "bdris/container.hpp"
#include "bdris/errors.hpp"

namespace bdris {

using ad::ComplexMatrix;
using ad::Tape;
using ad::Tensor;
using linalg::MatrixXcd;
using linalg::MatrixXd;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

MatrixXcd draw_cn(Rng& rng, std::size_t rows, std::size_t cols, double variance) {
    MatrixXcd m(rows, cols);
    const double s = std::sqrt(variance / 2.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            double re = rng.normal(), im = rng.normal();
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = {s * re, s * im};
        }
    return m;
}

/// Rician mixture with a broadside-steered LoS term. At broadside every
/// steering phase is zero, so the deterministic component is the all-ones
/// matrix; the documented geometry keeps the draw reproducible.
MatrixXcd rician(Rng& rng, std::size_t rows, std::size_t cols, double gain, double k_factor,
                 bool los_only) {
    MatrixXcd los = MatrixXcd::Ones(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (los_only) {
        return std::sqrt(gain) * los;
    }
    double w_los = std::sqrt(k_factor / (1.0 + k_factor));
    double w_nlos = std::sqrt(1.0 / (1.0 + k_factor));
    MatrixXcd nlos = draw_cn(rng, rows, cols, 1.0);
    return std::sqrt(gain) * (w_los * los + w_nlos * nlos);
}

void fill_transformed_blocks(ChannelRealization& r) {
    MatrixXcd y_ii = linalg::to_eigen(r.y_ii);
    MatrixXd re = y_ii.real();
    re = 0.5 * (re + re.transpose());
    MatrixXd w = linalg::invsqrt_spd(re / kY0);  // W = (Re{Y_II}/Y0)^{-1/2}
    MatrixXd im = y_ii.imag();

    MatrixXcd y_it = linalg::to_eigen(r.y_it);
    MatrixXcd y_ri = linalg::to_eigen(r.y_ri);
    MatrixXcd y_rt = linalg::to_eigen(r.y_rt);

    // With W = sqrt(Y0) Re^{-1/2}: Ybar_RI = Y_RI W, Ybar_IT = W Y_IT.
    MatrixXcd ybar_ri = y_ri * w;
    MatrixXcd ybar_it = w * y_it;
    const double inv2y0 = 1.0 / (2.0 * kY0);
    MatrixXcd s_ri = -inv2y0 * ybar_ri;
    MatrixXcd s_it = -inv2y0 * ybar_it;
    MatrixXcd s_rt = -inv2y0 * (y_rt - inv2y0 * ybar_ri * ybar_it);

    r.s_rt = linalg::to_cmatrix(s_rt);
    r.s_ri = linalg::to_cmatrix(s_ri);
    r.s_it = linalg::to_cmatrix(s_it);
    r.w_invsqrt = linalg::to_tensor(w);
    r.im_yii = linalg::to_tensor(im);
}

}  // namespace

std::size_t ChannelSet::n_r() const {
    std::size_t r = 0;
    for (auto v : n_k) r += v;
    return r;
}

ChannelSet synth_realizations(const SystemConfig& sys, const FadingConfig& fade,
                              std::uint64_t seed) {
    sys.validate();
    fade.validate();
    ChannelSet set;
    set.coupled = false;
    set.n_t = sys.n_t;
    set.n_i = sys.n_i;
    set.n_k = sys.n_k;
    set.seed = seed;
    Rng rng(Rng::derive(seed, 0x1d3a));
    const std::size_t n_r = sys.n_r();
    for (std::size_t n = 0; n < sys.n_real; ++n) {
        ChannelRealization r;
        MatrixXcd h_it = rician(rng, sys.n_i, sys.n_t, fade.g_it(), fade.k_t, fade.los_only);
        MatrixXcd h_ri(static_cast<Eigen::Index>(n_r), static_cast<Eigen::Index>(sys.n_i));
        Eigen::Index row = 0;
        for (std::size_t k = 0; k < sys.k; ++k) {
            MatrixXcd h_ki = rician(rng, sys.n_k[k], sys.n_i, fade.g_ri(), fade.k_r, fade.los_only);
            h_ri.middleRows(row, static_cast<Eigen::Index>(sys.n_k[k])) = h_ki;
            row += static_cast<Eigen::Index>(sys.n_k[k]);
        }
        MatrixXcd h_rt = fade.direct_blocked
                             ? MatrixXcd::Zero(static_cast<Eigen::Index>(n_r),
                                               static_cast<Eigen::Index>(sys.n_t))
                             : draw_cn(rng, n_r, sys.n_t, fade.g_rt());
        r.h_it = linalg::to_cmatrix(h_it);
        r.h_ri = linalg::to_cmatrix(h_ri);
        r.h_rt = linalg::to_cmatrix(h_rt);
        set.realizations.push_back(std::move(r));
    }
    return set;
}

linalg::MatrixXcd synthetic_coupling_impedance(std::size_t n_i, const CouplingConfig& coupling) {
    coupling.validate();
    const double lambda = 2.99792458e8 / coupling.freq_hz;
    const double d = coupling.spacing_wl * lambda;
    const std::size_t n_x = std::min(coupling.n_x, n_i);
    MatrixXcd z = coupling.z0 * MatrixXcd::Identity(static_cast<Eigen::Index>(n_i),
                                                    static_cast<Eigen::Index>(n_i));
    for (std::size_t m = 0; m < n_i; ++m) {
        for (std::size_t n = m + 1; n < n_i; ++n) {
            const double dx = (static_cast<double>(m % n_x) - static_cast<double>(n % n_x)) * d;
            const double dy = (static_cast<double>(m / n_x) - static_cast<double>(n / n_x)) * d;
            const double dist = std::sqrt(dx * dx + dy * dy);
            const double phase = kTwoPi * dist / lambda;
            // 1/distance decay with wavelength-periodic oscillation
            std::complex<double> zmn =
                coupling.kappa * coupling.z0 * std::exp(std::complex<double>(0.0, -phase)) / phase;
            z(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = zmn;
            z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = zmn;
        }
    }
    return z;
}

ChannelSet synth_mc_realizations(const SystemConfig& sys, const FadingConfig& fade,
                                 const CouplingConfig& coupling, std::uint64_t seed) {
    sys.validate();
    fade.validate();
    coupling.validate();
    MatrixXcd z_ii = coupling.source == "file" ? read_coupling_matrix(coupling.file)
                                               : synthetic_coupling_impedance(sys.n_i, coupling);
    if (static_cast<std::size_t>(z_ii.rows()) != sys.n_i) {
        throw ConfigError("coupling matrix is " + std::to_string(z_ii.rows()) + "x" +
                          std::to_string(z_ii.cols()) + ", expected " + std::to_string(sys.n_i));
    }
    MatrixXcd y_ii = z_ii.inverse();
    MatrixXd re = y_ii.real();
    re = 0.5 * (re + re.transpose());
    if (!linalg::is_spd(re)) {
        throw ConfigError("coupling: Re{Y_II} is not positive definite");
    }

    ChannelSet set;
    set.coupled = true;
    set.n_t = sys.n_t;
    set.n_i = sys.n_i;
    set.n_k = sys.n_k;
    set.seed = seed;
    Rng rng(Rng::derive(seed, 0x2c4b));
    const std::size_t n_r = sys.n_r();
    ComplexMatrix y_ii_c = linalg::to_cmatrix(y_ii);
    for (std::size_t n = 0; n < sys.n_real; ++n) {
        ChannelRealization r;
        r.coupled = true;
        r.y_ii = y_ii_c;
        r.y_it = linalg::to_cmatrix(draw_cn(rng, sys.n_i, sys.n_t, fade.g_it()));
        r.y_ri = linalg::to_cmatrix(draw_cn(rng, n_r, sys.n_i, fade.g_ri()));
        r.y_rt = linalg::to_cmatrix(
            fade.direct_blocked
                ? MatrixXcd::Zero(static_cast<Eigen::Index>(n_r), static_cast<Eigen::Index>(sys.n_t))
                : draw_cn(rng, n_r, sys.n_t, fade.g_rt()));
        fill_transformed_blocks(r);
        set.realizations.push_back(std::move(r));
    }
    return set;
}

void write_channel_set(const std::string& path, const ChannelSet& set) {
    Container c;
    c.header()["kind"] = "channel-set";
    c.header()["family"] = set.coupled ? "mc" : "ideal";
    c.header()["n_t"] = set.n_t;
    c.header()["n_i"] = set.n_i;
    c.header()["n_k"] = set.n_k;
    c.header()["n_real"] = set.realizations.size();
    c.header()["seed"] = set.seed;
    c.header()["config_hash"] = hash_hex(set.config_hash);
    for (std::size_t n = 0; n < set.realizations.size(); ++n) {
        const ChannelRealization& r = set.realizations[n];
        auto tag = [&](const char* name, const char* part) {
            return std::string(name) + "." + part + "/" + std::to_string(n);
        };
        auto put = [&](const char* name, const ComplexMatrix& m) {
            c.add(tag(name, "re"), m.re);
            c.add(tag(name, "im"), m.im);
        };
        if (set.coupled) {
            if (n == 0) put("y_ii", r.y_ii);
            put("y_it", r.y_it);
            put("y_ri", r.y_ri);
            put("y_rt", r.y_rt);
        } else {
            put("h_rt", r.h_rt);
            put("h_ri", r.h_ri);
            put("h_it", r.h_it);
        }
    }
    c.write(path);
}

ChannelSet read_channel_set(const std::string& path) {
    Container c = Container::read(path);
    const auto& hdr = c.header();
    if (!hdr.contains("kind") || hdr["kind"] != "channel-set") {
        throw IoError("'" + path + "' is not a channel-set container");
    }
    ChannelSet set;
    set.coupled = hdr.at("family") == "mc";
    set.n_t = hdr.at("n_t").get<std::size_t>();
    set.n_i = hdr.at("n_i").get<std::size_t>();
    set.n_k = hdr.at("n_k").get<std::vector<std::size_t>>();
    set.seed = hdr.at("seed").get<std::uint64_t>();
    set.config_hash = std::stoull(hdr.at("config_hash").get<std::string>(), nullptr, 16);
    auto n_real = hdr.at("n_real").get<std::size_t>();
    for (std::size_t n = 0; n < n_real; ++n) {
        ChannelRealization r;
        auto tag = [&](const char* name, const char* part, std::size_t idx) {
            return std::string(name) + "." + part + "/" + std::to_string(idx);
        };
        auto grab = [&](const char* name, std::size_t idx) {
            return ComplexMatrix(c.get(tag(name, "re", idx)), c.get(tag(name, "im", idx)));
        };
        if (set.coupled) {
            r.coupled = true;
            r.y_ii = grab("y_ii", 0);
            r.y_it = grab("y_it", n);
            r.y_ri = grab("y_ri", n);
            r.y_rt = grab("y_rt", n);
            fill_transformed_blocks(r);
        } else {
            r.h_rt = grab("h_rt", n);
            r.h_ri = grab("h_ri", n);
            r.h_it = grab("h_it", n);
        }
        set.realizations.push_back(std::move(r));
    }
    return set;
}

void export_channels_csv(const std::string& path, const ChannelSet& set) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "# bdris-channels v1\n";
    os << "realization,block,row,col,re,im\n";
    auto dump = [&](std::size_t n, const char* name, const ComplexMatrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) {
                auto v = m.at(i, j);
                os << n << "," << name << "," << i << "," << j << "," << v.real() << ","
                   << v.imag() << "\n";
            }
    };
    for (std::size_t n = 0; n < set.realizations.size(); ++n) {
        const auto& r = set.realizations[n];
        if (set.coupled) {
            if (n == 0) dump(n, "y_ii", r.y_ii);
            dump(n, "y_it", r.y_it);
            dump(n, "y_ri", r.y_ri);
            dump(n, "y_rt", r.y_rt);
        } else {
            dump(n, "h_rt", r.h_rt);
            dump(n, "h_ri", r.h_ri);
            dump(n, "h_it", r.h_it);
        }
    }
}

void write_coupling_matrix(const std::string& path, const linalg::MatrixXcd& z_ii) {
    Container c;
    c.header()["kind"] = "coupling-matrix";
    c.header()["n_i"] = static_cast<std::size_t>(z_ii.rows());
    ComplexMatrix m = linalg::to_cmatrix(z_ii);
    c.add("z_ii.re", m.re);
    c.add("z_ii.im", m.im);
    c.write(path);
}

linalg::MatrixXcd read_coupling_matrix(const std::string& path) {
    Container c = Container::read(path);
    if (!c.header().contains("kind") || c.header()["kind"] != "coupling-matrix") {
        throw IoError("'" + path + "' is not a coupling-matrix container");
    }
    ComplexMatrix m(c.get("z_ii.re"), c.get("z_ii.im"));
    if (m.rows() != m.cols()) throw IoError("coupling matrix must be square");
    return linalg::to_eigen(m);
}

// ---- differentiable physics -------------------------------------------------

ComplexMatrix admittance_to_scattering(Tape& tp, const ComplexMatrix& y) {
    return cayley_map(tp, y, kY0);
}

ComplexMatrix effective_channel_ideal(Tape& tp, const ChannelRealization& real,
                                      const ComplexMatrix& theta) {
    return cadd(tp, real.h_rt, cmatmul(tp, cmatmul(tp, real.h_ri, theta), real.h_it));
}

McChannel effective_channel_mc(Tape& tp, const ChannelRealization& real, const Tensor& b_bar) {
    if (!real.coupled) throw ContractError("effective_channel_mc: realization has no coupling blocks");
    Tensor shifted = add(tp, b_bar, real.im_yii);
    Tensor b_prime = matmul(tp, matmul(tp, real.w_invsqrt, shifted), real.w_invsqrt);
    ComplexMatrix theta = cayley_map(tp, from_susceptance(tp, b_prime), kY0);
    ComplexMatrix h =
        cadd(tp, real.s_rt, cmatmul(tp, cmatmul(tp, real.s_ri, theta), real.s_it));
    return {std::move(h), std::move(theta), std::move(b_prime)};
}

namespace {

/// Branch admittance of the RLC model: an inductor L1 in parallel with a
/// series R-L2-C branch.
std::pair<Tensor, Tensor> branch_re_im(Tape& tp, const Tensor& c, const LossyConfig& cfg) {
    const double w = cfg.omega;
    Tensor u = recip(tp, affine(tp, c, w, 0.0));     // 1/(w C)
    Tensor x = affine(tp, u, -1.0, w * cfg.l2);      // w L2 - 1/(w C)
    Tensor denom = affine(tp, mul(tp, x, x), 1.0, cfg.r * cfg.r);
    for (double v : denom.data()) {
        if (v <= 0.0) {
            throw DomainError("lossy_admittance: R=0 at exact resonance");
        }
    }
    Tensor dinv = recip(tp, denom);
    Tensor re = affine(tp, dinv, cfg.r, 0.0);
    Tensor im = affine(tp, mul(tp, x, dinv), -1.0, -1.0 / (w * cfg.l1));
    return {std::move(re), std::move(im)};
}

}  // namespace

LossyResult lossy_admittance_branches(Tape& tp, const Tensor& c_diag, const Tensor& c_tril,
                                      const Tensor& mask_diag, const Tensor& mask_tril,
                                      const LossyConfig& cfg) {
    auto [re_d, im_d] = branch_re_im(tp, c_diag, cfg);
    auto [re_l, im_l] = branch_re_im(tp, c_tril, cfg);
    re_d = mul(tp, re_d, mask_diag);
    im_d = mul(tp, im_d, mask_diag);
    re_l = mul(tp, re_l, mask_tril);
    im_l = mul(tp, im_l, mask_tril);
    ComplexMatrix y{branch_matrix(tp, re_d, re_l), branch_matrix(tp, im_d, im_l)};
    ComplexMatrix theta = cayley_map(tp, y, kY0);
    return {std::move(y), std::move(theta)};
}

LossyResult lossy_admittance(Tape& tp, const Tensor& c_mat, const Architecture& arch,
                             const LossyConfig& cfg) {
    cfg.validate();
    if (c_mat.rows() != arch.n() || c_mat.cols() != arch.n()) {
        throw ShapeError("lossy_admittance: capacitance matrix does not match architecture size");
    }
    Tensor a = arch.to_tensor();
    Tensor mask_d = diag_part(tp, a);
    Tensor mask_l = tril_part(tp, a);
    Tensor c_d = diag_part(tp, c_mat);
    Tensor c_l = tril_part(tp, c_mat);
    // Masked entries hold zero capacitance; substitute an in-range value so
    // the branch formula stays finite, then mask the branch admittance.
    const double c_ref = std::sqrt(cfg.c_min * cfg.c_max);
    c_d = add(tp, c_d, affine(tp, mask_d, -c_ref, c_ref));
    c_l = add(tp, c_l, affine(tp, mask_l, -c_ref, c_ref));
    return lossy_admittance_branches(tp, c_d, c_l, mask_d, mask_l, cfg);
}

Tensor channel_gain(Tape& tp, const ComplexMatrix& h_eff) { return frob_sq(tp, h_eff); }

Tensor sum_rate(Tape& tp, const ComplexMatrix& p, const ComplexMatrix& h_eff,
                const std::vector<std::size_t>& n_k, double sigma2) {
    if (sigma2 <= 0.0) throw ContractError("sum_rate: noise power must be positive");
    std::size_t total = 0;
    for (auto v : n_k) total += v;
    if (h_eff.rows() != total || p.cols() != total) {
        throw ShapeError("sum_rate: per-user splits do not cover H rows / P columns");
    }
    if (p.rows() != h_eff.cols()) {
        throw ShapeError("sum_rate: precoder row count must equal transmit antenna count");
    }
    const std::size_t K = n_k.size();
    // Per-user products G_j = H_k P_j, computed per receiving user k.
    Tensor rate = Tensor::scalar(0.0);
    std::size_t row0 = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t rows = n_k[k];
        ComplexMatrix h_k = cslice_rows(tp, h_eff, row0, row0 + rows);
        ComplexMatrix noise{affine(tp, Tensor::identity(rows), sigma2, 0.0), Tensor::zeros(rows, rows)};
        ComplexMatrix interference = noise;
        ComplexMatrix signal;
        std::size_t col0 = 0;
        for (std::size_t j = 0; j < K; ++j) {
            const std::size_t cols = n_k[j];
            ComplexMatrix p_j = cslice_cols(tp, p, col0, col0 + cols);
            ComplexMatrix g_j = cmatmul(tp, h_k, p_j);
            ComplexMatrix outer = cmatmul(tp, g_j, cadjoint(tp, g_j));
            if (j == k) {
                signal = std::move(outer);
            } else {
                interference = cadd(tp, interference, outer);
            }
            col0 += cols;
        }
        // log2 det(S + T) - log2 det(T) avoids inverting T explicitly.
        Tensor r_k = sub(tp, logdet_hermitian_pd(tp, cadd(tp, signal, interference)),
                         logdet_hermitian_pd(tp, interference));
        rate = add(tp, rate, r_k);
        row0 += rows;
    }
    return rate;
}

}  // namespace bdris
