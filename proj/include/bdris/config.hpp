#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace bdris {

enum class Variant { Ideal, MutualCoupling, Lossy, Discrete };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

/// true for variants whose channel model is the untransformed three-block
/// chain (ideal, lossy, discrete); false for mutual coupling.
bool uses_ideal_channel(Variant v);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Reference admittance, 1/50 S.
inline constexpr double kY0 = 1.0 / 50.0;

struct SystemConfig {
    std::size_t n_t = 1;
    std::size_t n_i = 64;
    std::size_t k = 1;
    std::vector<std::size_t> n_k = {1};
    double p_t = 0.0;     // linear mW, converted once at load
    double sigma2 = 0.0;  // linear mW
    std::size_t n_real = 100;

    std::size_t n_r() const;
    void validate() const;
};

struct FadingConfig {
    double c0 = 0.0;  // linear reference path loss at 1 m
    double a_it = 2.0, a_ri = 2.8, a_rt = 3.5;
    double d_it = 50.0, d_ri = 2.0, d_rt = 52.0;  // meters
    double k_t = 0.0, k_r = 0.0;                  // linear Rician factors
    bool direct_blocked = true;
    bool los_only = false;  // degenerate K -> +inf limit

    double gain(double d, double a) const;
    double g_it() const { return gain(d_it, a_it); }
    double g_ri() const { return gain(d_ri, a_ri); }
    double g_rt() const { return gain(d_rt, a_rt); }
    void validate() const;
};

struct CouplingConfig {
    std::size_t n_x = 8;       // UPA rows; columns follow from N_I
    double spacing_wl = 0.5;   // inter-element spacing in wavelengths
    double freq_hz = 28e9;
    double z0 = 50.0;          // reference impedance, ohms
    double kappa = 0.2;        // synthetic kernel strength
    std::string source = "synthetic";  // synthetic | file
    std::string file;
    void validate() const;
};

struct LossyConfig {
    double r = 1.0;           // ohms
    double l1 = 6e-9;         // H
    double l2 = 0.7e-9;       // H
    double c_min = 0.35e-12;  // F
    double c_max = 3.20e-12;  // F
    double omega = 2.0 * 3.14159265358979323846 * 28e9;
    void validate() const;
};

struct DiscreteConfig {
    std::size_t n_b = 4;
    double tau = 0.1;
    void validate() const;
};

struct NetConfig {
    std::size_t ffc_layers = 4, ffc_width = 768;
    std::size_t ne_width = 384;
    std::size_t gc_layers = 3, gc_width = 384;
    std::size_t rfc_layers = 4, rfc_width = 768;
    std::size_t pfc_layers = 8, pfc_width = 512;
    void validate() const;
};

struct TrainSchedule {
    std::size_t inner_iters = 1000;
    std::size_t outer_epochs = 100;
    std::size_t patience = 20;
    double lr_min = 1e-5, lr_max = 1e-3;
    std::size_t batch = 0;  // 0 = full batch over all realizations
    std::size_t threads = 1;
    std::uint64_t seed = 1;
    bool reinit_inner = false;       // reinitialize optimizer net per epoch
    double improve_tol = 1e-6;       // relative improvement counted as progress
    void validate() const;
};

/// Flat key=value store. Lines of the form `key = value`; '#' starts a
/// comment. Keys read during config construction are marked consumed;
/// leftovers are reported as unknown keys.
class KvStore {
public:
    static KvStore parse_file(const std::string& path);
    static KvStore parse_text(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key, double dflt) const;
    std::size_t get_size(const std::string& key, std::size_t dflt) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
    std::vector<std::size_t> get_size_list(const std::string& key,
                                           const std::vector<std::size_t>& dflt) const;

    void fail_on_unknown_keys() const;

    /// Sorted `key=value` lines; hashing input and echo format.
    std::string canonical() const;
    std::uint64_t hash() const;  // FNV-1a 64 over canonical()

private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);

/// Fully resolved run configuration. dBm values are converted to linear
/// exactly once, here.
struct ExperimentConfig {
    Variant variant = Variant::Ideal;
    SystemConfig sys;
    FadingConfig fade;
    CouplingConfig coupling;
    LossyConfig lossy;
    DiscreteConfig discrete;
    NetConfig net;
    TrainSchedule schedule;
    std::uint64_t channel_seed = 1;
    std::uint64_t config_hash = 0;

    static ExperimentConfig from_kv(const KvStore& kv);
};

}  // namespace bdris
