#include "bdris/config.hpp"

#include <fstream>
#include <sstream>

#include "bdris/errors.hpp"

namespace bdris {

Variant variant_from_string(const std::string& s) {
    if (s == "ideal") return Variant::Ideal;
    if (s == "mc") return Variant::MutualCoupling;
    if (s == "lossy") return Variant::Lossy;
    if (s == "discrete") return Variant::Discrete;
    throw ConfigError("unknown variant '" + s + "' (expected ideal|mc|lossy|discrete)");
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Ideal: return "ideal";
        case Variant::MutualCoupling: return "mc";
        case Variant::Lossy: return "lossy";
        case Variant::Discrete: return "discrete";
    }
    return "?";
}

bool uses_ideal_channel(Variant v) { return v != Variant::MutualCoupling; }

std::size_t SystemConfig::n_r() const {
    std::size_t r = 0;
    for (auto v : n_k) r += v;
    return r;
}

void SystemConfig::validate() const {
    if (n_t < 1 || n_i < 1 || k < 1 || n_real < 1)
        throw ConfigError("system: all counts must be >= 1");
    if (n_k.size() != k) throw ConfigError("system: n_k list length must equal K");
    for (auto v : n_k)
        if (v < 1) throw ConfigError("system: per-user antenna counts must be >= 1");
    if (p_t <= 0.0 || sigma2 <= 0.0)
        throw ConfigError("system: transmit and noise powers must be positive");
}

double FadingConfig::gain(double d, double a) const { return c0 * std::pow(d, -a); }

void FadingConfig::validate() const {
    if (d_it <= 0.0 || d_ri <= 0.0 || d_rt <= 0.0)
        throw ConfigError("fading: distances must be positive");
    if (c0 <= 0.0) throw ConfigError("fading: reference path loss must be positive");
    if (k_t < 0.0 || k_r < 0.0) throw ConfigError("fading: Rician factors must be >= 0");
}

void CouplingConfig::validate() const {
    if (n_x < 1) throw ConfigError("coupling: UPA row count must be >= 1");
    if (spacing_wl <= 0.0) throw ConfigError("coupling: spacing must be positive");
    if (freq_hz <= 0.0) throw ConfigError("coupling: carrier frequency must be positive");
    if (z0 <= 0.0) throw ConfigError("coupling: reference impedance must be positive");
    if (source != "synthetic" && source != "file")
        throw ConfigError("coupling: source must be synthetic|file");
    if (source == "file" && file.empty())
        throw ConfigError("coupling: file source requires a path");
}

void LossyConfig::validate() const {
    if (r < 0.0) throw ConfigError("lossy: resistance must be >= 0");
    if (c_min <= 0.0 || c_min >= c_max)
        throw ConfigError("lossy: capacitance bounds must satisfy 0 < c_min < c_max");
    if (l1 <= 0.0 || l2 <= 0.0) throw ConfigError("lossy: inductances must be positive");
    if (omega <= 0.0) throw ConfigError("lossy: angular frequency must be positive");
}

void DiscreteConfig::validate() const {
    if (n_b < 1 || n_b > 16) throw ConfigError("discrete: n_b must be in [1, 16]");
    if (tau <= 0.0) throw ConfigError("discrete: tau must be positive");
}

void NetConfig::validate() const {
    if (ffc_layers < 1 || rfc_layers < 1 || gc_layers < 1 || pfc_layers < 1)
        throw ConfigError("net: layer counts must be >= 1");
    if (ffc_width < 1 || ne_width < 1 || gc_width < 1 || rfc_width < 1 || pfc_width < 1)
        throw ConfigError("net: widths must be >= 1");
}

void TrainSchedule::validate() const {
    if (lr_min <= 0.0 || lr_min > lr_max)
        throw ConfigError("train: learning rates must satisfy 0 < lr_min <= lr_max");
    if (patience > outer_epochs) throw ConfigError("train: patience must be <= outer_epochs");
    if (threads < 1) throw ConfigError("train: thread count must be >= 1");
    if (improve_tol < 0.0) throw ConfigError("train: improvement tolerance must be >= 0");
}

KvStore KvStore::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

KvStore KvStore::parse_text(const std::string& text) {
    KvStore kv;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        kv.set(key, value);
    }
    return kv;
}

void KvStore::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::string KvStore::get_string(const std::string& key, const std::string& dflt) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? dflt : it->second;
}

double KvStore::get_double(const std::string& key, double dflt) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + it->second + "'");
    }
}

std::size_t KvStore::get_size(const std::string& key, std::size_t dflt) const {
    double v = get_double(key, static_cast<double>(dflt));
    if (v < 0 || v != std::floor(v)) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

std::uint64_t KvStore::get_u64(const std::string& key, std::uint64_t dflt) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    try {
        return std::stoull(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an unsigned integer");
    }
}

bool KvStore::get_bool(const std::string& key, bool dflt) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': expected true|false");
}

std::vector<std::size_t> KvStore::get_size_list(const std::string& key,
                                                const std::vector<std::size_t>& dflt) const {
    consumed_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return dflt;
    std::vector<std::size_t> out;
    std::istringstream is(it->second);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        try {
            out.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': expected comma-separated integers");
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

void KvStore::fail_on_unknown_keys() const {
    for (const auto& [k, v] : values_) {
        if (!consumed_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }
}

std::string KvStore::canonical() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << "=" << v << "\n";
    return os.str();
}

std::uint64_t KvStore::hash() const { return fnv1a64(canonical()); }

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

ExperimentConfig ExperimentConfig::from_kv(const KvStore& kv) {
    ExperimentConfig cfg;
    cfg.variant = variant_from_string(kv.get_string("variant", "ideal"));

    cfg.sys.n_t = kv.get_size("sys.n_t", 1);
    cfg.sys.n_i = kv.get_size("sys.n_i", 64);
    cfg.sys.k = kv.get_size("sys.k", 1);
    cfg.sys.n_k = kv.get_size_list("sys.n_k", std::vector<std::size_t>(cfg.sys.k, 1));
    cfg.sys.p_t = db_to_linear(kv.get_double("sys.p_t_dbm", 20.0));
    cfg.sys.sigma2 = db_to_linear(kv.get_double("sys.sigma2_dbm", -80.0));
    cfg.sys.n_real = kv.get_size("sys.n_real", 100);

    cfg.fade.c0 = db_to_linear(kv.get_double("fade.c0_db", -30.0));
    cfg.fade.a_it = kv.get_double("fade.a_it", 2.0);
    cfg.fade.a_ri = kv.get_double("fade.a_ri", 2.8);
    cfg.fade.a_rt = kv.get_double("fade.a_rt", 3.5);
    cfg.fade.d_it = kv.get_double("fade.d_it", 50.0);
    cfg.fade.d_ri = kv.get_double("fade.d_ri", 2.0);
    cfg.fade.d_rt = kv.get_double("fade.d_rt", 52.0);
    cfg.fade.k_t = db_to_linear(kv.get_double("fade.k_t_db", 1.0));
    cfg.fade.k_r = db_to_linear(kv.get_double("fade.k_r_db", 1.0));
    cfg.fade.direct_blocked = kv.get_bool("fade.direct_blocked", true);
    cfg.fade.los_only = kv.get_bool("fade.los_only", false);

    cfg.coupling.n_x = kv.get_size("mc.n_x", 8);
    cfg.coupling.spacing_wl = kv.get_double("mc.spacing_wl", 0.5);
    cfg.coupling.freq_hz = kv.get_double("mc.freq_hz", 28e9);
    cfg.coupling.z0 = kv.get_double("mc.z0", 50.0);
    cfg.coupling.kappa = kv.get_double("mc.kappa", 0.2);
    cfg.coupling.source = kv.get_string("mc.source", "synthetic");
    cfg.coupling.file = kv.get_string("mc.file", "");

    cfg.lossy.r = kv.get_double("lossy.r_ohm", 1.0);
    cfg.lossy.l1 = kv.get_double("lossy.l1_h", 6e-9);
    cfg.lossy.l2 = kv.get_double("lossy.l2_h", 0.7e-9);
    cfg.lossy.c_min = kv.get_double("lossy.c_min_f", 0.35e-12);
    cfg.lossy.c_max = kv.get_double("lossy.c_max_f", 3.20e-12);
    cfg.lossy.omega = kv.get_double("lossy.omega", 2.0 * 3.14159265358979323846 * 28e9);

    cfg.discrete.n_b = kv.get_size("disc.n_b", 4);
    cfg.discrete.tau = kv.get_double("disc.tau", 0.1);

    cfg.net.ffc_layers = kv.get_size("net.ffc_layers", 4);
    cfg.net.ffc_width = kv.get_size("net.ffc_width", 768);
    cfg.net.ne_width = kv.get_size("net.ne_width", 384);
    cfg.net.gc_layers = kv.get_size("net.gc_layers", 3);
    cfg.net.gc_width = kv.get_size("net.gc_width", 384);
    cfg.net.rfc_layers = kv.get_size("net.rfc_layers", 4);
    cfg.net.rfc_width = kv.get_size("net.rfc_width", 768);
    cfg.net.pfc_layers = kv.get_size("net.pfc_layers", 8);
    cfg.net.pfc_width = kv.get_size("net.pfc_width", 512);

    cfg.schedule.inner_iters = kv.get_size("train.inner_iters", 1000);
    cfg.schedule.outer_epochs = kv.get_size("train.outer_epochs", 100);
    cfg.schedule.patience = kv.get_size("train.patience", 20);
    cfg.schedule.lr_min = kv.get_double("train.lr_min", 1e-5);
    cfg.schedule.lr_max = kv.get_double("train.lr_max", 1e-3);
    cfg.schedule.batch = kv.get_size("train.batch", 0);
    cfg.schedule.threads = kv.get_size("train.threads", 1);
    cfg.schedule.seed = kv.get_u64("train.seed", 1);
    cfg.schedule.reinit_inner = kv.get_bool("train.reinit_inner", false);
    cfg.schedule.improve_tol = kv.get_double("train.improve_tol", 1e-6);

    cfg.channel_seed = kv.get_u64("seed", 1);

    kv.fail_on_unknown_keys();

    cfg.sys.validate();
    cfg.fade.validate();
    cfg.coupling.validate();
    cfg.lossy.validate();
    cfg.discrete.validate();
    cfg.net.validate();
    cfg.schedule.validate();
    cfg.config_hash = kv.hash();
    return cfg;
}

}  // namespace bdris
