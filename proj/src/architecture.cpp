#include "bdris/architecture.hpp"

#include <algorithm>
#include <sstream>

#include "bdris/errors.hpp"

namespace bdris {

using ad::tril_count;
using ad::tril_index;

Architecture::Architecture(std::size_t n, std::vector<std::uint8_t> tril_bits)
    : n_(n), tril_(std::move(tril_bits)) {
    if (n_ == 0) throw ConfigError("Architecture: element count must be >= 1");
    if (tril_.size() != tril_count(n_)) {
        throw ConfigError("Architecture: expected " + std::to_string(tril_count(n_)) +
                          " lower-triangle bits, got " + std::to_string(tril_.size()));
    }
    for (auto b : tril_) {
        if (b > 1) throw ConfigError("Architecture: bits must be 0 or 1");
    }
}

bool Architecture::edge(std::size_t i, std::size_t j) const {
    if (i == j) return true;
    if (i < j) std::swap(i, j);
    return tril_[tril_index(i, j)] != 0;
}

void Architecture::set_edge(std::size_t i, std::size_t j, bool on) {
    if (i == j) {
        if (!on) throw ContractError("Architecture: diagonal entries are fixed at 1");
        return;
    }
    if (i < j) std::swap(i, j);
    tril_[tril_index(i, j)] = on ? 1 : 0;
}

std::size_t Architecture::circuit_complexity() const {
    std::size_t c = n_;
    for (auto b : tril_) c += b;
    return c;
}

ad::Tensor Architecture::to_tensor() const {
    ad::Tensor a = ad::Tensor::identity(n_);
    for (std::size_t i = 1; i < n_; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (tril_[tril_index(i, j)]) {
                a.at(i, j) = 1.0;
                a.at(j, i) = 1.0;
            }
    return a;
}

std::string Architecture::serialize() const {
    std::ostringstream os;
    os << "bdris-arch v1\n" << "n " << n_ << "\n";
    for (auto b : tril_) os << (b ? '1' : '0');
    os << "\n";
    return os.str();
}

Architecture Architecture::parse(const std::string& text) {
    std::istringstream is(text);
    std::string header, tag;
    std::getline(is, header);
    if (header != "bdris-arch v1") throw IoError("Architecture::parse: bad header '" + header + "'");
    std::size_t n = 0;
    is >> tag >> n;
    if (tag != "n" || n == 0) throw IoError("Architecture::parse: missing element count");
    std::string bits;
    is >> bits;
    if (bits.size() != tril_count(n)) {
        throw IoError("Architecture::parse: expected " + std::to_string(tril_count(n)) +
                      " bits, got " + std::to_string(bits.size()));
    }
    std::vector<std::uint8_t> tril(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        if (bits[k] != '0' && bits[k] != '1') throw IoError("Architecture::parse: invalid bit");
        tril[k] = bits[k] == '1' ? 1 : 0;
    }
    return Architecture(n, std::move(tril));
}

BaselineKind baseline_kind_from_string(const std::string& s) {
    if (s == "single") return BaselineKind::Single;
    if (s == "tridiagonal") return BaselineKind::Tridiagonal;
    if (s == "arrowhead") return BaselineKind::Arrowhead;
    if (s == "band") return BaselineKind::Band;
    if (s == "stem") return BaselineKind::Stem;
    if (s == "fully") return BaselineKind::Fully;
    throw ConfigError("unknown baseline architecture '" + s + "'");
}

std::string to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::Single: return "single";
        case BaselineKind::Tridiagonal: return "tridiagonal";
        case BaselineKind::Arrowhead: return "arrowhead";
        case BaselineKind::Band: return "band";
        case BaselineKind::Stem: return "stem";
        case BaselineKind::Fully: return "fully";
    }
    return "?";
}

Architecture make_baseline(BaselineKind kind, std::size_t n, std::size_t q) {
    if (n == 0) throw ConfigError("make_baseline: element count must be >= 1");
    if (kind == BaselineKind::Band || kind == BaselineKind::Stem) {
        if (q < 1 || q > n || q % 2 == 0) {
            throw ConfigError("make_baseline: band/stem width must be odd and in [1, " +
                              std::to_string(n) + "], got " + std::to_string(q));
        }
    }
    Architecture a = Architecture::single(n);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            bool on = false;
            switch (kind) {
                case BaselineKind::Single: on = false; break;
                case BaselineKind::Tridiagonal: on = (i - j) == 1; break;
                case BaselineKind::Arrowhead: on = (j == 0); break;
                case BaselineKind::Band: on = (i - j) <= q; break;
                // First q elements interconnect with everything; with
                // q = 2L-1 this hits the L(2n-2L+1) complexity exactly and
                // reduces to the arrowhead at q = 1.
                case BaselineKind::Stem: on = (j < q); break;
                case BaselineKind::Fully: on = true; break;
            }
            if (on) a.set_edge(i, j, true);
        }
    }
    return a;
}

ad::Tensor degree_matrix(const Architecture& arch) {
    const std::size_t n = arch.n();
    ad::Tensor d = ad::Tensor::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += arch.edge(i, j) ? 1.0 : 0.0;
        d.at(i, i) = row;
    }
    return d;
}

}  // namespace bdris
