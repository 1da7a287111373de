#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdris/tensor.hpp"

namespace bdris {

/// Binary symmetric interconnection matrix with forced unit diagonal (every
/// element keeps its ground connection). Only the strict lower triangle is
/// stored, in tril_index order. Doubles as the graph adjacency for the GNN.
class Architecture {
public:
    Architecture() = default;
    Architecture(std::size_t n, std::vector<std::uint8_t> tril_bits);

    static Architecture single(std::size_t n) { return Architecture(n, std::vector<std::uint8_t>(ad::tril_count(n), 0)); }

    std::size_t n() const { return n_; }
    const std::vector<std::uint8_t>& tril() const { return tril_; }

    bool edge(std::size_t i, std::size_t j) const;
    void set_edge(std::size_t i, std::size_t j, bool on);

    /// Number of tunable admittance components: sum over i>=j of A_ij.
    std::size_t circuit_complexity() const;

    /// Dense binary matrix as a constant tensor.
    ad::Tensor to_tensor() const;

    /// Text format: header line, element count, then the strict-lower-triangle
    /// bitstring in tril_index order (diagonal implied 1).
    std::string serialize() const;
    static Architecture parse(const std::string& text);

    bool operator==(const Architecture& o) const { return n_ == o.n_ && tril_ == o.tril_; }

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> tril_;
};

enum class BaselineKind { Single, Tridiagonal, Arrowhead, Band, Stem, Fully };

BaselineKind baseline_kind_from_string(const std::string& s);
std::string to_string(BaselineKind kind);

/// Construct a reference topology. `q` is the band/stem width, used only by
/// Band and Stem; it must be odd and in [1, n].
Architecture make_baseline(BaselineKind kind, std::size_t n, std::size_t q = 0);

/// Diagonal degree matrix D with D_ii = sum_j A_ij.
ad::Tensor degree_matrix(const Architecture& arch);

}  // namespace bdris
