#pragma once

#include <cstdint>
#include <vector>

#include "bdris/architecture.hpp"
#include "bdris/channel.hpp"
#include "bdris/config.hpp"
#include "bdris/rng.hpp"
#include "bdris/tensor.hpp"

namespace bdris {

/// Fully-connected layer. An empty bias tensor means the layer is bias-free.
struct Dense {
    ad::Tensor w;
    ad::Tensor b;
};

/// The architecture generator: a ReLU feature stack over per-realization
/// channel vectors, realization-wise mean pooling, and a sigmoid probability
/// head whose top-K selection (with straight-through gradients) yields the
/// interconnection pattern.
struct GeneratorNet {
    std::size_t n_i = 0;
    std::size_t in_width = 0;
    std::vector<Dense> feature;
    Dense prob_head;

    static GeneratorNet init(std::size_t n_i, std::size_t n_t, std::size_t n_r,
                             const NetConfig& cfg, Rng& rng);

    template <typename F>
    void for_each_param(F&& f) {
        std::size_t idx = 0;
        for (auto& layer : feature) {
            f("gen/ffc" + std::to_string(idx) + "/w", layer.w);
            f("gen/ffc" + std::to_string(idx) + "/b", layer.b);
            ++idx;
        }
        f("gen/prob/w", prob_head.w);
        f("gen/prob/b", prob_head.b);
    }
};

/// Register every parameter of `net` on the tape and return the tracked copy.
GeneratorNet tracked(ad::Tape&, const GeneratorNet& net);

struct ArchitectureSample {
    ad::Tensor p_low;   // 1 x n(n-1)/2 interconnection probabilities
    ad::Tensor b_low;   // 1 x n(n-1)/2 binary selection (straight-through)
    ad::Tensor a;       // n x n assembled characterization matrix
    Architecture arch;  // detached binary snapshot
};

/// Per-realization input rows [vec(Re H_IT), vec(Im H_IT), vec(Re H_RI),
/// vec(Im H_RI)] (transformed S blocks for coupled sets). Row-major vec.
ad::Tensor build_generator_input(const ChannelSet& set);

/// Exactly K ones at the K largest entries, ties broken by lowest index.
/// Backward passes the upstream gradient through unchanged.
ad::Tensor topk_select(ad::Tape&, const ad::Tensor& p, std::size_t k);

/// Full generator pass. `k_cc` is the total circuit complexity including the
/// forced diagonal, so the off-diagonal budget is k_cc - n_i.
ArchitectureSample generator_forward(ad::Tape&, const GeneratorNet& net, const ad::Tensor& x0,
                                     std::size_t k_cc);

/// Xavier-uniform weight, zero bias. Pass `bias = false` for bias-free layers.
Dense init_dense(std::size_t fan_in, std::size_t fan_out, Rng& rng, bool bias = true);

void export_probabilities_csv(const std::string& path, const ad::Tensor& p_low);

}  // namespace bdris
