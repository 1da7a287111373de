#include "bdris/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "bdris/errors.hpp"

namespace bdris {

using ad::Tape;
using ad::Tensor;

Dense init_dense(std::size_t fan_in, std::size_t fan_out, Rng& rng, bool bias) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w = Tensor::zeros(fan_in, fan_out);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    Dense d;
    d.w = std::move(w);
    if (bias) d.b = Tensor::zeros(1, fan_out);
    return d;
}

GeneratorNet GeneratorNet::init(std::size_t n_i, std::size_t n_t, std::size_t n_r,
                                const NetConfig& cfg, Rng& rng) {
    GeneratorNet net;
    net.n_i = n_i;
    net.in_width = 2 * n_i * (n_t + n_r);
    std::size_t in = net.in_width;
    for (std::size_t l = 0; l < cfg.ffc_layers; ++l) {
        net.feature.push_back(init_dense(in, cfg.ffc_width, rng));
        in = cfg.ffc_width;
    }
    net.prob_head = init_dense(in, ad::tril_count(n_i), rng);
    return net;
}

GeneratorNet tracked(Tape& tp, const GeneratorNet& net) {
    GeneratorNet view = net;
    view.for_each_param([&](const std::string&, Tensor& t) {
        if (!t.empty()) t = tp.var(t);
    });
    return view;
}

Tensor build_generator_input(const ChannelSet& set) {
    if (set.realizations.empty()) {
        return Tensor::zeros(0, 0);
    }
    const std::size_t width = 2 * set.n_i * (set.n_t + set.n_r());
    Tensor x0 = Tensor::zeros(set.realizations.size(), width);
    for (std::size_t n = 0; n < set.realizations.size(); ++n) {
        const ChannelRealization& r = set.realizations[n];
        if (r.coupled != set.coupled) {
            throw ContractError("build_generator_input: mixed channel variants in one batch");
        }
        const ad::ComplexMatrix& m_it = set.coupled ? r.s_it : r.h_it;
        const ad::ComplexMatrix& m_ri = set.coupled ? r.s_ri : r.h_ri;
        std::size_t col = 0;
        for (double v : m_it.re.data()) x0.at(n, col++) = v;
        for (double v : m_it.im.data()) x0.at(n, col++) = v;
        for (double v : m_ri.re.data()) x0.at(n, col++) = v;
        for (double v : m_ri.im.data()) x0.at(n, col++) = v;
        if (col != width) {
            throw ShapeError("build_generator_input: realization " + std::to_string(n) +
                             " has inconsistent dimensions");
        }
    }
    return x0;
}

Tensor topk_select(Tape& tp, const Tensor& p, std::size_t k) {
    if (k > p.size()) {
        throw ContractError("topk_select: K=" + std::to_string(k) + " exceeds vector length " +
                            std::to_string(p.size()));
    }
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    Tensor hard = Tensor::zeros(p.rows(), p.cols());
    for (std::size_t r = 0; r < k; ++r) hard[order[r]] = 1.0;
    return ste_identity(tp, p, hard);
}

ArchitectureSample generator_forward(Tape& tp, const GeneratorNet& net, const Tensor& x0,
                                     std::size_t k_cc) {
    const std::size_t n = net.n_i;
    const std::size_t m = ad::tril_count(n);
    if (k_cc < n || k_cc > n * (n + 1) / 2) {
        throw ConfigError("generator_forward: K_cc=" + std::to_string(k_cc) +
                          " outside [" + std::to_string(n) + ", " +
                          std::to_string(n * (n + 1) / 2) + "]");
    }
    if (x0.cols() != net.in_width) {
        throw ShapeError("generator_forward: input width " + std::to_string(x0.cols()) +
                         " does not match net (" + std::to_string(net.in_width) + ")");
    }
    Tensor h = x0;
    for (const Dense& layer : net.feature) {
        h = relu(tp, add_rowvec(tp, matmul(tp, h, layer.w), layer.b));
    }
    Tensor x_gf = mean_rows(tp, h);
    Tensor p_low = sigmoid(tp, add_rowvec(tp, matmul(tp, x_gf, net.prob_head.w), net.prob_head.b));
    Tensor b_low = topk_select(tp, p_low, k_cc - n);

    ArchitectureSample sample;
    sample.a = sym_matrix(tp, Tensor::full(n, 1, 1.0), reshape(tp, b_low, m, 1));
    std::vector<std::uint8_t> bits(m);
    for (std::size_t i = 0; i < m; ++i) bits[i] = b_low[i] != 0.0 ? 1 : 0;
    sample.arch = Architecture(n, std::move(bits));
    sample.p_low = std::move(p_low);
    sample.b_low = std::move(b_low);
    return sample;
}

void export_probabilities_csv(const std::string& path, const Tensor& p_low) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "# bdris-probabilities v1\nindex,probability\n";
    for (std::size_t i = 0; i < p_low.size(); ++i) os << i << "," << p_low[i] << "\n";
}

}  // namespace bdris
