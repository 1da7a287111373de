#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/config.hpp"
#include "bdris/generator.hpp"
#include "bdris/optimizer_net.hpp"

namespace bdris {

/// lr_min + (lr_max - lr_min) (1 + cos(pi step/total)) / 2.
double cosine_lr(std::size_t step, std::size_t total, double lr_min, double lr_max);

/// Adaptive-moment parameter update with bias correction
/// (beta1=0.9, beta2=0.999, eps=1e-8).
class Adam {
public:
    void step(const std::vector<ad::Tensor*>& params, const std::vector<ad::Tensor>& grads,
              double lr);

    std::size_t steps() const { return step_; }
    std::vector<ad::Tensor>& moments1() { return m_; }
    std::vector<ad::Tensor>& moments2() { return v_; }
    void restore(std::size_t steps, std::vector<ad::Tensor> m, std::vector<ad::Tensor> v);

private:
    std::size_t step_ = 0;
    std::vector<ad::Tensor> m_, v_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double objective = 0.0;
    std::size_t k_cc = 0;
    double lr = 0.0;
};

struct TrainResult {
    Architecture best_arch;
    double best_objective = 0.0;
    GeneratorNet generator;  // snapshot at the best epoch (generated mode only)
    OptimizerNet optimizer;  // snapshot at the best epoch
    std::vector<EpochRecord> trace;
    std::size_t inner_iterations = 0;
    std::size_t epochs_run = 0;
    double wall_seconds = 0.0;
};

struct TrainerOptions {
    std::size_t k_cc = 0;                    // generated mode budget (incl. diagonal)
    std::optional<Architecture> fixed_arch;  // set for baseline (fixed-topology) runs
    bool freeze_generator = false;           // generated mode without generator updates
    std::function<void(const EpochRecord&)> on_epoch;
};

/// Two-tier joint learning: the inner loop trains the performance optimizer
/// under the current architecture; the outer loop updates the architecture
/// generator through the straight-through estimator. With a fixed
/// architecture the same loop runs with the generator step skipped.
class Trainer {
public:
    Trainer(const ChannelSet& set, const ExperimentConfig& cfg, TrainerOptions opts);

    TrainResult run();

    /// One inner loop over `schedule.inner_iters` steps with the architecture
    /// held fixed; returns the eval-mode mean objective over all realizations.
    double inner_loop(const ad::Tensor& a_const);

    /// Eval-mode mean objective of the current optimizer under `a`.
    double mean_objective(const ad::Tensor& a) const;

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

    const GeneratorNet& generator() const { return gen_; }
    const OptimizerNet& optimizer() const { return opt_; }
    bool generated_mode() const { return !opts_.fixed_arch.has_value(); }

private:
    ad::Tensor current_architecture_tensor() const;
    void snapshot_best();

    const ChannelSet& set_;
    ExperimentConfig cfg_;
    TrainerOptions opts_;
    GeneratorNet gen_;
    OptimizerNet opt_;
    GeneratorNet best_gen_;
    OptimizerNet best_opt_;
    Architecture best_arch_;
    Adam adam_opt_, adam_gen_;
    Rng shuffle_rng_;
    ad::Tensor x0_;  // generator input (generated mode)
    double obj_scale_ = 1.0;
    double best_objective_ = 0.0;
    bool has_best_ = false;
    std::size_t epoch_next_ = 0;
    std::size_t since_improve_ = 0;
    std::size_t inner_iterations_ = 0;
    std::vector<EpochRecord> trace_;
};

}  // namespace bdris
