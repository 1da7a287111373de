#include "bdris/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include <nlohmann/json.hpp>

#include "bdris/container.hpp"
#include "bdris/errors.hpp"

namespace bdris {

using ad::Gradients;
using ad::Tape;
using ad::Tensor;

double cosine_lr(std::size_t step, std::size_t total, double lr_min, double lr_max) {
    if (step > total) throw ContractError("cosine_lr: step exceeds total");
    double frac = total == 0 ? 0.0 : static_cast<double>(step) / static_cast<double>(total);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(3.14159265358979323846 * frac));
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, double lr) {
    if (params.size() != grads.size()) throw ContractError("Adam::step: param/grad count mismatch");
    if (m_.empty()) {
        for (const Tensor* p : params) {
            m_.push_back(Tensor::zeros(p->rows(), p->cols()));
            v_.push_back(Tensor::zeros(p->rows(), p->cols()));
        }
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        if (g.size() != p.size()) throw ContractError("Adam::step: gradient shape mismatch");
        for (std::size_t k = 0; k < p.size(); ++k) {
            double gk = g[k];
            m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * gk;
            v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * gk * gk;
            double mhat = m_[i][k] / bc1;
            double vhat = v_[i][k] / bc2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

void Adam::restore(std::size_t steps, std::vector<Tensor> m, std::vector<Tensor> v) {
    step_ = steps;
    m_ = std::move(m);
    v_ = std::move(v);
}

namespace {

std::vector<Tensor*> param_ptrs(OptimizerNet& net) {
    std::vector<Tensor*> out;
    net.for_each_param([&](const std::string&, Tensor& t) {
        if (!t.empty()) out.push_back(&t);
    });
    return out;
}

std::vector<Tensor*> param_ptrs(GeneratorNet& net) {
    std::vector<Tensor*> out;
    net.for_each_param([&](const std::string&, Tensor& t) {
        if (!t.empty()) out.push_back(&t);
    });
    return out;
}

/// Gradients for the tracked view in canonical order; untouched params get zeros.
template <typename Net>
std::vector<Tensor> collect_grads(Net& view, const Gradients& grads) {
    std::vector<Tensor> out;
    view.for_each_param([&](const std::string&, Tensor& t) {
        if (t.empty()) return;
        const Tensor* g = grads.find(t);
        out.push_back(g ? g->detached() : Tensor::zeros(t.rows(), t.cols()));
    });
    return out;
}

void add_into(std::vector<Tensor>& acc, const std::vector<Tensor>& inc) {
    if (acc.empty()) {
        acc = inc;
        return;
    }
    for (std::size_t i = 0; i < acc.size(); ++i)
        for (std::size_t k = 0; k < acc[i].size(); ++k) acc[i][k] += inc[i][k];
}

double grad_norm(const std::vector<Tensor>& grads) {
    double s = 0.0;
    for (const Tensor& g : grads)
        for (double v : g.data()) s += v * v;
    return std::sqrt(s);
}

}  // namespace

Trainer::Trainer(const ChannelSet& set, const ExperimentConfig& cfg, TrainerOptions opts)
    : set_(set), cfg_(cfg), opts_(std::move(opts)), shuffle_rng_(Rng::derive(cfg.schedule.seed, 0xC33)) {
    if (set_.realizations.empty()) throw ConfigError("Trainer: channel set is empty");
    const bool coupled_needed = cfg_.variant == Variant::MutualCoupling;
    if (set_.coupled != coupled_needed) {
        throw ConfigError("Trainer: channel set family '" + std::string(set_.coupled ? "mc" : "ideal") +
                          "' does not match variant '" + to_string(cfg_.variant) + "'");
    }
    SystemConfig sys = cfg_.sys;
    if (sys.n_i != set_.n_i || sys.n_t != set_.n_t || sys.n_k != set_.n_k) {
        throw ConfigError("Trainer: system dimensions do not match the channel set");
    }

    Rng gen_rng(Rng::derive(cfg_.schedule.seed, 0xA11));
    Rng opt_rng(Rng::derive(cfg_.schedule.seed, 0xB22));
    opt_ = OptimizerNet::init(cfg_.variant, sys, cfg_.net, cfg_.discrete, opt_rng);
    if (generated_mode()) {
        if (opts_.k_cc < sys.n_i || opts_.k_cc > sys.n_i * (sys.n_i + 1) / 2) {
            throw ConfigError("Trainer: K_cc=" + std::to_string(opts_.k_cc) + " outside [" +
                              std::to_string(sys.n_i) + ", " +
                              std::to_string(sys.n_i * (sys.n_i + 1) / 2) + "]");
        }
        gen_ = GeneratorNet::init(sys.n_i, sys.n_t, sys.n_r(), cfg_.net, gen_rng);
        x0_ = build_generator_input(set_);
    } else {
        if (opts_.fixed_arch->n() != sys.n_i) {
            throw ConfigError("Trainer: fixed architecture size does not match N_I");
        }
        opts_.k_cc = opts_.fixed_arch->circuit_complexity();
    }
    best_arch_ = generated_mode() ? Architecture::single(sys.n_i) : *opts_.fixed_arch;

    // Objectives span many orders of magnitude across variants (linear-scale
    // gains are tiny); normalizing the loss by the initial objective keeps the
    // update rule well conditioned without changing the optima.
    double obj0 = std::fabs(mean_objective(current_architecture_tensor()));
    obj_scale_ = obj0 > 1e-300 ? 1.0 / obj0 : 1.0;
}

Tensor Trainer::current_architecture_tensor() const {
    if (!generated_mode()) return opts_.fixed_arch->to_tensor();
    Tape tape;
    ArchitectureSample s = generator_forward(tape, gen_, x0_, opts_.k_cc);
    return s.a.detached();
}

double Trainer::mean_objective(const Tensor& a) const {
    double total = 0.0;
    for (const ChannelRealization& r : set_.realizations) {
        Tape tape;
        OptimizerForward fwd =
            optimizer_forward(tape, opt_, a, r, cfg_.sys, cfg_.lossy, QuantizeMode::Eval);
        total += fwd.objective.value();
    }
    return total / static_cast<double>(set_.realizations.size());
}

double Trainer::inner_loop(const Tensor& a_const) {
    const TrainSchedule& sch = cfg_.schedule;
    const std::size_t n_real = set_.realizations.size();
    std::vector<std::size_t> order(n_real);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = sch.batch == 0 ? n_real : std::min(sch.batch, n_real);
    std::size_t cursor = 0;

    for (std::size_t it = 0; it < sch.inner_iters; ++it) {
        double lr = cosine_lr(it, sch.inner_iters, sch.lr_min, sch.lr_max);
        if (batch < n_real && cursor + batch > n_real) cursor = 0;
        if (batch < n_real && cursor == 0) {
            // deterministic reshuffle per pass
            for (std::size_t i = n_real; i > 1; --i) {
                std::size_t j = static_cast<std::size_t>(shuffle_rng_.uniform() * static_cast<double>(i));
                std::swap(order[i - 1], order[j]);
            }
        }
        std::vector<std::size_t> idx(order.begin() + static_cast<long>(cursor),
                                     order.begin() + static_cast<long>(cursor + batch));
        cursor = batch < n_real ? cursor + batch : 0;

        std::vector<std::vector<Tensor>> grads(idx.size());
        std::vector<double> objs(idx.size());
        auto worker = [&](std::size_t w0, std::size_t stride) {
            for (std::size_t k = w0; k < idx.size(); k += stride) {
                Tape tape;
                OptimizerNet view = tracked(tape, opt_);
                OptimizerForward fwd = optimizer_forward(tape, view, a_const,
                                                         set_.realizations[idx[k]], cfg_.sys,
                                                         cfg_.lossy, QuantizeMode::Train);
                Tensor loss = affine(tape, fwd.objective,
                                     -obj_scale_ / static_cast<double>(idx.size()), 0.0);
                Gradients g = tape.backward(loss);
                grads[k] = collect_grads(view, g);
                objs[k] = fwd.objective.value();
            }
        };
        if (sch.threads > 1 && idx.size() > 1) {
            std::vector<std::thread> pool;
            std::size_t nthreads = std::min(sch.threads, idx.size());
            for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker, t, nthreads);
            for (auto& t : pool) t.join();
        } else {
            worker(0, 1);
        }

        std::vector<Tensor> total;  // fixed-order reduction over the batch
        double obj_sum = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            add_into(total, grads[k]);
            obj_sum += objs[k];
        }
        if (!std::isfinite(obj_sum)) {
            throw DomainError("inner_loop: NaN loss at step " + std::to_string(it) + ", lr " +
                              std::to_string(lr) + ", grad norm " + std::to_string(grad_norm(total)));
        }
        adam_opt_.step(param_ptrs(opt_), total, lr);
        ++inner_iterations_;
    }
    return mean_objective(a_const);
}

void Trainer::snapshot_best() {
    best_opt_ = opt_;
    if (generated_mode()) best_gen_ = gen_;
}

TrainResult Trainer::run() {
    const TrainSchedule& sch = cfg_.schedule;
    auto t_start = std::chrono::steady_clock::now();
    Rng opt_rng(Rng::derive(cfg_.schedule.seed, 0xB22));

    for (std::size_t epoch = epoch_next_; epoch < sch.outer_epochs; ++epoch) {
        double lr_gen = cosine_lr(epoch, sch.outer_epochs, sch.lr_min, sch.lr_max);

        Tape tape_outer;
        ArchitectureSample sample;
        Tensor a_const;
        if (generated_mode()) {
            GeneratorNet gen_view = tracked(tape_outer, gen_);
            sample = generator_forward(tape_outer, gen_view, x0_, opts_.k_cc);
            a_const = sample.a.detached();
            if (sch.reinit_inner) {
                opt_ = OptimizerNet::init(cfg_.variant, cfg_.sys, cfg_.net, cfg_.discrete, opt_rng);
                adam_opt_ = Adam();
            }
            double obj = inner_loop(a_const);

            if (!opts_.freeze_generator) {
                // generator gradient through the trained optimizer and the STE
                GeneratorNet gen_view2 = gen_view;  // params already tracked on tape_outer
                Tensor loss;
                for (std::size_t n = 0; n < set_.realizations.size(); ++n) {
                    OptimizerForward fwd =
                        optimizer_forward(tape_outer, opt_, sample.a, set_.realizations[n],
                                          cfg_.sys, cfg_.lossy, QuantizeMode::Train);
                    Tensor term = affine(tape_outer, fwd.objective,
                                         -obj_scale_ / static_cast<double>(set_.realizations.size()),
                                         0.0);
                    loss = loss.empty() ? term : add(tape_outer, loss, term);
                }
                Gradients g = tape_outer.backward(loss);
                adam_gen_.step(param_ptrs(gen_), collect_grads(gen_view2, g), lr_gen);
            }

            EpochRecord rec{epoch, obj, sample.arch.circuit_complexity(), lr_gen};
            trace_.push_back(rec);
            if (opts_.on_epoch) opts_.on_epoch(rec);
            bool improved = !has_best_ ||
                            obj > best_objective_ + std::fabs(best_objective_) * sch.improve_tol;
            if (improved) {
                has_best_ = true;
                best_objective_ = obj;
                best_arch_ = sample.arch;
                snapshot_best();
                since_improve_ = 0;
            } else if (++since_improve_ >= sch.patience) {
                epoch_next_ = epoch + 1;
                break;
            }
        } else {
            a_const = opts_.fixed_arch->to_tensor();
            double obj = inner_loop(a_const);
            EpochRecord rec{epoch, obj, opts_.fixed_arch->circuit_complexity(), lr_gen};
            trace_.push_back(rec);
            if (opts_.on_epoch) opts_.on_epoch(rec);
            bool improved = !has_best_ ||
                            obj > best_objective_ + std::fabs(best_objective_) * sch.improve_tol;
            if (improved) {
                has_best_ = true;
                best_objective_ = obj;
                snapshot_best();
                since_improve_ = 0;
            } else if (++since_improve_ >= sch.patience) {
                epoch_next_ = epoch + 1;
                break;
            }
        }
        epoch_next_ = epoch + 1;
    }

    TrainResult result;
    result.best_arch = best_arch_;
    result.best_objective = best_objective_;
    result.generator = generated_mode() && has_best_ ? best_gen_ : gen_;
    result.optimizer = has_best_ ? best_opt_ : opt_;
    result.trace = trace_;
    result.inner_iterations = inner_iterations_;
    result.epochs_run = trace_.size();
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

namespace {

void save_net_params(Container& c, const std::string& prefix, OptimizerNet& net) {
    net.for_each_param([&](const std::string& name, Tensor& t) {
        if (!t.empty()) c.add(prefix + name, t.detached());
    });
}

void save_net_params(Container& c, const std::string& prefix, GeneratorNet& net) {
    net.for_each_param([&](const std::string& name, Tensor& t) {
        if (!t.empty()) c.add(prefix + name, t.detached());
    });
}

template <typename Net>
void load_net_params(const Container& c, const std::string& prefix, Net& net) {
    net.for_each_param([&](const std::string& name, Tensor& t) {
        if (t.empty()) return;
        const Tensor& s = c.get(prefix + name);
        if (s.rows() != t.rows() || s.cols() != t.cols()) {
            throw IoError("checkpoint: shape mismatch for '" + name + "'");
        }
        t = s.detached();
    });
}

void save_adam(Container& c, const std::string& prefix, Adam& adam) {
    for (std::size_t i = 0; i < adam.moments1().size(); ++i) {
        c.add(prefix + std::to_string(i) + "/m", adam.moments1()[i].detached());
        c.add(prefix + std::to_string(i) + "/v", adam.moments2()[i].detached());
    }
}

void load_adam(const Container& c, const std::string& prefix, std::size_t steps, Adam& adam,
               std::size_t count) {
    std::vector<Tensor> m, v;
    for (std::size_t i = 0; i < count; ++i) {
        m.push_back(c.get(prefix + std::to_string(i) + "/m").detached());
        v.push_back(c.get(prefix + std::to_string(i) + "/v").detached());
    }
    adam.restore(steps, std::move(m), std::move(v));
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
    Container c;
    auto& hdr = c.header();
    hdr["kind"] = "checkpoint";
    hdr["variant"] = to_string(cfg_.variant);
    hdr["generated_mode"] = generated_mode();
    hdr["k_cc"] = opts_.k_cc;
    if (!generated_mode()) hdr["fixed_arch"] = opts_.fixed_arch->serialize();
    hdr["epoch_next"] = epoch_next_;
    hdr["since_improve"] = since_improve_;
    hdr["has_best"] = has_best_;
    hdr["best_objective"] = best_objective_;
    hdr["best_arch"] = best_arch_.serialize();
    hdr["obj_scale"] = obj_scale_;
    hdr["inner_iterations"] = inner_iterations_;
    hdr["adam_opt_steps"] = adam_opt_.steps();
    hdr["adam_gen_steps"] = adam_gen_.steps();
    hdr["rng_state"] = shuffle_rng_.save_state();
    hdr["config_hash"] = hash_hex(cfg_.config_hash);
    nlohmann::json trace = nlohmann::json::array();
    for (const EpochRecord& r : trace_) {
        trace.push_back({{"epoch", r.epoch}, {"objective", r.objective}, {"k_cc", r.k_cc}, {"lr", r.lr}});
    }
    hdr["trace"] = trace;

    auto& self = const_cast<Trainer&>(*this);
    save_net_params(c, "cur/", self.opt_);
    save_adam(c, "adam_opt/", self.adam_opt_);
    if (has_best_) save_net_params(c, "best/", self.best_opt_);
    if (generated_mode()) {
        save_net_params(c, "cur/", self.gen_);
        save_adam(c, "adam_gen/", self.adam_gen_);
        if (has_best_) save_net_params(c, "best/", self.best_gen_);
    }
    c.write(path);
}

void Trainer::load_checkpoint(const std::string& path) {
    Container c = Container::read(path);
    const auto& hdr = c.header();
    if (!hdr.contains("kind") || hdr["kind"] != "checkpoint") {
        throw IoError("'" + path + "' is not a checkpoint container");
    }
    if (hdr.at("variant").get<std::string>() != to_string(cfg_.variant)) {
        throw ConfigError("checkpoint variant does not match run configuration");
    }
    if (hdr.at("generated_mode").get<bool>() != generated_mode()) {
        throw ConfigError("checkpoint mode (generated/fixed) does not match run options");
    }
    epoch_next_ = hdr.at("epoch_next").get<std::size_t>();
    since_improve_ = hdr.at("since_improve").get<std::size_t>();
    has_best_ = hdr.at("has_best").get<bool>();
    best_objective_ = hdr.at("best_objective").get<double>();
    best_arch_ = Architecture::parse(hdr.at("best_arch").get<std::string>());
    obj_scale_ = hdr.at("obj_scale").get<double>();
    inner_iterations_ = hdr.at("inner_iterations").get<std::size_t>();
    shuffle_rng_.restore_state(hdr.at("rng_state").get<std::string>());
    trace_.clear();
    for (const auto& r : hdr.at("trace")) {
        trace_.push_back(EpochRecord{r.at("epoch").get<std::size_t>(),
                                     r.at("objective").get<double>(),
                                     r.at("k_cc").get<std::size_t>(), r.at("lr").get<double>()});
    }
    load_net_params(c, "cur/", opt_);
    load_adam(c, "adam_opt/", hdr.at("adam_opt_steps").get<std::size_t>(), adam_opt_,
              param_ptrs(opt_).size());
    if (has_best_) {
        best_opt_ = opt_;
        load_net_params(c, "best/", best_opt_);
    }
    if (generated_mode()) {
        load_net_params(c, "cur/", gen_);
        load_adam(c, "adam_gen/", hdr.at("adam_gen_steps").get<std::size_t>(), adam_gen_,
                  param_ptrs(gen_).size());
        if (has_best_) {
            best_gen_ = gen_;
            load_net_params(c, "best/", best_gen_);
        }
    }
}

}  // namespace bdris
