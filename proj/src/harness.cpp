#include "bdris/harness.hpp"

#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "bdris/container.hpp"
#include "bdris/errors.hpp"

namespace bdris {

namespace fs = std::filesystem;

std::string metric_name(const SystemConfig& sys) {
    return sys.k > 1 ? "sum_rate" : "channel_gain";
}

ChannelSet synth_for_config(const ExperimentConfig& cfg) {
    ChannelSet set = cfg.variant == Variant::MutualCoupling
                         ? synth_mc_realizations(cfg.sys, cfg.fade, cfg.coupling, cfg.channel_seed)
                         : synth_realizations(cfg.sys, cfg.fade, cfg.channel_seed);
    set.config_hash = cfg.config_hash;
    return set;
}

std::uint64_t run_synth(const ExperimentConfig& cfg, const std::string& out_path,
                        const std::string& csv_path) {
    ChannelSet set = synth_for_config(cfg);
    write_channel_set(out_path, set);
    if (!csv_path.empty()) export_channels_csv(csv_path, set);
    return cfg.config_hash;
}

namespace {

SweepRecord make_record(const ExperimentConfig& cfg, const std::string& label,
                        const TrainResult& result) {
    SweepRecord rec;
    rec.variant = cfg.variant;
    rec.k_cc = result.best_arch.circuit_complexity();
    rec.label = label;
    rec.objective = result.best_objective;
    rec.metric = metric_name(cfg.sys);
    rec.seed = cfg.schedule.seed;
    rec.runtime_s = result.wall_seconds;
    if (cfg.variant == Variant::Lossy) rec.r_ohm = cfg.lossy.r;
    return rec;
}

void write_summary(const std::string& path, const ExperimentConfig& cfg, const std::string& label,
                   const TrainResult& result) {
    nlohmann::json j;
    j["label"] = label;
    j["variant"] = to_string(cfg.variant);
    j["metric"] = metric_name(cfg.sys);
    j["k_cc"] = result.best_arch.circuit_complexity();
    j["best_objective"] = result.best_objective;
    j["epochs_run"] = result.epochs_run;
    j["inner_iterations"] = result.inner_iterations;
    j["wall_seconds"] = result.wall_seconds;
    j["seed"] = cfg.schedule.seed;
    j["config_hash"] = hash_hex(cfg.config_hash);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << j.dump(2) << "\n";
}

TrainOutputs run_common(const ExperimentConfig& cfg, const ChannelSet& set, TrainerOptions opts,
                        const std::string& label, const std::string& out_dir,
                        const std::string& resume_from) {
    Trainer trainer(set, cfg, std::move(opts));
    if (!resume_from.empty()) trainer.load_checkpoint(resume_from);
    TrainOutputs out;
    out.result = trainer.run();
    out.record = make_record(cfg, label, out.result);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        out.trace_path = (fs::path(out_dir) / "trace.csv").string();
        out.checkpoint_path = (fs::path(out_dir) / "checkpoint.bin").string();
        out.arch_path = (fs::path(out_dir) / "arch.txt").string();
        write_trace_csv(out.trace_path, out.result.trace, cfg.config_hash);
        trainer.save_checkpoint(out.checkpoint_path);
        std::ofstream arch(out.arch_path);
        if (!arch) throw IoError("cannot open '" + out.arch_path + "' for writing");
        arch << out.result.best_arch.serialize();
        if (trainer.generated_mode()) {
            ad::Tape tape;
            ArchitectureSample s =
                generator_forward(tape, out.result.generator, build_generator_input(set),
                                  out.result.best_arch.circuit_complexity());
            export_probabilities_csv((fs::path(out_dir) / "plow.csv").string(), s.p_low);
        }
        write_summary((fs::path(out_dir) / "summary.json").string(), cfg, label, out.result);
    }
    return out;
}

}  // namespace

TrainOutputs train_on_set(const ExperimentConfig& cfg, const ChannelSet& set, std::size_t k_cc,
                          const std::string& out_dir, const std::string& resume_from) {
    TrainerOptions opts;
    opts.k_cc = k_cc;
    return run_common(cfg, set, std::move(opts), "learned", out_dir, resume_from);
}

TrainOutputs baseline_on_set(const ExperimentConfig& cfg, const ChannelSet& set,
                             BaselineKind kind, std::size_t q, const std::string& out_dir) {
    TrainerOptions opts;
    opts.fixed_arch = make_baseline(kind, cfg.sys.n_i, q);
    std::string label = to_string(kind);
    if (kind == BaselineKind::Band || kind == BaselineKind::Stem) {
        label += "(" + std::to_string(q) + ")";
    }
    return run_common(cfg, set, std::move(opts), label, out_dir, "");
}

TrainOutputs run_train(const ExperimentConfig& cfg, const std::string& channels_path,
                       std::size_t k_cc, const std::string& out_dir,
                       const std::string& resume_from) {
    ChannelSet set = read_channel_set(channels_path);
    return train_on_set(cfg, set, k_cc, out_dir, resume_from);
}

TrainOutputs run_baseline(const ExperimentConfig& cfg, const std::string& channels_path,
                          BaselineKind kind, std::size_t q, const std::string& out_dir) {
    ChannelSet set = read_channel_set(channels_path);
    return baseline_on_set(cfg, set, kind, q, out_dir);
}

std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg, const std::string& channels_path,
                                   const std::vector<std::size_t>& k_cc_list,
                                   const std::string& out_csv, bool parallel) {
    if (k_cc_list.empty()) throw ConfigError("sweep: empty K_cc list");
    ChannelSet set = read_channel_set(channels_path);
    std::vector<SweepRecord> records(k_cc_list.size());
    auto point = [&](std::size_t i) {
        records[i] = train_on_set(cfg, set, k_cc_list[i]).record;
    };
    if (parallel && k_cc_list.size() > 1) {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < k_cc_list.size(); ++i) pool.emplace_back(point, i);
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < k_cc_list.size(); ++i) point(i);
    }
    if (!out_csv.empty()) write_sweep_csv(out_csv, records, cfg.config_hash);
    return records;
}

SweepRecord run_eval(const ExperimentConfig& cfg, const std::string& channels_path,
                     const std::string& checkpoint_path) {
    ChannelSet set = read_channel_set(channels_path);
    Container c = Container::read(checkpoint_path);
    const auto& hdr = c.header();
    if (!hdr.contains("kind") || hdr["kind"] != "checkpoint") {
        throw IoError("'" + checkpoint_path + "' is not a checkpoint container");
    }
    if (hdr.at("variant").get<std::string>() != to_string(cfg.variant)) {
        throw ConfigError("eval: checkpoint variant does not match configuration");
    }
    Architecture arch = Architecture::parse(hdr.at("best_arch").get<std::string>());
    Rng opt_rng(Rng::derive(cfg.schedule.seed, 0xB22));
    OptimizerNet net = OptimizerNet::init(cfg.variant, cfg.sys, cfg.net, cfg.discrete, opt_rng);
    const std::string prefix = hdr.at("has_best").get<bool>() ? "best/" : "cur/";
    net.for_each_param([&](const std::string& name, ad::Tensor& t) {
        if (t.empty()) return;
        const ad::Tensor& s = c.get(prefix + name);
        if (s.rows() != t.rows() || s.cols() != t.cols()) {
            throw IoError("eval: checkpoint shape mismatch for '" + name + "'");
        }
        t = s.detached();
    });

    ad::Tensor a = arch.to_tensor();
    double total = 0.0;
    for (const ChannelRealization& r : set.realizations) {
        ad::Tape tape;
        OptimizerForward fwd =
            optimizer_forward(tape, net, a, r, cfg.sys, cfg.lossy, QuantizeMode::Eval);
        total += fwd.objective.value();
    }
    SweepRecord rec;
    rec.variant = cfg.variant;
    rec.k_cc = arch.circuit_complexity();
    rec.label = "eval";
    rec.objective = total / static_cast<double>(set.realizations.size());
    rec.metric = metric_name(cfg.sys);
    rec.seed = cfg.schedule.seed;
    if (cfg.variant == Variant::Lossy) rec.r_ohm = cfg.lossy.r;
    return rec;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records,
                     std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "# bdris-sweep v1\n";
    os << "# config_hash=" << hash_hex(config_hash) << "\n";
    os << "variant,k_cc,label,objective,metric,seed,runtime_s,r_ohm\n";
    for (const SweepRecord& r : records) {
        os << to_string(r.variant) << "," << r.k_cc << "," << r.label << "," << r.objective << ","
           << r.metric << "," << r.seed << "," << r.runtime_s << ",";
        if (r.r_ohm) os << *r.r_ohm;
        os << "\n";
    }
}

void write_trace_csv(const std::string& path, const std::vector<EpochRecord>& trace,
                     std::uint64_t config_hash) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.precision(17);
    os << "# bdris-trace v1\n";
    os << "# config_hash=" << hash_hex(config_hash) << "\n";
    os << "epoch,objective,k_cc,lr\n";
    for (const EpochRecord& r : trace) {
        os << r.epoch << "," << r.objective << "," << r.k_cc << "," << r.lr << "\n";
    }
}

}  // namespace bdris
