#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdris/errors.hpp"
#include "bdris/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_file;
    std::string variant;
    std::vector<std::string> overrides;  // key=value
    std::string seed;                    // training seed
    std::string channel_seed;
    std::string n_b, tau, r_ohm;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_file, "key=value config file");
    cmd->add_option("--variant", args.variant, "ideal|mc|lossy|discrete");
    cmd->add_option("--seed", args.seed, "training seed (train.seed)");
    cmd->add_option("--channel-seed", args.channel_seed, "channel synthesis seed");
    cmd->add_option("--nb", args.n_b, "quantization bits (disc.n_b)");
    cmd->add_option("--tau", args.tau, "soft-quantizer temperature (disc.tau)");
    cmd->add_option("--r", args.r_ohm, "lossy series resistance in ohms (lossy.r_ohm)");
    cmd->add_option("--set", args.overrides, "extra key=value overrides")->take_all();
}

bdris::ExperimentConfig resolve(const CommonArgs& args) {
    bdris::KvStore kv = args.config_file.empty() ? bdris::KvStore()
                                                 : bdris::KvStore::parse_file(args.config_file);
    if (!args.variant.empty()) kv.set("variant", args.variant);
    if (!args.seed.empty()) kv.set("train.seed", args.seed);
    if (!args.channel_seed.empty()) kv.set("seed", args.channel_seed);
    if (!args.n_b.empty()) kv.set("disc.n_b", args.n_b);
    if (!args.tau.empty()) kv.set("disc.tau", args.tau);
    if (!args.r_ohm.empty()) kv.set("lossy.r_ohm", args.r_ohm);
    for (const std::string& kvp : args.overrides) {
        auto eq = kvp.find('=');
        if (eq == std::string::npos) {
            throw bdris::ConfigError("--set expects key=value, got '" + kvp + "'");
        }
        kv.set(kvp.substr(0, eq), kvp.substr(eq + 1));
    }
    return bdris::ExperimentConfig::from_kv(kv);
}

void print_record(const bdris::SweepRecord& rec) {
    std::cout << "variant=" << bdris::to_string(rec.variant) << " k_cc=" << rec.k_cc
              << " label=" << rec.label << " metric=" << rec.metric;
    std::cout.precision(12);
    std::cout << " objective=" << rec.objective << " seed=" << rec.seed << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BD-RIS architecture discovery toolkit"};
    app.require_subcommand(1);

    CommonArgs synth_args, train_args, base_args, sweep_args, eval_args;

    auto* synth = app.add_subcommand("synth", "synthesize a channel set");
    std::string synth_out, synth_csv;
    add_common(synth, synth_args);
    synth->add_option("--out", synth_out, "output channel container")->required();
    synth->add_option("--csv", synth_csv, "also export a CSV listing");

    auto* train = app.add_subcommand("train", "run two-tier architecture discovery");
    std::string train_channels, train_dir = "run", train_resume;
    std::size_t train_kcc = 0;
    add_common(train, train_args);
    train->add_option("--channels", train_channels, "channel container")->required();
    train->add_option("--kcc", train_kcc, "target circuit complexity (incl. diagonal)")->required();
    train->add_option("--out-dir", train_dir, "output directory");
    train->add_option("--resume", train_resume, "checkpoint to resume from");

    auto* baseline = app.add_subcommand("baseline", "train a fixed reference topology");
    std::string base_channels, base_kind, base_dir;
    std::size_t base_q = 0;
    add_common(baseline, base_args);
    baseline->add_option("--channels", base_channels, "channel container")->required();
    baseline->add_option("--arch", base_kind, "single|tridiagonal|arrowhead|band|stem|fully")
        ->required();
    baseline->add_option("--q", base_q, "band/stem width (odd)");
    baseline->add_option("--out-dir", base_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "train across circuit complexities");
    std::string sweep_channels, sweep_out;
    std::vector<std::size_t> sweep_kcc;
    bool sweep_parallel = false;
    add_common(sweep, sweep_args);
    sweep->add_option("--channels", sweep_channels, "channel container")->required();
    sweep->add_option("--kcc-list", sweep_kcc, "circuit complexities")->required()->delimiter(',');
    sweep->add_option("--out", sweep_out, "sweep CSV path")->required();
    sweep->add_flag("--parallel", sweep_parallel, "run sweep points concurrently");

    auto* eval = app.add_subcommand("eval", "re-evaluate a checkpoint on a channel set");
    std::string eval_channels, eval_ckpt;
    add_common(eval, eval_args);
    eval->add_option("--channels", eval_channels, "channel container")->required();
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint container")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            auto cfg = resolve(synth_args);
            auto hash = bdris::run_synth(cfg, synth_out, synth_csv);
            std::cout << "config_hash=" << bdris::hash_hex(hash) << "\n";
            std::cout << "wrote " << synth_out << " (" << cfg.sys.n_real << " realizations)\n";
        } else if (train->parsed()) {
            auto cfg = resolve(train_args);
            auto out = bdris::run_train(cfg, train_channels, train_kcc, train_dir, train_resume);
            print_record(out.record);
            std::cout << "epochs=" << out.result.epochs_run
                      << " inner_iterations=" << out.result.inner_iterations << "\n";
            if (!out.trace_path.empty()) std::cout << "trace=" << out.trace_path << "\n";
        } else if (baseline->parsed()) {
            auto cfg = resolve(base_args);
            auto kind = bdris::baseline_kind_from_string(base_kind);
            auto out = bdris::run_baseline(cfg, base_channels, kind, base_q, base_dir);
            print_record(out.record);
        } else if (sweep->parsed()) {
            auto cfg = resolve(sweep_args);
            auto records = bdris::run_sweep(cfg, sweep_channels, sweep_kcc, sweep_out,
                                            sweep_parallel);
            for (const auto& rec : records) print_record(rec);
            std::cout << "wrote " << sweep_out << "\n";
        } else if (eval->parsed()) {
            auto cfg = resolve(eval_args);
            print_record(bdris::run_eval(cfg, eval_channels, eval_ckpt));
        }
    } catch (const bdris::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const bdris::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const bdris::Error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
