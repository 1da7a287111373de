#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bdris/architecture.hpp"
#include "bdris/channel.hpp"
#include "bdris/config.hpp"
#include "bdris/training.hpp"

namespace bdris {

struct SweepRecord {
    Variant variant = Variant::Ideal;
    std::size_t k_cc = 0;
    std::string label;  // "learned" or a baseline name
    double objective = 0.0;
    std::string metric;  // channel_gain | sum_rate
    std::uint64_t seed = 0;
    double runtime_s = 0.0;
    std::optional<double> r_ohm;  // lossy runs carry the series resistance
};

std::string metric_name(const SystemConfig& sys);

/// Synthesize a channel set per the config and write the container. Returns
/// the config hash (also embedded in the file header).
std::uint64_t run_synth(const ExperimentConfig& cfg, const std::string& out_path,
                        const std::string& csv_path = "");

struct TrainOutputs {
    TrainResult result;
    SweepRecord record;
    std::string trace_path, checkpoint_path, arch_path;
};

/// Train with the architecture generator at the given circuit complexity.
/// Writes trace.csv, checkpoint.bin, arch.txt, plow.csv and summary.json under
/// out_dir when provided.
TrainOutputs run_train(const ExperimentConfig& cfg, const std::string& channels_path,
                       std::size_t k_cc, const std::string& out_dir = "",
                       const std::string& resume_from = "");

/// Fixed-architecture training (generator frozen out of the loop).
TrainOutputs run_baseline(const ExperimentConfig& cfg, const std::string& channels_path,
                          BaselineKind kind, std::size_t q = 0, const std::string& out_dir = "");

/// One generated training run per requested circuit complexity; rows ordered
/// as given. `parallel` runs the points on separate threads.
std::vector<SweepRecord> run_sweep(const ExperimentConfig& cfg, const std::string& channels_path,
                                   const std::vector<std::size_t>& k_cc_list,
                                   const std::string& out_csv, bool parallel = false);

/// Re-evaluate a checkpoint's best snapshot on a channel set (eval mode).
SweepRecord run_eval(const ExperimentConfig& cfg, const std::string& channels_path,
                     const std::string& checkpoint_path);

void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records,
                     std::uint64_t config_hash);
void write_trace_csv(const std::string& path, const std::vector<EpochRecord>& trace,
                     std::uint64_t config_hash);

// In-memory variants used by tests and bindings.
TrainOutputs train_on_set(const ExperimentConfig& cfg, const ChannelSet& set, std::size_t k_cc,
                          const std::string& out_dir = "", const std::string& resume_from = "");
TrainOutputs baseline_on_set(const ExperimentConfig& cfg, const ChannelSet& set,
                             BaselineKind kind, std::size_t q = 0,
                             const std::string& out_dir = "");
ChannelSet synth_for_config(const ExperimentConfig& cfg);

}  // namespace bdris
