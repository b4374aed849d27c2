#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semcomm/model.hpp"

namespace semcomm::train {

using ad::Tensor;

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
    AdamConfig cfg;
    std::vector<std::vector<double>> m, v;  // one entry per parameter, same order as the step's tensors
    std::uint64_t t = 0;

    bool operator==(const AdamState&) const = default;
};

AdamState make_adam(std::span<const Tensor> params, const AdamConfig& cfg);

/// One bias-corrected Adam update of every tensor in `params` from its
/// gradient. Throws ContractError when a parameter has no gradient.
void adam_step(std::span<const Tensor> params, AdamState& state);

struct TrainConfig {
    std::size_t steps = 2000;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    channel::Kind channel = channel::Kind::awgn;
    double snr_min_db = 0.0;
    double snr_max_db = 18.0;
    /// When set, every step uses this SNR instead of a uniform draw.
    std::optional<double> fixed_snr_db;
    /// Skip the channel entirely during training.
    bool noiseless = false;
};

struct TrainTask {
    std::size_t task = 0;
    std::vector<data::Sample> samples;
    double lr = 1e-4;
};

struct LossEntry {
    std::size_t step = 0;
    std::size_t epoch = 0;
    std::size_t task = 0;
    double snr_db = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    std::vector<LossEntry> log;
    std::vector<AdamState> optimizers;  // indexed like the TrainTask list
    std::size_t epochs_started = 0;
};

/// Called after every step with the step's entry and the current optimizers.
using StepHook = std::function<void(const LossEntry&, std::span<const AdamState>)>;

/// Joint training. Every step picks uniformly among tasks that still have
/// batches in the current epoch, runs that task's pipeline through the
/// training channel, and updates only with that task's optimizer over that
/// task's active parameters. Pools refill once all are empty.
TrainResult train(model::Model& m, std::span<const TrainTask> tasks, const TrainConfig& cfg,
                  const StepHook& hook = {});

struct ResultRow {
    std::string task;
    std::string channel;
    double snr_db = 0.0;
    std::string metric;
    double value = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const ResultRow&) const = default;
};

struct EvalTask {
    std::size_t task = 0;
    std::span<const data::Sample> samples;
};

/// Metric of `task` over `samples`. `ch` null means a noiseless link. The
/// noise stream is seeded from `seed` alone.
double evaluate_metric(const model::Model& m, std::size_t task, std::span<const data::Sample> samples,
                       const channel::ChannelConfig* ch, std::uint64_t seed);

/// SNR sweep: one row per (task, channel, snr), sorted by task name,
/// channel name and SNR. Each cell draws noise from its own seed derived
/// from (seed, task, channel, snr).
std::vector<ResultRow> evaluate(const model::Model& m, std::span<const EvalTask> tasks, std::span<const double> snrs,
                                std::span<const channel::Kind> kinds, std::uint64_t seed);

std::uint64_t cell_seed(std::uint64_t seed, std::size_t task, channel::Kind kind, double snr_db);

/// Checkpoint container: every parameter, plus "meta/step" and "meta/config_digest".
std::vector<std::uint8_t> save_checkpoint(const model::Model& m, std::uint64_t step);
/// Restores every parameter of `m`. Nothing is written unless the whole
/// container validates. Returns the stored step.
std::uint64_t load_checkpoint(model::Model& m, std::span<const std::uint8_t> bytes);

}  // namespace semcomm::train
