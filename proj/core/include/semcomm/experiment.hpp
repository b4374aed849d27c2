#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semcomm/train.hpp"

namespace semcomm::experiment {

struct TaskEntry {
    std::string name;    // unique task name
    std::string preset;  // see model::preset_names()
    /// Overrides the preset's modality set when non-empty (single-modality ablations).
    std::vector<Modality> modalities;
    std::size_t dataset_size = 1000;
    std::uint64_t dataset_seed = 0;
    double train_fraction = 0.8;
    double lr = 0.0;  // 0 selects the task default
};

struct EvalConfig {
    std::vector<double> snrs{-6.0, 0.0, 6.0, 12.0, 18.0};
    std::vector<channel::Kind> channels{channel::Kind::awgn, channel::Kind::rayleigh};
    /// Cap on evaluation samples per task; 0 keeps all.
    std::size_t max_samples = 0;
};

struct ExperimentConfig {
    model::ModelConfig model;
    std::vector<TaskEntry> tasks;
    train::TrainConfig train;
    EvalConfig eval;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";

    /// Cross-checks model geometry, task registry and training settings.
    void validate() const;
    std::vector<task::TaskSpec> task_specs() const;
};

/// Reads every documented key; unknown keys are rejected.
ExperimentConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies SEMCOMM_SEED, when set, to the experiment, model and training seeds.
void apply_seed_override(ExperimentConfig& cfg);
void set_seed(ExperimentConfig& cfg, std::uint64_t seed);

/// Generated data of one task, split into training and evaluation pools.
struct TaskData {
    std::vector<data::Sample> train;
    std::vector<data::Sample> eval;
};
data::DatasetSpec dataset_spec(const ExperimentConfig& cfg, const TaskEntry& t);
TaskData make_task_data(const ExperimentConfig& cfg, const TaskEntry& t);

// ---------------------------------------------------------------- overhead

struct OverheadRow {
    std::string task;
    bool fused = false;
    std::size_t transmitted_rows = 0;  // L_x
    std::size_t unfused_rows = 0;      // sum of L_M plus one
    std::size_t symbol_width = 0;      // d
    std::size_t bytes_per_symbol = 0;
    std::size_t fused_bytes = 0;
    std::size_t unfused_bytes = 0;
    /// fused_bytes / unfused_bytes as an exact fraction.
    std::size_t ratio_num = 1;
    std::size_t ratio_den = 1;

    double ratio() const { return static_cast<double>(ratio_num) / static_cast<double>(ratio_den); }
};

/// Per-instance transmitted bytes. Fused multi-modal tasks send one row;
/// single-modal tasks bypass fusion and report a ratio of 1.
OverheadRow overhead(const task::TaskSpec& spec, const model::ModelConfig& cfg, std::size_t symbol_bits = 32);
/// Same arithmetic from raw extents.
OverheadRow overhead_from_lengths(const std::string& task, std::span<const std::size_t> lengths, bool fused,
                                  std::size_t symbol_width, std::size_t symbol_bits = 32);

// ---------------------------------------------------------------- output

std::string format_value(double v);
/// task,channel,snr_db,metric_name,value,seed with rows sorted by task,
/// channel, snr; values with 6 decimals; LF line endings.
void write_results_csv(std::ostream& os, std::span<const train::ResultRow> rows);
void write_results_csv(const std::filesystem::path& path, std::span<const train::ResultRow> rows);
void write_loss_csv(const std::filesystem::path& path, const model::Model& m, std::span<const train::LossEntry> log);
void write_overhead_csv(const std::filesystem::path& path, std::span<const OverheadRow> rows);

// ---------------------------------------------------------------- gradcheck

struct GradcheckCase {
    std::string name;
    double worst_rel = 0.0;
    std::size_t checked = 0;
    std::size_t failures = 0;
    std::string first_failure;

    bool ok() const { return failures == 0; }
};

/// Central finite differences against the tape for every differentiable
/// operation and for a full fused pipeline built from `cfg` (noiseless
/// link). Relative error threshold `rel_tol`, absolute floor `abs_floor`.
std::vector<GradcheckCase> gradcheck_suite(const model::ModelConfig& cfg, std::uint64_t seed, double rel_tol = 1e-4,
                                           double abs_floor = 1e-7);

}  // namespace semcomm::experiment
