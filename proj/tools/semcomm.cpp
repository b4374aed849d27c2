// semcomm command-line front end.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "semcomm/errors.hpp"
#include "semcomm/experiment.hpp"

namespace fs = std::filesystem;
using namespace semcomm;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

experiment::ExperimentConfig load(const Common& c) {
    experiment::ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = experiment::load_config(c.config);
    } else {
        cfg.tasks.push_back({"mm_xor", "mm_xor", {}, 1000, 0, 0.8, 0.0});
    }
    if (c.seed) experiment::set_seed(cfg, *c.seed);
    experiment::apply_seed_override(cfg);
    if (!c.out.empty()) cfg.output_dir = c.out;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "Experiment JSON file (default: built-in mm_xor experiment)");
    cmd->add_option("-o,--out", c.out, "Output directory (overrides the config)");
    cmd->add_option("--seed", c.seed, "Seed (SEMCOMM_SEED takes precedence)");
}

struct Prepared {
    std::vector<experiment::TaskData> data;
    std::vector<train::TrainTask> train_tasks;
    std::vector<train::EvalTask> eval_tasks;
};

Prepared prepare(const experiment::ExperimentConfig& cfg, const model::Model& m) {
    Prepared p;
    for (const auto& t : cfg.tasks) p.data.push_back(experiment::make_task_data(cfg, t));
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        const auto& spec = m.tasks()[i];
        const double lr = cfg.tasks[i].lr > 0.0 ? cfg.tasks[i].lr : model::default_learning_rate(spec);
        p.train_tasks.push_back({i, p.data[i].train, lr});
        p.eval_tasks.push_back({i, p.data[i].eval});
    }
    return p;
}

std::vector<train::ResultRow> run_eval(const experiment::ExperimentConfig& cfg, const model::Model& m,
                                       const Prepared& p) {
    return train::evaluate(m, p.eval_tasks, cfg.eval.snrs, cfg.eval.channels, cfg.seed);
}

std::uint64_t train_and_save(const experiment::ExperimentConfig& cfg, model::Model& m, const Prepared& p) {
    const auto result = train::train(m, p.train_tasks, cfg.train);
    fs::create_directories(cfg.output_dir);
    experiment::write_loss_csv(cfg.output_dir / "loss.csv", m, result.log);
    io::write_file(cfg.output_dir / "model.ckpt", train::save_checkpoint(m, cfg.train.steps));
    std::cout << "trained " << cfg.train.steps << " steps over " << result.epochs_started << " epoch(s); wrote "
              << (cfg.output_dir / "model.ckpt").string() << "\n";
    return cfg.train.steps;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-modal multi-task semantic communication toolkit"};
    app.require_subcommand(1);

    Common common;
    std::string checkpoint;
    std::size_t symbol_bits = 32;
    std::vector<double> snrs;
    std::vector<std::string> channels;

    auto* gen = app.add_subcommand("gen-data", "Generate the configured datasets as containers");
    add_common(gen, common);

    auto* tr = app.add_subcommand("train", "Train all configured tasks jointly");
    add_common(tr, common);

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint over SNRs and channels");
    add_common(ev, common);
    ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    ev->add_option("--snr", snrs, "SNR values in dB (overrides the config)");
    ev->add_option("--channel", channels, "Channel kinds: awgn, rayleigh (overrides the config)");

    auto* sw = app.add_subcommand("sweep", "Train (unless --checkpoint is given) and evaluate the full SNR sweep");
    add_common(sw, common);
    sw->add_option("--checkpoint", checkpoint, "Skip training and load this checkpoint");

    auto* ov = app.add_subcommand("overhead", "Per-task transmitted bytes, fused vs unfused");
    add_common(ov, common);
    ov->add_option("--symbol-bits", symbol_bits, "Bits per transmitted symbol")->check(CLI::IsMember({8, 16, 32}));

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every operation and the full pipelines");
    add_common(gc, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        auto cfg = load(common);
        if (!snrs.empty()) cfg.eval.snrs = snrs;
        if (!channels.empty()) {
            cfg.eval.channels.clear();
            for (const auto& c : channels) cfg.eval.channels.push_back(channel::parse_kind(c));
        }

        if (*gen) {
            fs::create_directories(cfg.output_dir);
            for (const auto& t : cfg.tasks) {
                const auto ds = data::gen_dataset(experiment::dataset_spec(cfg, t));
                const auto path = cfg.output_dir / (t.name + ".semds");
                data::save_dataset(ds, path.string());
                std::cout << "wrote " << ds.size() << " samples to " << path.string() << "\n";
            }
            return 0;
        }
        if (*ov) {
            std::vector<experiment::OverheadRow> rows;
            for (const auto& spec : cfg.task_specs()) rows.push_back(experiment::overhead(spec, cfg.model, symbol_bits));
            const auto path = cfg.output_dir / "overhead.csv";
            experiment::write_overhead_csv(path, rows);
            for (const auto& r : rows) {
                std::cout << r.task << ": " << r.fused_bytes << " B fused, " << r.unfused_bytes << " B unfused, ratio "
                          << r.ratio_num << "/" << r.ratio_den << "\n";
            }
            return 0;
        }
        if (*gc) {
            const auto cases = experiment::gradcheck_suite(cfg.model, cfg.seed);
            bool ok = true;
            for (const auto& c : cases) {
                std::printf("%-28s %s  checked=%zu worst_rel=%.3e%s%s\n", c.name.c_str(), c.ok() ? "PASS" : "FAIL",
                            c.checked, c.worst_rel, c.ok() ? "" : "  ", c.first_failure.c_str());
                ok = ok && c.ok();
            }
            return ok ? 0 : kExitValidation;
        }

        model::Model m(cfg.model, cfg.task_specs());
        const Prepared p = prepare(cfg, m);
        if (*tr) {
            train_and_save(cfg, m, p);
            return 0;
        }
        if (!checkpoint.empty()) {
            const auto step = train::load_checkpoint(m, io::read_file(checkpoint));
            std::cout << "loaded checkpoint at step " << step << "\n";
        } else {
            train_and_save(cfg, m, p);
        }
        const auto rows = run_eval(cfg, m, p);
        const auto path = cfg.output_dir / "results.csv";
        experiment::write_results_csv(path, rows);
        std::cout << "wrote " << rows.size() << " rows to " << path.string() << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "semcomm: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "semcomm: " << e.what() << "\n";
        return kExitValidation;
    }
}
