#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "semcomm/errors.hpp"
#include "semcomm/experiment.hpp"
#include "small_config.hpp"

using namespace semcomm;
using nlohmann::json;

TEST(Overhead, FiftyRowsAtThirtyTwoBits) {
    const std::size_t lengths[] = {16, 33};
    const auto r = experiment::overhead_from_lengths("t", lengths, true, 32, 32);
    EXPECT_EQ(r.transmitted_rows, 1u);
    EXPECT_EQ(r.unfused_rows, 50u);
    EXPECT_EQ(r.fused_bytes, 128u);
    EXPECT_EQ(r.unfused_bytes, 6400u);
    EXPECT_EQ(r.ratio_num, 1u);
    EXPECT_EQ(r.ratio_den, 50u);
    const auto q = experiment::overhead_from_lengths("t", lengths, true, 32, 8);
    EXPECT_EQ(q.fused_bytes, 32u);
    EXPECT_THROW(experiment::overhead_from_lengths("t", lengths, true, 32, 12), ConfigError);
}

TEST(Overhead, PresetsUseEncoderLengths) {
    model::ModelConfig cfg;
    const data::Geometry g;
    auto xr = model::preset_task("mm_xor", g);
    const auto r = experiment::overhead(xr, cfg);
    // 16 image tokens, 8 text tokens, one task row; d = 32 at 4 bytes.
    EXPECT_EQ(r.unfused_rows, 25u);
    EXPECT_EQ(r.fused_bytes, 128u);
    EXPECT_EQ(r.unfused_bytes, 25u * 128u);
    EXPECT_EQ(r.ratio_den, 25u);
    auto img = model::preset_task("img_class", g);
    const auto s = experiment::overhead(img, cfg);
    EXPECT_FALSE(s.fused);
    EXPECT_EQ(s.ratio(), 1.0);
    EXPECT_EQ(s.transmitted_rows, 17u);
}

TEST(Output, FormatValue) {
    EXPECT_EQ(experiment::format_value(0.5), "0.500000");
    EXPECT_EQ(experiment::format_value(-0.0), "0.000000");
    EXPECT_EQ(experiment::format_value(-1e-9), "0.000000");
    EXPECT_EQ(experiment::format_value(std::numeric_limits<double>::infinity()), "100.000000");
}

TEST(Output, ResultsCsv) {
    std::ostringstream empty;
    experiment::write_results_csv(empty, {});
    EXPECT_EQ(empty.str(), "task,channel,snr_db,metric_name,value,seed\n");

    const train::ResultRow rows[] = {{"b", "awgn", 6.0, "accuracy", 0.25, 3},
                                     {"a", "rayleigh", -6.0, "bleu", 1.0, 3},
                                     {"a", "awgn", 18.0, "psnr", 31.123456789, 3},
                                     {"a", "awgn", -6.0, "psnr", 10.0, 3}};
    std::ostringstream os;
    experiment::write_results_csv(os, rows);
    EXPECT_EQ(os.str(),
              "task,channel,snr_db,metric_name,value,seed\n"
              "a,awgn,-6.000000,psnr,10.000000,3\n"
              "a,awgn,18.000000,psnr,31.123457,3\n"
              "a,rayleigh,-6.000000,bleu,1.000000,3\n"
              "b,awgn,6.000000,accuracy,0.250000,3\n");
}

namespace {

json base_config() {
    return json::parse(R"({
        "seed": 4,
        "model": {"width": 16, "compressed": 4, "encoder_layers": 1, "encoder_heads": 2,
                  "fusion_layers": 1, "fusion_heads": 4, "conv_channels": 4},
        "tasks": [{"name": "x", "preset": "mm_xor", "dataset_size": 40}],
        "train": {"steps": 3, "batch_size": 8},
        "eval": {"snrs": [0, 12], "channels": ["awgn"]}
    })");
}

}  // namespace

TEST(Config, JsonRoundTrip) {
    const auto cfg = experiment::from_json(base_config());
    EXPECT_EQ(cfg.model.width, 16u);
    EXPECT_EQ(cfg.tasks.at(0).preset, "mm_xor");
    EXPECT_EQ(cfg.eval.snrs, (std::vector<double>{0.0, 12.0}));
    const auto again = experiment::from_json(experiment::to_json(cfg));
    EXPECT_EQ(experiment::to_json(again), experiment::to_json(cfg));
    EXPECT_EQ(again.model.canonical(), cfg.model.canonical());
}

TEST(Config, RejectsBadInput) {
    auto j = base_config();
    j["model"]["widht"] = 16;
    EXPECT_THROW(experiment::from_json(j), ConfigError);
    j = base_config();
    j["tasks"][0]["preset"] = "img_segmentation";
    EXPECT_THROW(experiment::from_json(j).validate(), ConfigError);
    j = base_config();
    j["tasks"].push_back(j["tasks"][0]);
    EXPECT_THROW(experiment::from_json(j).validate(), ConfigError);
    j = base_config();
    j["eval"]["channels"] = {"rician"};
    EXPECT_THROW(experiment::from_json(j), ConfigError);
    j = base_config();
    j["model"]["width"] = "wide";
    EXPECT_THROW(experiment::from_json(j), ConfigError);
    j = base_config();
    j["model"]["width"] = 18;
    EXPECT_THROW(experiment::from_json(j).validate(), ConfigError);
    EXPECT_THROW(experiment::load_config("/nonexistent/cfg.json"), IoError);
}

TEST(Config, SeedOverride) {
    auto cfg = experiment::from_json(base_config());
    ::setenv("SEMCOMM_SEED", "77", 1);
    experiment::apply_seed_override(cfg);
    EXPECT_EQ(cfg.seed, 77u);
    EXPECT_EQ(cfg.model.seed, 77u);
    EXPECT_EQ(cfg.train.seed, 77u);
    ::setenv("SEMCOMM_SEED", "7x", 1);
    EXPECT_THROW(experiment::apply_seed_override(cfg), ConfigError);
    ::unsetenv("SEMCOMM_SEED");
    experiment::apply_seed_override(cfg);
    EXPECT_EQ(cfg.seed, 77u);
}

TEST(Config, TaskDataSplit) {
    const auto cfg = experiment::from_json(base_config());
    const auto d = experiment::make_task_data(cfg, cfg.tasks[0]);
    EXPECT_EQ(d.train.size(), 32u);
    EXPECT_EQ(d.eval.size(), 8u);
}

TEST(Gradcheck, SuitePassesOnASmallModel) {
    auto cfg = small::model_config(8);
    cfg.fusion_heads = 2;
    const auto cases = experiment::gradcheck_suite(cfg, 1);
    ASSERT_FALSE(cases.empty());
    for (const auto& c : cases) {
        EXPECT_TRUE(c.ok()) << c.name << ": " << c.first_failure;
        EXPECT_GT(c.checked, 0u) << c.name;
    }
}
