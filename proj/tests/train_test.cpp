#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "semcomm/errors.hpp"
#include "semcomm/ops.hpp"
#include "semcomm/train.hpp"
#include "small_config.hpp"

using namespace semcomm;
using ad::Tensor;

namespace {

std::vector<data::Sample> samples(data::DatasetKind k, std::size_t n, std::uint64_t seed = 1) {
    data::DatasetSpec s;
    s.kind = k;
    s.size = n;
    s.seed = seed;
    return data::gen_dataset(s).samples;
}

std::vector<task::TaskSpec> two_tasks() {
    const data::Geometry g;
    auto a = model::preset_task("img_class", g);
    auto b = model::preset_task("mm_xor", g);
    a.name = "img";
    b.name = "xor";
    return {a, b};
}

std::map<std::string, std::vector<double>> snapshot(const model::Model& m) {
    std::map<std::string, std::vector<double>> out;
    for (const auto& [name, t] : m.params().items()) out[name].assign(t.data().begin(), t.data().end());
    return out;
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
    Tensor p(ad::Shape{3}, {1.0, -2.0, 0.5}, true);
    const Tensor params[] = {p};
    auto st = train::make_adam(params, {0.1});
    ad::backward(ad::sum(ad::mul(p, Tensor(ad::Shape{3}, {2.0, -3.0, 0.0}))));
    train::adam_step(params, st);
    // m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps).
    EXPECT_NEAR(p[0], 1.0 - 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
    EXPECT_NEAR(p[1], -2.0 + 0.1 * 3.0 / (3.0 + 1e-8), 1e-15);
    EXPECT_DOUBLE_EQ(p[2], 0.5);
    EXPECT_EQ(st.t, 1u);
    EXPECT_DOUBLE_EQ(st.m[0][0], 0.2);
    EXPECT_NEAR(st.v[0][1], 0.001 * 9.0, 1e-15);
}

TEST(Adam, SecondStepBiasCorrection) {
    Tensor p = Tensor::scalar(0.0, true);
    const Tensor params[] = {p};
    auto st = train::make_adam(params, {0.01});
    for (double g : {1.0, 3.0}) {
        p.clear_grad();
        ad::backward(ad::scale(p, g));
        train::adam_step(params, st);
    }
    const double m = (0.9 * 0.1 * 1.0 + 0.1 * 3.0) / (1 - 0.81);
    const double v = (0.999 * 0.001 * 1.0 + 0.001 * 9.0) / (1 - 0.999 * 0.999);
    EXPECT_NEAR(p.item(), -0.01 / (1.0 + 1e-8) - 0.01 * m / (std::sqrt(v) + 1e-8), 1e-15);
}

TEST(Adam, MissingGradientIsAContractError) {
    Tensor p = Tensor::scalar(1.0, true);
    const Tensor params[] = {p};
    auto st = train::make_adam(params, {});
    EXPECT_THROW(train::adam_step(params, st), ContractError);
}

TEST(Train, EpochAccountingAndIsolation) {
    model::Model m(small::model_config(), two_tasks());
    std::vector<train::TrainTask> tasks{{0, samples(data::DatasetKind::img_class, 32), 1e-3},
                                        {1, samples(data::DatasetKind::mm_xor, 16), 1e-3}};
    train::TrainConfig cfg;
    cfg.steps = 7;
    cfg.batch_size = 16;

    const auto img_only = m.active_parameters(0), xor_only = m.active_parameters(1);
    EXPECT_EQ(std::count(img_only.begin(), img_only.end(), "head.xor.linear1.weight"), 0);
    EXPECT_EQ(std::count(xor_only.begin(), xor_only.end(), "head.img.linear1.weight"), 0);

    std::vector<train::AdamState> before;
    auto params_before = snapshot(m);
    std::vector<std::size_t> per_epoch(3, 0);
    auto result = train::train(m, tasks, cfg, [&](const train::LossEntry& e, std::span<const train::AdamState> opt) {
        ++per_epoch.at(e.epoch);
        if (!before.empty()) {
            const std::size_t other = 1 - e.task;
            EXPECT_EQ(opt[other], before[other]) << "step " << e.step;
            EXPECT_EQ(opt[e.task].t, before[e.task].t + 1);
        }
        before.assign(opt.begin(), opt.end());

        // Only the picked task's active parameters moved.
        const auto now = snapshot(m);
        const auto active = m.active_parameters(e.task);
        for (const auto& [name, vals] : now) {
            const bool is_active = std::count(active.begin(), active.end(), name) > 0;
            if (!is_active) EXPECT_EQ(vals, params_before[name]) << name << " at step " << e.step;
        }
        params_before = now;
    });
    // Three batches per epoch: two img, one xor.
    EXPECT_EQ(result.epochs_started, 3u);
    EXPECT_EQ(per_epoch, (std::vector<std::size_t>{3, 3, 1}));
    EXPECT_EQ(result.optimizers[0].t + result.optimizers[1].t, 7u);
    EXPECT_EQ(result.optimizers[0].t, 5u);
}

TEST(Train, DeterministicForASeed) {
    auto run = [](std::uint64_t seed) {
        auto cfg = small::model_config();
        model::Model m(cfg, two_tasks());
        std::vector<train::TrainTask> tasks{{0, samples(data::DatasetKind::img_class, 16), 1e-3},
                                            {1, samples(data::DatasetKind::mm_xor, 16), 1e-3}};
        train::TrainConfig tc;
        tc.steps = 4;
        tc.seed = seed;
        auto r = train::train(m, tasks, tc);
        return std::make_pair(snapshot(m), r.log.back().loss);
    };
    const auto a = run(3), b = run(3), c = run(4);
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
    EXPECT_NE(a.first, c.first);
}

TEST(Train, RejectsBadConfig) {
    model::Model m(small::model_config(), two_tasks());
    std::vector<train::TrainTask> empty{{0, {}, 1e-3}};
    EXPECT_THROW(train::train(m, empty, {}), ConfigError);
    std::vector<train::TrainTask> zero_lr{{0, samples(data::DatasetKind::img_class, 4), 0.0}};
    EXPECT_THROW(train::train(m, zero_lr, {}), ConfigError);
}

TEST(Evaluate, GridIsCompleteAndSorted) {
    model::Model m(small::model_config(), two_tasks());
    const auto img = samples(data::DatasetKind::img_class, 8), xr = samples(data::DatasetKind::mm_xor, 8);
    const train::EvalTask tasks[] = {{1, xr}, {0, img}};
    const double snrs[] = {18.0, -6.0, 6.0};
    const channel::Kind kinds[] = {channel::Kind::rayleigh, channel::Kind::awgn};
    const auto rows = train::evaluate(m, tasks, snrs, kinds, 5);
    ASSERT_EQ(rows.size(), 12u);
    EXPECT_EQ(rows.front().task, "img");
    EXPECT_EQ(rows.front().channel, "awgn");
    EXPECT_EQ(rows.front().snr_db, -6.0);
    EXPECT_EQ(rows.back().task, "xor");
    EXPECT_EQ(rows.back().channel, "rayleigh");
    EXPECT_EQ(rows.back().snr_db, 18.0);
    for (const auto& r : rows) {
        EXPECT_EQ(r.metric, "accuracy");
        EXPECT_EQ(r.seed, 5u);
        EXPECT_GE(r.value, 0.0);
        EXPECT_LE(r.value, 1.0);
    }
    EXPECT_EQ(rows, train::evaluate(m, tasks, snrs, kinds, 5));
}

TEST(Evaluate, VeryHighSnrMatchesNoiseless) {
    model::Model m(small::model_config(), two_tasks());
    const auto xr = samples(data::DatasetKind::mm_xor, 32);
    channel::ChannelConfig ch{channel::Kind::awgn, 300.0, 0, true};
    EXPECT_DOUBLE_EQ(train::evaluate_metric(m, 1, xr, &ch, 1), train::evaluate_metric(m, 1, xr, nullptr, 1));
    ch.kind = channel::Kind::rayleigh;
    EXPECT_DOUBLE_EQ(train::evaluate_metric(m, 1, xr, &ch, 1), train::evaluate_metric(m, 1, xr, nullptr, 1));
}

TEST(Checkpoint, RoundTripIsExact) {
    auto cfg = small::model_config();
    model::Model a(cfg, two_tasks());
    std::vector<train::TrainTask> tasks{{1, samples(data::DatasetKind::mm_xor, 16), 1e-3}};
    train::TrainConfig tc;
    tc.steps = 2;
    train::train(a, tasks, tc);
    const auto bytes = train::save_checkpoint(a, 2);

    cfg.seed = 99;
    model::Model b(cfg, two_tasks());
    EXPECT_NE(snapshot(a), snapshot(b));
    EXPECT_EQ(train::load_checkpoint(b, bytes), 2u);
    // Parameters are stored as 32-bit floats; a second save is byte-identical.
    EXPECT_EQ(train::save_checkpoint(b, 2), bytes);
    const auto xr = samples(data::DatasetKind::mm_xor, 16, 7);
    EXPECT_NEAR(train::evaluate_metric(a, 1, xr, nullptr, 1), train::evaluate_metric(b, 1, xr, nullptr, 1), 1e-3);
}

TEST(Checkpoint, BadContainersLeaveTheModelUntouched) {
    auto cfg = small::model_config();
    model::Model a(cfg, two_tasks());
    const auto bytes = train::save_checkpoint(a, 0);
    cfg.seed = 5;
    model::Model b(cfg, two_tasks());
    const auto before = snapshot(b);

    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 9);
    EXPECT_THROW(train::load_checkpoint(b, truncated), LoadError);
    auto flipped = bytes;
    flipped[40] ^= 1;
    EXPECT_THROW(train::load_checkpoint(b, flipped), LoadError);

    auto other_cfg = small::model_config();
    other_cfg.compressed = 8;
    model::Model c(other_cfg, two_tasks());
    EXPECT_THROW(train::load_checkpoint(c, bytes), VersionError);

    auto records = io::decode(bytes);
    EXPECT_THROW(train::load_checkpoint(b, io::encode(records, 7)), VersionError);
    EXPECT_EQ(snapshot(b), before);
}
