#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ctc_oracle.hpp"
#include "fd_oracle.hpp"
#include "semcomm/errors.hpp"
#include "semcomm/metrics.hpp"
#include "semcomm/ops.hpp"
#include "semcomm/tasks.hpp"

using namespace semcomm;
using ad::Tensor;
using task::HeadKind;
using task::LossKind;
using task::MetricKind;

namespace {

task::TaskSpec spec(HeadKind h, LossKind l, MetricKind m, std::size_t outputs) {
    task::TaskSpec s;
    s.name = "t";
    s.modalities = {Modality::image};
    s.head = h;
    s.loss = l;
    s.metric = m;
    s.outputs = outputs;
    return s;
}

}  // namespace

TEST(TaskSpec, ValidatesTriples) {
    EXPECT_NO_THROW(spec(HeadKind::class_vec, LossKind::cross_entropy, MetricKind::accuracy, 4).validate());
    EXPECT_NO_THROW(spec(HeadKind::class_vec, LossKind::binary_cross_entropy, MetricKind::f1, 4).validate());
    EXPECT_NO_THROW(spec(HeadKind::class_seq, LossKind::ctc, MetricKind::word_accuracy, 5).validate());
    EXPECT_NO_THROW(spec(HeadKind::recon_image, LossKind::mse, MetricKind::psnr, 12).validate());
    EXPECT_THROW(spec(HeadKind::class_vec, LossKind::ctc, MetricKind::accuracy, 4).validate(), ConfigError);
    EXPECT_THROW(spec(HeadKind::recon_image, LossKind::mse, MetricKind::bleu, 4).validate(), ConfigError);
    auto s = spec(HeadKind::class_vec, LossKind::cross_entropy, MetricKind::accuracy, 4);
    s.modalities = {Modality::text, Modality::text};
    EXPECT_THROW(s.validate(), ConfigError);
    s.modalities.clear();
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(TaskSpec, ParseRoundTrip) {
    EXPECT_EQ(task::parse_head("class_seq"), HeadKind::class_seq);
    EXPECT_EQ(task::parse_loss("ctc"), LossKind::ctc);
    EXPECT_EQ(task::parse_metric("psnr"), MetricKind::psnr);
    EXPECT_THROW(task::parse_metric("rouge"), ConfigError);
}

TEST(TaskHead, SelectorWeightsPassFeatures) {
    nn::ParamStore store;
    Rng rng(1);
    task::TaskHead head(store, "h", spec(HeadKind::class_vec, LossKind::cross_entropy, MetricKind::accuracy, 3), 5, rng);
    auto w = head.first.weight.data();
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) head.first.weight.at(i, i) = 1.0;
    Tensor f = Tensor::matrix(1, 5, {0.5, -1, 2, 7, 9});
    Tensor y = head.forward(f);
    ASSERT_EQ(y.shape(), (ad::Shape{1, 3}));
    EXPECT_DOUBLE_EQ(y[0], 0.5);
    EXPECT_DOUBLE_EQ(y[1], -1);
    EXPECT_DOUBLE_EQ(y[2], 2);
}

TEST(TaskHead, SequenceHeadSharesWeights) {
    nn::ParamStore store;
    Rng rng(2);
    task::TaskHead head(store, "h", spec(HeadKind::class_seq, LossKind::ctc, MetricKind::word_accuracy, 4), 6, rng);
    Tensor row = fd::random_tensor({1, 6}, rng, -1, 1, false);
    const Tensor parts[] = {row, row, row};
    Tensor y = head.forward(ad::concat_rows(parts));
    ASSERT_EQ(y.shape(), (ad::Shape{3, 4}));
    for (std::size_t r = 1; r < 3; ++r)
        for (std::size_t c = 0; c < 4; ++c) EXPECT_DOUBLE_EQ(y.at(r, c), y.at(0, c));
}

TEST(TaskHead, ReconImageLengthAndTwoLayers) {
    nn::ParamStore store;
    Rng rng(3);
    auto s = spec(HeadKind::recon_image, LossKind::mse, MetricKind::psnr, 3 * 4 * 4);
    s.hidden = 10;
    task::TaskHead head(store, "h", s, 8, rng);
    EXPECT_TRUE(head.second.has_value());
    Tensor y = head.forward(fd::random_tensor({5, 8}, rng, -1, 1, false));
    EXPECT_EQ(y.size(), 48u);
    EXPECT_THROW(head.forward(fd::random_tensor({5, 7}, rng, -1, 1, false)), ContractError);
}

TEST(CrossEntropy, Examples) {
    Tensor u = Tensor::matrix(1, 4, {0.3, 0.3, 0.3, 0.3});
    EXPECT_NEAR(task::cross_entropy_loss(u, 2).item(), std::log(4.0), 1e-12);
    Tensor peaked = Tensor::matrix(1, 3, {0, 1e3, 0});
    EXPECT_LT(task::cross_entropy_loss(peaked, 1).item(), 1e-6);
    EXPECT_THROW(task::cross_entropy_loss(u, 4), ContractError);
    Rng rng(4);
    Tensor z = fd::random_tensor({1, 6}, rng);
    auto r = fd::check([&] { return task::cross_entropy_loss(z, 3); }, {z}, rng, 1e-5);
    EXPECT_TRUE(r.ok()) << r.first_failure;
    EXPECT_GE(task::cross_entropy_loss(z, 0).item(), 0.0);
}

TEST(BinaryCrossEntropy, Examples) {
    const int one[] = {1, 1};
    EXPECT_NEAR(task::binary_cross_entropy_multilabel(Tensor::matrix(1, 2, {0, 0}), one).item(), std::log(2.0), 1e-12);
    const int hi[] = {1};
    EXPECT_LT(task::binary_cross_entropy_multilabel(Tensor::matrix(1, 1, {1e3}), hi).item(), 1e-12);
    const int bad[] = {2};
    EXPECT_THROW(task::binary_cross_entropy_multilabel(Tensor::matrix(1, 1, {0}), bad), ContractError);

    // Extended-precision direct evaluation.
    Rng rng(5);
    Tensor z = fd::random_tensor({1, 5}, rng, -4, 4, false);
    const int y[] = {1, 0, 1, 1, 0};
    long double want = 0;
    for (int i = 0; i < 5; ++i) {
        const long double p = 1.0L / (1.0L + std::exp(-static_cast<long double>(z[i])));
        want -= y[i] ? std::log(p) : std::log(1.0L - p);
    }
    EXPECT_NEAR(task::binary_cross_entropy_multilabel(z, y).item(), static_cast<double>(want / 5), 1e-13);
}

TEST(Ctc, Examples) {
    const std::size_t one[] = {0};
    EXPECT_NEAR(task::ctc_loss(Tensor::matrix(1, 2, {0.7, 0.7}), one).loss.item(), std::log(2.0), 1e-12);

    Tensor two = Tensor::matrix(2, 3, {0.1, -0.4, 0.9, 1.2, 0.3, -0.2});
    auto lp = [&](std::size_t t, std::size_t c) {
        double z = 0;
        for (std::size_t k = 0; k < 3; ++k) z += std::exp(two.at(t, k));
        return two.at(t, c) - std::log(z);
    };
    EXPECT_NEAR(task::ctc_loss(two, {}).loss.item(), -(lp(0, 2) + lp(1, 2)), 1e-12);

    const std::size_t rep[] = {1, 1};
    auto r = task::ctc_loss(two, rep);
    EXPECT_TRUE(r.infeasible);
    EXPECT_TRUE(std::isinf(r.loss.item()));
    EXPECT_EQ(task::ctc_min_frames(rep), 3u);
    const std::size_t blank_label[] = {2};
    EXPECT_THROW(task::ctc_loss(two, blank_label), ContractError);
}

TEST(Ctc, MatchesExhaustiveEnumerationT4) {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = fd::random_tensor({4, 3}, rng, -2, 2, false);
        std::vector<std::size_t> label;
        const std::size_t u = rng.index(3);
        for (std::size_t i = 0; i < u; ++i) label.push_back(rng.index(2));
        const double want = ctc_oracle::brute_force_nll(x.data(), 4, 3, label);
        EXPECT_NEAR(task::ctc_loss(x, label).loss.item(), want, 1e-9);
    }
}

TEST(Ctc, GradientMatchesFiniteDifferences) {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor x = fd::random_tensor({5, 4}, rng);
        const std::size_t label[] = {0, 2, 2};
        auto r = fd::check([&] { return task::ctc_loss(x, label).loss; }, {x}, rng);
        EXPECT_TRUE(r.ok()) << r.first_failure;
    }
}

TEST(Ctc, GreedyDecode) {
    auto rows = [](std::vector<std::size_t> argmax) {
        Tensor t = Tensor::zeros({argmax.size(), 3});
        for (std::size_t r = 0; r < argmax.size(); ++r) t.at(r, argmax[r]) = 1.0;
        return t;
    };
    const std::size_t a = 0, b = 1, blank = 2;
    EXPECT_EQ(task::ctc_greedy_decode(rows({a, a, blank, b})), (std::vector<std::size_t>{a, b}));
    EXPECT_TRUE(task::ctc_greedy_decode(rows({blank, blank})).empty());
    EXPECT_EQ(task::ctc_greedy_decode(rows({a, blank, a})), (std::vector<std::size_t>{a, a}));
}

TEST(Metrics, Accuracy) {
    const std::size_t ref[] = {0, 1, 2, 3};
    const std::size_t wrong[] = {1, 2, 3, 0};
    EXPECT_DOUBLE_EQ(metric::accuracy(ref, ref), 1.0);
    EXPECT_DOUBLE_EQ(metric::accuracy(wrong, ref), 0.0);
    // Relabeling classes consistently on both sides leaves accuracy unchanged.
    const std::size_t pred[] = {0, 1, 1, 3};
    const std::size_t perm[] = {2, 0, 3, 1};
    std::vector<std::size_t> pp, rr;
    for (int i = 0; i < 4; ++i) pp.push_back(perm[pred[i]]), rr.push_back(perm[ref[i]]);
    EXPECT_DOUBLE_EQ(metric::accuracy(pp, rr), metric::accuracy(pred, ref));
    EXPECT_THROW(metric::accuracy(pred, std::span<const std::size_t>(ref, 3)), ContractError);
}

TEST(Metrics, WordAccuracy) {
    const std::vector<metric::Sequence> ref{{1, 2, 3}};
    EXPECT_NEAR(metric::word_accuracy(std::vector<metric::Sequence>{{1, 9, 3}}, ref), 2.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(metric::word_accuracy(ref, ref), 1.0);
    // Many insertions clamp at 0.
    EXPECT_DOUBLE_EQ(metric::word_accuracy(std::vector<metric::Sequence>{{5, 5, 5, 5, 5, 5, 5}}, ref), 0.0);
    // Empty references are skipped.
    const std::vector<metric::Sequence> refs{{}, {1, 2}};
    const std::vector<metric::Sequence> hyps{{4}, {1, 2}};
    EXPECT_DOUBLE_EQ(metric::word_accuracy(hyps, refs), 1.0);
    const std::size_t a[] = {1, 2, 3, 4}, b[] = {2, 3, 5};
    EXPECT_EQ(metric::edit_distance(a, b), 2u);
}

TEST(Metrics, Bleu) {
    const std::size_t x[] = {1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(metric::bleu(x, x), 1.0);
    const std::size_t none[] = {7, 8, 9, 10};
    EXPECT_DOUBLE_EQ(metric::bleu(none, x), 0.0);
    const std::size_t cand[] = {1, 2, 3, 4}, ref[] = {1, 2, 3, 5};
    EXPECT_DOUBLE_EQ(metric::bleu(cand, ref), 0.0);
    EXPECT_DOUBLE_EQ(metric::bleu({}, x), 0.0);
    // Short candidate: brevity penalty exp(1 - 5/4) on a perfect-precision prefix.
    const std::size_t prefix[] = {1, 2, 3, 4};
    EXPECT_NEAR(metric::bleu(prefix, x), std::exp(1.0 - 5.0 / 4.0), 1e-15);
    // Clipped counts: "1 1 1 1 1" vs "1 2 3 4 5": p1 = 1/5, p2 = 0.
    const std::size_t ones[] = {1, 1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(metric::bleu(ones, x), 0.0);
}

TEST(Metrics, F1) {
    const int t[] = {1, 0, 1, 0, 1, 0};
    EXPECT_DOUBLE_EQ(metric::micro_f1(t, t), 1.0);
    const int zeros[] = {0, 0, 0, 0, 0, 0};
    EXPECT_DOUBLE_EQ(metric::micro_f1(zeros, t), 0.0);
    // TP = 2, FP = 1, FN = 1.
    const int p[] = {1, 1, 1, 0};
    const int y[] = {1, 1, 0, 1};
    EXPECT_NEAR(metric::micro_f1(p, y), 2.0 / 3.0, 1e-15);
    const auto c = metric::confusion(p, y);
    EXPECT_EQ(c.tp, 2u);
    EXPECT_EQ(c.fp, 1u);
    EXPECT_EQ(c.fn, 1u);
    // Macro over 2 labels: label 0 cells {1,1} vs {1,0} -> 2/3; label 1 cells {1,0} vs {1,1} -> 2/3.
    EXPECT_NEAR(metric::macro_f1(p, y, 2), 2.0 / 3.0, 1e-15);
    const int q[] = {1, 0, 0, 0};
    // label 0: {1,0} vs {1,0} -> 1; label 1: {0,0} vs {1,1} -> 0.
    EXPECT_NEAR(metric::macro_f1(q, y, 2), 0.5, 1e-15);
}

TEST(Metrics, Psnr) {
    const double a[] = {0.0, 0.0, 0.0, 0.0};
    const double b[] = {0.1, -0.1, 0.1, -0.1};
    EXPECT_NEAR(metric::psnr(a, b, 1.0), 20.0, 1e-12);
    EXPECT_EQ(metric::psnr(a, a, 1.0), metric::kPsnrInfinite);
    EXPECT_DOUBLE_EQ(metric::capped_psnr(metric::psnr(a, a, 1.0)), 100.0);
    const double c[] = {1.0, -1.0, 1.0, -1.0};
    EXPECT_NEAR(metric::psnr(a, c, 255.0), 20.0 * std::log10(255.0), 1e-12);
    EXPECT_NEAR(metric::psnr(a, c, 255.0), 48.13, 5e-3);
    EXPECT_THROW(metric::psnr(a, std::span<const double>(b, 3), 1.0), ContractError);
}
