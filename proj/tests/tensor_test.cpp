#include <gtest/gtest.h>

#include <cmath>

#include "fd_oracle.hpp"
#include "semcomm/errors.hpp"
#include "semcomm/ops.hpp"

using namespace semcomm;
using ad::Tensor;

namespace {

Tensor mat(std::size_t r, std::size_t c, std::vector<double> d, bool rg = false) {
    return Tensor::matrix(r, c, std::move(d), rg);
}

void expect_near_all(const Tensor& t, const std::vector<double>& want, double tol) {
    ASSERT_EQ(t.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(t[i], want[i], tol) << "index " << i;
}

// Direct nested-loop convolution used as an independent oracle.
std::vector<double> naive_conv2d(const Tensor& x, const Tensor& k, std::size_t stride, std::size_t pad) {
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const std::size_t K = k.dim(0), kh = k.dim(2), kw = k.dim(3);
    const std::size_t Ho = (H + 2 * pad - kh) / stride + 1, Wo = (W + 2 * pad - kw) / stride + 1;
    std::vector<double> out(K * Ho * Wo, 0.0);
    for (std::size_t o = 0; o < K; ++o)
        for (std::size_t y = 0; y < Ho; ++y)
            for (std::size_t xo = 0; xo < Wo; ++xo) {
                double s = 0.0;
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t i = 0; i < kh; ++i)
                        for (std::size_t j = 0; j < kw; ++j) {
                            const long yy = long(y * stride + i) - long(pad);
                            const long xx = long(xo * stride + j) - long(pad);
                            if (yy < 0 || xx < 0 || yy >= long(H) || xx >= long(W)) continue;
                            s += k[((o * C + c) * kh + i) * kw + j] * x[(c * H + std::size_t(yy)) * W + std::size_t(xx)];
                        }
                out[(o * Ho + y) * Wo + xo] = s;
            }
    return out;
}

std::vector<double> naive_causal(const Tensor& x, const Tensor& k) {
    const std::size_t T = x.dim(0), C = x.dim(1), K = k.dim(0), kw = k.dim(2);
    // Explicitly left-pad with kw-1 zero rows.
    std::vector<double> padded((T + kw - 1) * C, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < C; ++c) padded[(t + kw - 1) * C + c] = x[t * C + c];
    std::vector<double> out(T * K, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t o = 0; o < K; ++o) {
            double s = 0.0;
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t j = 0; j < kw; ++j) s += k[(o * C + c) * kw + j] * padded[(t + j) * C + c];
            out[t * K + o] = s;
        }
    return out;
}

}  // namespace

TEST(Tensor, ShapeInvariant) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
    Tensor t = Tensor::zeros({2, 3}, true);
    EXPECT_EQ(t.size(), 6u);
    EXPECT_FALSE(t.has_grad());
    t.accumulate_grad(std::vector<double>(6, 2.0));
    t.zero_grad();
    for (double g : t.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Matmul, IdentityAndSelector) {
    Tensor eye = mat(2, 2, {1, 0, 0, 1});
    Tensor m = mat(2, 2, {1, 2, 3, 4});
    expect_near_all(ad::matmul(eye, m), {1, 2, 3, 4}, 0.0);
    Tensor sel = mat(1, 2, {1, 0});
    expect_near_all(ad::matmul(sel, mat(2, 1, {7.5, -3})), {7.5}, 0.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
    try {
        ad::matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}));
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2x3]"), std::string::npos);
        EXPECT_NE(msg.find("[4x2]"), std::string::npos);
    }
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
    Rng rng(11);
    Tensor a = fd::random_tensor({3, 4}, rng), b = fd::random_tensor({4, 2}, rng);
    auto r = fd::check([&] { return ad::matmul(a, b); }, {a, b}, rng, 1e-6);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Elementwise, Identities) {
    Rng rng(3);
    Tensor x = fd::random_tensor({3, 4}, rng, -2, 2, false);
    Tensor z = ad::add(x, Tensor::zeros({3, 4}));
    Tensor o = ad::mul(x, Tensor::full({3, 4}, 1.0));
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(z[i], x[i]);
        EXPECT_EQ(o[i], x[i]);
    }
}

TEST(Elementwise, BroadcastGradientIsColumnSum) {
    Rng rng(5);
    Tensor m = fd::random_tensor({4, 3}, rng), row = fd::random_tensor({3}, rng);
    for (auto kind : {ad::Elementwise::add, ad::Elementwise::sub, ad::Elementwise::mul}) {
        auto r = fd::check([&] { return ad::elementwise(kind, m, row); }, {m, row}, rng);
        EXPECT_TRUE(r.ok()) << r.first_failure;
    }
    // Upstream gradient of ones: row gradient equals column sums of ones = 4.
    row.zero_grad();
    ad::backward(ad::sum(ad::add(m, row)));
    for (double g : row.grad()) EXPECT_DOUBLE_EQ(g, 4.0);
}

TEST(Elementwise, RejectsNonBroadcastable) {
    EXPECT_THROW(ad::add(Tensor::zeros({4, 3}), Tensor::zeros({4})), DimensionError);
    EXPECT_THROW(ad::mul(Tensor::zeros({4, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST(Softmax, AnalyticRows) {
    expect_near_all(ad::softmax_rows(mat(1, 3, {0, 0, 0})), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
    const double c = 0.37;
    expect_near_all(ad::softmax_rows(mat(1, 2, {c, c + std::log(2.0)})), {1.0 / 3, 2.0 / 3}, 1e-15);
}

TEST(Softmax, LargeEntryIsStable) {
    Tensor y = ad::softmax_rows(mat(1, 4, {0, 1e4, 0, 0}));
    // Extended-precision reference: exp(-1e4) underflows even in long double
    // relative to 1, so the exact answer is one-hot to far below 1e-12.
    long double tail = std::exp(-10000.0L);
    EXPECT_NEAR(y[1], static_cast<double>(1.0L / (1.0L + 3.0L * tail)), 1e-12);
    for (std::size_t i : {0u, 2u, 3u}) EXPECT_NEAR(y[i], 0.0, 1e-12);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(std::isfinite(y[i]));
}

TEST(Softmax, RowsSumToOneProperty) {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + rng.index(6), n = 1 + rng.index(9);
        Tensor x = fd::random_tensor({m, n}, rng, -50, 50, false);
        Tensor y = ad::softmax_rows(x);
        for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                EXPECT_GE(y.at(r, c), 0.0);
                s += y.at(r, c);
            }
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    }
}

TEST(Softmax, NonFiniteInputRejected) {
    EXPECT_THROW(ad::softmax_rows(mat(1, 2, {0, std::nan("")})), NumericError);
}

TEST(Softmax, GradientAndMaskedGradient) {
    Rng rng(23);
    Tensor x = fd::random_tensor({3, 5}, rng);
    auto r = fd::check([&] { return ad::softmax_rows(x); }, {x}, rng);
    EXPECT_TRUE(r.ok()) << r.first_failure;
    std::vector<std::uint8_t> mask(15, 1);
    mask[1] = mask[7] = mask[14] = 0;
    auto r2 = fd::check([&] { return ad::masked_softmax_rows(x, mask); }, {x}, rng);
    EXPECT_TRUE(r2.ok()) << r2.first_failure;
    Tensor y = ad::masked_softmax_rows(x, mask);
    EXPECT_EQ(y[1], 0.0);
    EXPECT_EQ(y[14], 0.0);
}

TEST(LayerNorm, Examples) {
    Tensor gain = Tensor::full({4}, 1.0), bias = Tensor::zeros({4});
    expect_near_all(ad::layer_norm(mat(1, 4, {3, 3, 3, 3}), gain, bias), {0, 0, 0, 0}, 0.0);
    Tensor g2 = Tensor::full({2}, 1.0), b2 = Tensor::zeros({2});
    expect_near_all(ad::layer_norm(mat(1, 2, {1, 3}), g2, b2, 1e-14), {-1, 1}, 1e-12);
    EXPECT_THROW(ad::layer_norm(mat(2, 1, {1, 2}), Tensor::full({1}, 1.0), Tensor::zeros({1})),
                 DegenerateInputError);
}

TEST(LayerNorm, NormalizesRowsProperty) {
    Rng rng(29);
    Tensor gain = Tensor::full({8}, 1.0), bias = Tensor::zeros({8});
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x = fd::random_tensor({5, 8}, rng, -3, 3, false);
        Tensor y = ad::layer_norm(x, gain, bias, 1e-12);
        for (std::size_t r = 0; r < 5; ++r) {
            double mu = 0, var = 0, xmu = 0, xvar = 0;
            for (std::size_t c = 0; c < 8; ++c) { mu += y.at(r, c); xmu += x.at(r, c); }
            mu /= 8; xmu /= 8;
            for (std::size_t c = 0; c < 8; ++c) {
                var += (y.at(r, c) - mu) * (y.at(r, c) - mu);
                xvar += (x.at(r, c) - xmu) * (x.at(r, c) - xmu);
            }
            var /= 8; xvar /= 8;
            if (xvar < 1e-3) continue;
            EXPECT_LT(std::abs(mu), 1e-9);
            EXPECT_NEAR(var, 1.0, 1e-6);
        }
    }
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
    Rng rng(31);
    Tensor x = fd::random_tensor({5, 8}, rng), g = fd::random_tensor({8}, rng), b = fd::random_tensor({8}, rng);
    auto r = fd::check([&] { return ad::layer_norm(x, g, b); }, {x, g, b}, rng, 1e-5);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Gelu, Values) {
    EXPECT_EQ(ad::gelu_scalar(0.0), 0.0);
    EXPECT_NEAR(ad::gelu_scalar(10.0), 10.0, 1e-6);
    const long double c = std::sqrt(2.0L / 3.14159265358979323846264338327950288L);
    const long double want = 0.5L * (1.0L + std::tanh(c * (1.0L + 0.044715L)));
    EXPECT_NEAR(ad::gelu_scalar(1.0), static_cast<double>(want), 1e-15);
}

TEST(Gelu, GradientMatchesFiniteDifferences) {
    Rng rng(37);
    Tensor x = fd::random_tensor({4, 6}, rng);
    auto r = fd::check([&] { return ad::gelu(x); }, {x}, rng);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Conv2d, OneByOneUnitKernelSumsChannels) {
    Rng rng(41);
    Tensor x = fd::random_tensor({2, 3, 3}, rng, -2, 2, false);
    Tensor k = Tensor::full({1, 2, 1, 1}, 1.0);
    Tensor y = ad::conv2d(x, k, 1, 0);
    ASSERT_EQ(y.shape(), (ad::Shape{1, 3, 3}));
    for (std::size_t i = 0; i < 9; ++i) EXPECT_DOUBLE_EQ(y[i], x[i] + x[9 + i]);
}

TEST(Conv2d, AveragingKernelOnConstantInput) {
    Tensor x = Tensor::full({1, 6, 6}, 2.5);
    Tensor k = Tensor::full({1, 1, 3, 3}, 1.0 / 9.0);
    Tensor y = ad::conv2d(x, k, 1, 1);
    for (std::size_t r = 1; r < 5; ++r)
        for (std::size_t c = 1; c < 5; ++c) EXPECT_NEAR(y[r * 6 + c], 2.5, 1e-14);
}

TEST(Conv2d, MatchesNaiveOracle) {
    Rng rng(43);
    Tensor x = fd::random_tensor({2, 5, 5}, rng, -2, 2, false);
    Tensor k = fd::random_tensor({3, 2, 3, 3}, rng, -2, 2, false);
    for (std::size_t stride : {1u, 2u})
        for (std::size_t pad : {0u, 1u}) {
            Tensor y = ad::conv2d(x, k, stride, pad);
            expect_near_all(y, naive_conv2d(x, k, stride, pad), 1e-12);
        }
    EXPECT_THROW(ad::conv2d(x, Tensor::zeros({1, 2, 6, 6}), 1, 0), DimensionError);
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
    Rng rng(47);
    Tensor x = fd::random_tensor({2, 5, 5}, rng), k = fd::random_tensor({3, 2, 3, 3}, rng);
    auto r = fd::check([&] { return ad::conv2d(x, k, 2, 1); }, {x, k}, rng);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(CausalConv1d, UnitWidthIsPerStepLinearMap) {
    Rng rng(53);
    Tensor x = fd::random_tensor({5, 2}, rng, -2, 2, false);
    Tensor k = Tensor({2, 2, 1}, {1, 0, 0, 1});
    Tensor y = ad::causal_conv1d(x, k);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(CausalConv1d, MatchesPaddedOracleAndIsCausal) {
    Rng rng(59);
    Tensor x = fd::random_tensor({6, 3}, rng, -2, 2, false);
    Tensor k = fd::random_tensor({4, 3, 3}, rng, -2, 2, false);
    Tensor y = ad::causal_conv1d(x, k);
    expect_near_all(y, naive_causal(x, k), 1e-12);
    for (std::size_t t = 0; t < 6; ++t) {
        Tensor xp = x.clone();
        for (std::size_t c = 0; c < 3; ++c) xp[t * 3 + c] += 1.0;
        Tensor yp = ad::causal_conv1d(xp, k);
        for (std::size_t s = 0; s < t; ++s)
            for (std::size_t o = 0; o < 4; ++o) EXPECT_EQ(yp[s * 4 + o], y[s * 4 + o]);
    }
}

TEST(CausalConv1d, GradientMatchesFiniteDifferences) {
    Rng rng(61);
    Tensor x = fd::random_tensor({6, 3}, rng), k = fd::random_tensor({4, 3, 3}, rng);
    auto r = fd::check([&] { return ad::causal_conv1d(x, k); }, {x, k}, rng);
    EXPECT_TRUE(r.ok()) << r.first_failure;
}

TEST(Structural, ShapeOpsGradients) {
    Rng rng(67);
    Tensor a = fd::random_tensor({4, 6}, rng), b = fd::random_tensor({2, 6}, rng);
    std::vector<std::size_t> idx{3, 0, 3, 1};
    auto r = fd::check(
        [&] {
            std::vector<Tensor> rows{ad::slice_rows(a, 1, 2), b};
            Tensor cat = ad::concat_rows(rows);
            std::vector<Tensor> cols{ad::slice_cols(cat, 0, 2), ad::slice_cols(cat, 3, 3)};
            Tensor joined = ad::concat_cols(cols);
            Tensor g = ad::take_rows(a, idx);
            return ad::add(ad::mean_rows(ad::transpose(ad::reshape(joined, {5, 4}))),
                           ad::mean_rows(ad::slice_cols(g, 0, 5)));
        },
        {a, b}, rng);
    EXPECT_TRUE(r.ok()) << r.first_failure;
    EXPECT_THROW(ad::take_rows(a, std::vector<std::size_t>{4}), LookupError);
}

TEST(Structural, PowerNormalizationAndComplexScale) {
    Rng rng(71);
    Tensor x = fd::random_tensor({3, 4}, rng);
    auto r = fd::check([&] { return ad::normalize_power(x); }, {x}, rng);
    EXPECT_TRUE(r.ok()) << r.first_failure;
    auto r2 = fd::check([&] { return ad::complex_scale_pairs(x, 0.3, -1.2); }, {x}, rng);
    EXPECT_TRUE(r2.ok()) << r2.first_failure;
    bool degenerate = false;
    Tensor z = ad::normalize_power(Tensor::zeros({2, 2}), &degenerate);
    EXPECT_TRUE(degenerate);
    for (double v : z.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, AnalyticGradients) {
    Rng rng(73);
    Tensor x = fd::random_tensor({2, 3}, rng);
    ad::backward(ad::sum(x));
    for (double g : x.grad()) EXPECT_EQ(g, 1.0);
    x.zero_grad();
    ad::backward(ad::sum(ad::mul(x, x)));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(x.grad()[i], 2.0 * x[i]);
}

TEST(Backward, NonScalarLossRejected) {
    Tensor x = Tensor::full({2, 2}, 1.0, true);
    EXPECT_THROW(ad::backward(ad::scale(x, 2.0)), ContractError);
    ad::tape().clear();
}

TEST(Tape, TopologicalOrderAndSingleReplay) {
    ad::tape().clear();
    Rng rng(79);
    Tensor a = fd::random_tensor({3, 3}, rng), b = fd::random_tensor({3, 3}, rng);
    Tensor h = ad::gelu(ad::matmul(a, b));
    Tensor loss = ad::sum(ad::add(h, ad::matmul(h, a)));
    const auto& nodes = ad::tape().nodes();
    ASSERT_EQ(nodes.size(), 5u);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (const auto& in : nodes[i].inputs)
            for (std::size_t j = i; j < nodes.size(); ++j) EXPECT_FALSE(nodes[j].output.same_storage(in));
    ad::backward(loss);
    EXPECT_EQ(ad::tape().last_replayed(), 5u);
    EXPECT_EQ(ad::tape().size(), 0u);
}

TEST(Tape, NoGradGuardSuppressesRecording) {
    ad::tape().clear();
    Tensor a = Tensor::full({2, 2}, 1.0, true);
    {
        ad::NoGradGuard ng;
        Tensor y = ad::matmul(a, a);
        EXPECT_FALSE(y.requires_grad());
    }
    EXPECT_EQ(ad::tape().size(), 0u);
}

TEST(Backward, DeterministicReplay) {
    auto run = [] {
        Rng rng(83);
        Tensor a = fd::random_tensor({4, 5}, rng), b = fd::random_tensor({5, 3}, rng);
        Tensor g = Tensor::full({3}, 1.0, true), bias = Tensor::zeros({3}, true);
        ad::backward(ad::sum(ad::gelu(ad::layer_norm(ad::matmul(a, b), g, bias))));
        std::vector<double> out(a.grad().begin(), a.grad().end());
        out.insert(out.end(), b.grad().begin(), b.grad().end());
        return out;
    };
    EXPECT_EQ(run(), run());
}
