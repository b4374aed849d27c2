#include "semcomm/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semcomm/errors.hpp"
#include "semcomm/ops.hpp"

namespace semcomm::task {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

template <typename E>
E parse_enum(std::string_view s, std::initializer_list<E> all, const char* what) {
    for (E e : all)
        if (to_string(e) == s) return e;
    throw ConfigError(std::string("unknown ") + what + ": " + std::string(s));
}

// Row-wise log-softmax of a T x n buffer.
std::vector<double> log_softmax(std::span<const double> x, std::size_t rows, std::size_t n) {
    std::vector<double> out(x.size());
    for (std::size_t r = 0; r < rows; ++r) {
        double mx = kNegInf;
        for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, x[r * n + c]);
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) total += std::exp(x[r * n + c] - mx);
        const double lse = mx + std::log(total);
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] = x[r * n + c] - lse;
    }
    return out;
}

}  // namespace

std::string_view to_string(HeadKind k) {
    switch (k) {
        case HeadKind::class_vec: return "class_vec";
        case HeadKind::class_seq: return "class_seq";
        case HeadKind::recon_image: return "recon_image";
        case HeadKind::recon_seq: return "recon_seq";
    }
    return "?";
}

std::string_view to_string(LossKind k) {
    switch (k) {
        case LossKind::cross_entropy: return "cross_entropy";
        case LossKind::binary_cross_entropy: return "binary_cross_entropy";
        case LossKind::ctc: return "ctc";
        case LossKind::mse: return "mse";
    }
    return "?";
}

std::string_view to_string(MetricKind k) {
    switch (k) {
        case MetricKind::accuracy: return "accuracy";
        case MetricKind::f1: return "f1";
        case MetricKind::bleu: return "bleu";
        case MetricKind::word_accuracy: return "word_accuracy";
        case MetricKind::psnr: return "psnr";
    }
    return "?";
}

HeadKind parse_head(std::string_view s) {
    return parse_enum(s, {HeadKind::class_vec, HeadKind::class_seq, HeadKind::recon_image, HeadKind::recon_seq},
                      "head kind");
}
LossKind parse_loss(std::string_view s) {
    return parse_enum(s, {LossKind::cross_entropy, LossKind::binary_cross_entropy, LossKind::ctc, LossKind::mse},
                      "loss kind");
}
MetricKind parse_metric(std::string_view s) {
    return parse_enum(s,
                      {MetricKind::accuracy, MetricKind::f1, MetricKind::bleu, MetricKind::word_accuracy,
                       MetricKind::psnr},
                      "metric kind");
}

void TaskSpec::validate() const {
    if (modalities.empty()) throw ConfigError("task '" + name + "' has no modalities");
    for (std::size_t i = 0; i < modalities.size(); ++i)
        for (std::size_t j = i + 1; j < modalities.size(); ++j)
            if (modalities[i] == modalities[j]) throw ConfigError("task '" + name + "' repeats a modality");
    if (outputs == 0) throw ConfigError("task '" + name + "' has no outputs");
    bool ok = false;
    switch (head) {
        case HeadKind::class_vec:
            ok = (loss == LossKind::cross_entropy && metric == MetricKind::accuracy) ||
                 (loss == LossKind::binary_cross_entropy && metric == MetricKind::f1);
            break;
        case HeadKind::class_seq:
            ok = loss == LossKind::ctc && metric == MetricKind::word_accuracy && outputs >= 2;
            break;
        case HeadKind::recon_seq:
            ok = loss == LossKind::cross_entropy &&
                 (metric == MetricKind::bleu || metric == MetricKind::word_accuracy || metric == MetricKind::accuracy);
            break;
        case HeadKind::recon_image:
            ok = loss == LossKind::mse && metric == MetricKind::psnr;
            break;
    }
    if (!ok) {
        throw ConfigError("task '" + name + "': head " + std::string(to_string(head)) + ", loss " +
                          std::string(to_string(loss)) + " and metric " + std::string(to_string(metric)) +
                          " are inconsistent");
    }
}

TaskHead::TaskHead(nn::ParamStore& store, const std::string& prefix, const TaskSpec& spec, std::size_t width,
                   Rng& rng)
    : kind_(spec.head) {
    spec.validate();
    if (spec.hidden == 0) {
        first = nn::Linear::create(store, prefix + ".linear1", width, spec.outputs, rng);
    } else {
        first = nn::Linear::create(store, prefix + ".linear1", width, spec.hidden, rng);
        second = nn::Linear::create(store, prefix + ".linear2", spec.hidden, spec.outputs, rng);
    }
}

Tensor TaskHead::forward(const Tensor& features) const {
    if (features.rank() != 2 || features.dim(1) != first.in() || features.dim(0) == 0) {
        throw ContractError("task head expects L x " + std::to_string(first.in()) + " features, got " +
                            ad::shape_str(features.shape()));
    }
    Tensor x = features;
    if ((kind_ == HeadKind::class_vec || kind_ == HeadKind::recon_image) && x.dim(0) > 1) x = ad::mean_rows(x);
    Tensor y = first.forward(x);
    if (second) y = second->forward(y);
    return y;
}

Tensor cross_entropy_loss(const Tensor& logits, std::size_t label) {
    const std::size_t n = logits.size();
    if (logits.rank() > 2 || logits.rows() != 1) {
        throw ContractError("cross_entropy_loss expects a single row of logits, got " + ad::shape_str(logits.shape()));
    }
    if (label >= n) {
        throw ContractError("label " + std::to_string(label) + " out of range for " + std::to_string(n) + " classes");
    }
    const Tensor as_row = logits.rank() == 2 ? logits : ad::reshape(logits, {1, n});
    const std::size_t labels[] = {label};
    return cross_entropy_rows(as_row, labels);
}

Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> labels) {
    if (logits.rank() != 2 || logits.dim(0) != labels.size() || labels.empty()) {
        throw ContractError("cross_entropy_rows: " + std::to_string(labels.size()) + " labels for logits " +
                            ad::shape_str(logits.shape()));
    }
    const std::size_t m = logits.dim(0), n = logits.dim(1);
    for (auto l : labels)
        if (l >= n) throw ContractError("label " + std::to_string(l) + " out of range for " + std::to_string(n) + " classes");
    auto lsm = log_softmax(logits.data(), m, n);
    double total = 0.0;
    for (std::size_t r = 0; r < m; ++r) total -= lsm[r * n + labels[r]];
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    return ad::detail::finish("cross_entropy", Tensor::scalar(total / static_cast<double>(m)), {logits},
                              [logits, lsm = std::move(lsm), lab = std::move(lab), m, n](const Tensor& o) {
                                  const double g = o.grad()[0] / static_cast<double>(m);
                                  Tensor t = logits;
                                  auto gx = t.grad_mut();
                                  for (std::size_t r = 0; r < m; ++r)
                                      for (std::size_t c = 0; c < n; ++c)
                                          gx[r * n + c] += g * (std::exp(lsm[r * n + c]) - (c == lab[r] ? 1.0 : 0.0));
                              });
}

Tensor binary_cross_entropy_multilabel(const Tensor& logits, std::span<const int> targets) {
    const std::size_t n = logits.size();
    if (targets.size() != n || n == 0) {
        throw ContractError("binary_cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                            ad::shape_str(logits.shape()));
    }
    for (int t : targets)
        if (t != 0 && t != 1) throw ContractError("binary_cross_entropy: non-binary target " + std::to_string(t));
    auto z = logits.data();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += std::max(z[i], 0.0) - z[i] * targets[i] + std::log1p(std::exp(-std::abs(z[i])));
    }
    std::vector<int> y(targets.begin(), targets.end());
    return ad::detail::finish("binary_cross_entropy", Tensor::scalar(total / static_cast<double>(n)), {logits},
                              [logits, y = std::move(y), n](const Tensor& o) {
                                  const double g = o.grad()[0] / static_cast<double>(n);
                                  Tensor t = logits;
                                  auto gx = t.grad_mut();
                                  auto z = logits.data();
                                  for (std::size_t i = 0; i < n; ++i) {
                                      const double p = 1.0 / (1.0 + std::exp(-z[i]));
                                      gx[i] += g * (p - y[i]);
                                  }
                              });
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
    if (prediction.size() != target.size()) {
        throw ContractError("mse_loss: " + ad::shape_str(prediction.shape()) + " vs " + ad::shape_str(target.shape()));
    }
    const Tensor t = target.shape() == prediction.shape() ? target : ad::reshape(target, prediction.shape());
    const Tensor d = ad::sub(prediction, t);
    return ad::mean(ad::mul(d, d));
}

std::size_t ctc_min_frames(std::span<const std::size_t> label) {
    std::size_t repeats = 0;
    for (std::size_t i = 1; i < label.size(); ++i)
        if (label[i] == label[i - 1]) ++repeats;
    return label.size() + repeats;
}

CtcResult ctc_loss(const Tensor& logit_rows, std::span<const std::size_t> label) {
    if (logit_rows.rank() != 2 || logit_rows.dim(1) < 2 || logit_rows.dim(0) == 0) {
        throw ContractError("ctc_loss expects T x (V+1) logits with V >= 1, got " + ad::shape_str(logit_rows.shape()));
    }
    const std::size_t T = logit_rows.dim(0), C = logit_rows.dim(1), blank = C - 1;
    for (auto l : label)
        if (l >= blank) throw ContractError("ctc label symbol " + std::to_string(l) + " collides with blank or exceeds V");
    if (ctc_min_frames(label) > T) {
        return {Tensor::scalar(std::numeric_limits<double>::infinity()), true};
    }
    const std::size_t S = 2 * label.size() + 1;
    std::vector<std::size_t> ext(S, blank);
    for (std::size_t u = 0; u < label.size(); ++u) ext[2 * u + 1] = label[u];
    const auto lp = log_softmax(logit_rows.data(), T, C);
    auto emit = [&](std::size_t t, std::size_t s) { return lp[t * C + ext[s]]; };
    auto can_skip = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

    std::vector<double> alpha(T * S, kNegInf);
    alpha[0] = emit(0, 0);
    if (S > 1) alpha[1] = emit(0, 1);
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s) {
            double a = alpha[(t - 1) * S + s];
            if (s >= 1) a = log_add(a, alpha[(t - 1) * S + s - 1]);
            if (can_skip(s)) a = log_add(a, alpha[(t - 1) * S + s - 2]);
            if (a != kNegInf) alpha[t * S + s] = a + emit(t, s);
        }
    double log_p = alpha[(T - 1) * S + S - 1];
    if (S > 1) log_p = log_add(log_p, alpha[(T - 1) * S + S - 2]);

    CtcResult result;
    result.loss = ad::detail::finish(
        "ctc_loss", Tensor::scalar(-log_p), {logit_rows},
        [logit_rows, lp, ext, alpha = std::move(alpha), log_p, T, C, S, blank](const Tensor& o) {
            auto skip_from = [&](std::size_t s) {
                return s + 2 < S && ext[s] != blank && ext[s + 2] != ext[s];
            };
            std::vector<double> beta(T * S, kNegInf);
            beta[(T - 1) * S + S - 1] = lp[(T - 1) * C + ext[S - 1]];
            if (S > 1) beta[(T - 1) * S + S - 2] = lp[(T - 1) * C + ext[S - 2]];
            for (std::size_t t = T - 1; t-- > 0;)
                for (std::size_t s = 0; s < S; ++s) {
                    double b = beta[(t + 1) * S + s];
                    if (s + 1 < S) b = log_add(b, beta[(t + 1) * S + s + 1]);
                    if (skip_from(s)) b = log_add(b, beta[(t + 1) * S + s + 2]);
                    if (b != kNegInf) beta[t * S + s] = b + lp[t * C + ext[s]];
                }
            const double g = o.grad()[0];
            Tensor x = logit_rows;
            auto gx = x.grad_mut();
            std::vector<double> occ(C);
            for (std::size_t t = 0; t < T; ++t) {
                std::fill(occ.begin(), occ.end(), kNegInf);
                for (std::size_t s = 0; s < S; ++s) {
                    const double a = alpha[t * S + s], b = beta[t * S + s];
                    if (a == kNegInf || b == kNegInf) continue;
                    occ[ext[s]] = log_add(occ[ext[s]], a + b - lp[t * C + ext[s]]);
                }
                for (std::size_t c = 0; c < C; ++c) {
                    const double posterior = occ[c] == kNegInf ? 0.0 : std::exp(occ[c] - log_p);
                    gx[t * C + c] += g * (std::exp(lp[t * C + c]) - posterior);
                }
            }
        });
    return result;
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
    const std::size_t n = logits.cols();
    auto d = logits.data().subspan(row * n, n);
    return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

std::vector<std::size_t> ctc_greedy_decode(const Tensor& logit_rows) {
    const std::size_t T = logit_rows.rows(), blank = logit_rows.cols() - 1;
    std::vector<std::size_t> out;
    std::size_t prev = blank;
    for (std::size_t t = 0; t < T; ++t) {
        const std::size_t k = argmax_row(logit_rows, t);
        if (k != blank && k != prev) out.push_back(k);
        prev = k;
    }
    return out;
}

}  // namespace semcomm::task
