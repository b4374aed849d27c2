#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcomm/nn.hpp"
#include "semcomm/types.hpp"

namespace semcomm::task {

using ad::Tensor;

enum class HeadKind { class_vec, class_seq, recon_image, recon_seq };
enum class LossKind { cross_entropy, binary_cross_entropy, ctc, mse };
enum class MetricKind { accuracy, f1, bleu, word_accuracy, psnr };

std::string_view to_string(HeadKind k);
std::string_view to_string(LossKind k);
std::string_view to_string(MetricKind k);
HeadKind parse_head(std::string_view s);
LossKind parse_loss(std::string_view s);
MetricKind parse_metric(std::string_view s);

struct TaskSpec {
    std::string name;
    std::size_t id = 0;
    std::vector<Modality> modalities;
    HeadKind head = HeadKind::class_vec;
    LossKind loss = LossKind::cross_entropy;
    MetricKind metric = MetricKind::accuracy;
    /// Classes, labels, per-row vocabulary (CTC: symbols + blank) or pixels.
    std::size_t outputs = 0;
    /// Width of the optional hidden linear layer; 0 means a single layer.
    std::size_t hidden = 0;

    bool multimodal() const { return modalities.size() > 1; }
    /// Rejects inconsistent head/loss/metric triples and empty modality sets.
    void validate() const;
};

/// One or two linear layers, nothing after the last one.
class TaskHead {
public:
    TaskHead() = default;
    TaskHead(nn::ParamStore& store, const std::string& prefix, const TaskSpec& spec, std::size_t width, Rng& rng);

    /// class_vec / recon_image: 1 x P input or L x P rows (mean-pooled first),
    /// returns 1 x outputs. class_seq / recon_seq: L x P rows, returns
    /// L x outputs with the same map on every row.
    Tensor forward(const Tensor& features) const;

    HeadKind kind() const { return kind_; }

    nn::Linear first;
    std::optional<nn::Linear> second;

private:
    HeadKind kind_ = HeadKind::class_vec;
};

/// -log softmax(logits)[label] via log-sum-exp. logits: n or 1 x n.
Tensor cross_entropy_loss(const Tensor& logits, std::size_t label);
/// Mean cross-entropy over rows of an L x n logit matrix.
Tensor cross_entropy_rows(const Tensor& logits, std::span<const std::size_t> labels);
/// Mean over labels of sigmoid cross-entropy, computed in the stable
/// max(z,0) - z*y + log(1 + exp(-|z|)) form.
Tensor binary_cross_entropy_multilabel(const Tensor& logits, std::span<const int> targets);
Tensor mse_loss(const Tensor& prediction, const Tensor& target);

struct CtcResult {
    Tensor loss;
    bool infeasible = false;
};

/// Minimum frame count that can emit `label` (one blank between repeats).
std::size_t ctc_min_frames(std::span<const std::size_t> label);

/// CTC negative log-likelihood of `label` under T x (V+1) logits, the last
/// class being the blank. Forward recursion in log space over the
/// blank-interleaved label; the gradient uses the matching backward recursion.
/// A label too long for T yields +inf and infeasible = true.
CtcResult ctc_loss(const Tensor& logit_rows, std::span<const std::size_t> label);

/// Per-row argmax, collapse repeats, drop blanks (class V).
std::vector<std::size_t> ctc_greedy_decode(const Tensor& logit_rows);

std::size_t argmax_row(const Tensor& logits, std::size_t row = 0);

}  // namespace semcomm::task
