#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace semcomm::metric {

using Sequence = std::vector<std::size_t>;

/// Returned by psnr() for a zero-MSE reconstruction.
inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();
/// Value written in place of kPsnrInfinite in CSV output.
inline constexpr double kPsnrCap = 100.0;

/// Exact-match fraction. Empty input gives 0.
double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> refs);

/// Sequences must match exactly to count.
double sequence_accuracy(std::span<const Sequence> preds, std::span<const Sequence> refs);

std::size_t edit_distance(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// 1 - edit_distance / |ref|, clamped to [0, 1], averaged over samples.
/// Samples with an empty reference are skipped with a warning.
double word_accuracy(std::span<const Sequence> preds, std::span<const Sequence> refs);
double word_accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> ref);

/// Sentence BLEU, n = 1..4, uniform weights, brevity penalty, no smoothing.
double bleu(std::span<const std::size_t> candidate, std::span<const std::size_t> reference);
/// Mean sentence BLEU over a set.
double mean_bleu(std::span<const Sequence> candidates, std::span<const Sequence> references);

/// Counts over all (sample, label) cells of 0/1 matrices stored row-major.
struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};
Confusion confusion(std::span<const int> preds, std::span<const int> targets);

/// Micro-averaged F1; 0 when precision + recall is 0.
double micro_f1(std::span<const int> preds, std::span<const int> targets);
/// Unweighted mean of per-label F1 over `labels` columns.
double macro_f1(std::span<const int> preds, std::span<const int> targets, std::size_t labels);

/// 20 log10(max_val) - 10 log10(MSE); kPsnrInfinite when MSE is 0.
double psnr(std::span<const double> original, std::span<const double> reconstruction, double max_val);
/// PSNR with +inf replaced by kPsnrCap.
double capped_psnr(double value);

}  // namespace semcomm::metric
