#include "semcomm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "semcomm/errors.hpp"
#include "semcomm/log.hpp"

namespace semcomm::metric {

namespace {

void check_counts(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw ContractError(std::string(what) + ": " + std::to_string(a) + " predictions for " + std::to_string(b) +
                            " references");
    }
}

double f1_from(std::size_t tp, std::size_t fp, std::size_t fn) {
    if (tp == 0) return 0.0;
    const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * p * r / (p + r);
}

}  // namespace

double accuracy(std::span<const std::size_t> preds, std::span<const std::size_t> refs) {
    check_counts(preds.size(), refs.size(), "accuracy");
    if (refs.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) hit += preds[i] == refs[i];
    return static_cast<double>(hit) / static_cast<double>(refs.size());
}

double sequence_accuracy(std::span<const Sequence> preds, std::span<const Sequence> refs) {
    check_counts(preds.size(), refs.size(), "sequence_accuracy");
    if (refs.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) hit += preds[i] == refs[i];
    return static_cast<double>(hit) / static_cast<double>(refs.size());
}

std::size_t edit_distance(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double word_accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> ref) {
    if (ref.empty()) throw DegenerateInputError("word accuracy of an empty reference");
    const double e = static_cast<double>(edit_distance(pred, ref)) / static_cast<double>(ref.size());
    return std::clamp(1.0 - e, 0.0, 1.0);
}

double word_accuracy(std::span<const Sequence> preds, std::span<const Sequence> refs) {
    check_counts(preds.size(), refs.size(), "word_accuracy");
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].empty()) {
            log::warn("word accuracy: skipping sample " + std::to_string(i) + " with an empty reference");
            continue;
        }
        total += word_accuracy(preds[i], refs[i]);
        ++used;
    }
    return used ? total / static_cast<double>(used) : 0.0;
}

double bleu(std::span<const std::size_t> candidate, std::span<const std::size_t> reference) {
    if (reference.empty()) throw DegenerateInputError("BLEU against an empty reference");
    if (candidate.empty()) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        if (candidate.size() < n) return 0.0;
        std::map<std::vector<std::size_t>, std::size_t> ref_counts;
        for (std::size_t i = 0; i + n <= reference.size(); ++i)
            ++ref_counts[std::vector<std::size_t>(reference.begin() + i, reference.begin() + i + n)];
        std::map<std::vector<std::size_t>, std::size_t> cand_counts;
        for (std::size_t i = 0; i + n <= candidate.size(); ++i)
            ++cand_counts[std::vector<std::size_t>(candidate.begin() + i, candidate.begin() + i + n)];
        std::size_t clipped = 0;
        for (const auto& [gram, c] : cand_counts) {
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) clipped += std::min(c, it->second);
        }
        if (clipped == 0) return 0.0;
        log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(candidate.size() + 1 - n));
    }
    double bp = 1.0;
    if (candidate.size() < reference.size())
        bp = std::exp(1.0 - static_cast<double>(reference.size()) / static_cast<double>(candidate.size()));
    return bp * std::exp(log_sum / 4.0);
}

double mean_bleu(std::span<const Sequence> candidates, std::span<const Sequence> references) {
    check_counts(candidates.size(), references.size(), "bleu");
    if (references.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < references.size(); ++i) total += bleu(candidates[i], references[i]);
    return total / static_cast<double>(references.size());
}

Confusion confusion(std::span<const int> preds, std::span<const int> targets) {
    check_counts(preds.size(), targets.size(), "f1");
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] != 0, t = targets[i] != 0;
        if (p && t) ++c.tp;
        else if (p) ++c.fp;
        else if (t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double micro_f1(std::span<const int> preds, std::span<const int> targets) {
    const Confusion c = confusion(preds, targets);
    return f1_from(c.tp, c.fp, c.fn);
}

double macro_f1(std::span<const int> preds, std::span<const int> targets, std::size_t labels) {
    check_counts(preds.size(), targets.size(), "f1");
    if (labels == 0 || preds.size() % labels != 0) {
        throw ContractError("macro_f1: " + std::to_string(preds.size()) + " cells do not split into " +
                            std::to_string(labels) + " labels");
    }
    double total = 0.0;
    for (std::size_t l = 0; l < labels; ++l) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = l; i < preds.size(); i += labels) {
            const bool p = preds[i] != 0, t = targets[i] != 0;
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
        }
        total += f1_from(tp, fp, fn);
    }
    return total / static_cast<double>(labels);
}

double psnr(std::span<const double> original, std::span<const double> reconstruction, double max_val) {
    if (original.size() != reconstruction.size() || original.empty()) {
        throw ContractError("psnr: " + std::to_string(original.size()) + " vs " +
                            std::to_string(reconstruction.size()) + " values");
    }
    if (!(max_val > 0.0)) throw ContractError("psnr: max value must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const double d = original[i] - reconstruction[i];
        mse += d * d;
    }
    mse /= static_cast<double>(original.size());
    if (mse == 0.0) return kPsnrInfinite;
    return 20.0 * std::log10(max_val) - 10.0 * std::log10(mse);
}

double capped_psnr(double value) { return std::min(value, kPsnrCap); }

}  // namespace semcomm::metric
