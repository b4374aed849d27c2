#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semcomm/encoders.hpp"
#include "semcomm/nn.hpp"
#include "semcomm/types.hpp"

namespace semcomm::fusion {

using ad::Tensor;

struct FusionConfig {
    std::size_t width = 64;  // P
    std::size_t layers = 6;
    std::size_t heads = 12;
    std::size_t ffn_width = 0;  // 0 selects 4P
    /// Score scale sqrt(P / heads) instead of sqrt(P).
    bool head_scale = false;

    /// `heads` when it divides the width, otherwise 4 (a warning is logged once per module).
    std::size_t effective_heads() const;
    nn::AttentionConfig attention() const;
    void validate() const;
};

/// Row-wise concatenation of several feature matrices, with the source
/// modality of every row.
struct TaggedRows {
    Tensor rows;
    std::vector<Modality> tags;
    std::size_t task_id = 0;
    std::vector<std::size_t> source_lengths;
};

/// Concatenates in the given order. All inputs must share width and task.
TaggedRows concat_features(std::span<const SemanticFeatures> features);

/// One learned row per modality.
class ModalSegmentTable {
public:
    ModalSegmentTable() = default;
    ModalSegmentTable(nn::ParamStore& store, const std::string& name, std::size_t width, Rng& rng);

    /// Adds each row's modality vector. No position embeddings are involved.
    Tensor apply(const TaggedRows& concat) const;

    Tensor table;  // kModalityCount x P
};

struct FusedFeatures {
    Tensor vector;  // 1 x P
    std::size_t task_id = 0;
    std::vector<std::size_t> source_lengths;

    /// Rows entering the attention stack: sum of sources plus the task row.
    std::size_t pre_aggregation_length() const;
};

class FusionModule {
public:
    FusionModule() = default;
    FusionModule(nn::ParamStore& store, const std::string& prefix, const FusionConfig& cfg, Rng& rng);

    /// Concatenate, add segment rows, append the task row, and run the
    /// attention stack. Returns the L x P output before aggregation.
    Tensor encode(std::span<const SemanticFeatures> features, const enc::TaskEmbeddingTable& tasks,
                  std::size_t task_id) const;
    /// encode() followed by the mean over all L rows.
    FusedFeatures fuse(std::span<const SemanticFeatures> features, const enc::TaskEmbeddingTable& tasks,
                       std::size_t task_id) const;

    const FusionConfig& config() const { return cfg_; }

    ModalSegmentTable segments;
    std::vector<nn::AttentionLayer> layers;

private:
    FusionConfig cfg_;
};

}  // namespace semcomm::fusion
