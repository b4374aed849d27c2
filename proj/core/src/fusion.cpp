#include "semcomm/fusion.hpp"

#include "semcomm/errors.hpp"
#include "semcomm/log.hpp"
#include "semcomm/ops.hpp"

namespace semcomm::fusion {

namespace {
constexpr std::size_t kFallbackHeads = 4;
}

std::size_t FusionConfig::effective_heads() const {
    if (heads != 0 && width % heads == 0) return heads;
    return kFallbackHeads;
}

nn::AttentionConfig FusionConfig::attention() const {
    nn::AttentionConfig a;
    a.width = width;
    a.heads = effective_heads();
    a.ffn_width = ffn_width ? ffn_width : 4 * width;
    a.head_scale = head_scale;
    return a;
}

void FusionConfig::validate() const {
    if (layers == 0) throw ConfigError("fusion needs at least one attention layer");
    if (width % effective_heads() != 0) {
        throw ConfigError("fusion width " + std::to_string(width) + " divisible by neither " +
                          std::to_string(heads) + " nor " + std::to_string(kFallbackHeads) + " heads");
    }
}

TaggedRows concat_features(std::span<const SemanticFeatures> features) {
    if (features.empty()) throw ContractError("concat_features: no modality features given");
    TaggedRows out;
    out.task_id = features[0].task_id;
    const std::size_t width = features[0].width();
    std::vector<Tensor> parts;
    for (const auto& f : features) {
        if (f.matrix.rank() != 2 || f.width() != width) {
            throw ContractError("concat_features: width mismatch, " + ad::shape_str(features[0].matrix.shape()) +
                                " vs " + ad::shape_str(f.matrix.shape()));
        }
        if (f.task_id != out.task_id) {
            throw ContractError("concat_features: features belong to tasks " + std::to_string(out.task_id) +
                                " and " + std::to_string(f.task_id));
        }
        parts.push_back(f.matrix);
        out.tags.insert(out.tags.end(), f.length(), f.modality);
        out.source_lengths.push_back(f.length());
    }
    out.rows = parts.size() == 1 ? parts[0] : ad::concat_rows(parts);
    return out;
}

ModalSegmentTable::ModalSegmentTable(nn::ParamStore& store, const std::string& name, std::size_t width, Rng& rng) {
    table = store.add(name, nn::embedding_table(kModalityCount, width, rng));
}

Tensor ModalSegmentTable::apply(const TaggedRows& concat) const {
    std::vector<std::size_t> idx;
    idx.reserve(concat.tags.size());
    for (auto m : concat.tags) {
        const auto i = static_cast<std::size_t>(m);
        if (i >= table.rows()) throw LookupError("no segment embedding for modality " + std::to_string(i));
        idx.push_back(i);
    }
    if (idx.size() != concat.rows.rows()) throw ContractError("segment tags do not cover every row");
    return ad::add(concat.rows, ad::take_rows(table, idx));
}

std::size_t FusedFeatures::pre_aggregation_length() const {
    std::size_t l = 1;
    for (auto n : source_lengths) l += n;
    return l;
}

FusionModule::FusionModule(nn::ParamStore& store, const std::string& prefix, const FusionConfig& cfg, Rng& rng)
    : cfg_(cfg) {
    cfg.validate();
    if (cfg.effective_heads() != cfg.heads) {
        log::warn("fusion width " + std::to_string(cfg.width) + " is not divisible by " + std::to_string(cfg.heads) +
                  " heads; using " + std::to_string(cfg.effective_heads()));
    }
    segments = ModalSegmentTable(store, prefix + ".segment_table", cfg.width, rng);
    for (std::size_t i = 0; i < cfg.layers; ++i)
        layers.emplace_back(store, prefix + ".layer" + std::to_string(i), cfg.attention(), rng);
}

Tensor FusionModule::encode(std::span<const SemanticFeatures> features, const enc::TaskEmbeddingTable& tasks,
                            std::size_t task_id) const {
    TaggedRows concat = concat_features(features);
    const Tensor parts[] = {segments.apply(concat), tasks.row(task_id)};
    Tensor h = ad::concat_rows(parts);
    for (const auto& layer : layers) h = layer.forward(h);
    return h;
}

FusedFeatures FusionModule::fuse(std::span<const SemanticFeatures> features, const enc::TaskEmbeddingTable& tasks,
                                 std::size_t task_id) const {
    FusedFeatures out;
    out.task_id = task_id;
    for (const auto& f : features) out.source_lengths.push_back(f.length());
    out.vector = ad::mean_rows(encode(features, tasks, task_id));
    return out;
}

}  // namespace semcomm::fusion
