#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semcomm/channel.hpp"
#include "semcomm/data.hpp"
#include "semcomm/encoders.hpp"
#include "semcomm/fusion.hpp"
#include "semcomm/tasks.hpp"

namespace semcomm::model {

using ad::Tensor;

struct ModelConfig {
    std::size_t width = 64;       // P
    std::size_t compressed = 0;   // d; 0 selects P / 2
    std::size_t encoder_layers = 2;
    std::size_t encoder_heads = 4;
    std::size_t fusion_layers = 6;
    std::size_t fusion_heads = 12;
    /// Attention scores scaled by sqrt(P / heads) instead of sqrt(P).
    bool head_scale = false;
    /// Hidden width of two-layer task heads; 0 gives single-layer heads.
    std::size_t head_hidden = 0;
    std::uint64_t seed = 0;

    data::Geometry input;
    std::size_t stem_stride = 2;
    std::size_t block_stride = 2;
    std::size_t text_segments = 2;
    std::size_t frame = 128;
    std::size_t hop = 64;
    std::size_t mel_filters = 16;
    std::size_t conv_channels = 32;
    std::size_t conv_kernel = 3;
    std::size_t tube_frames = 2;
    std::size_t tube_height = 8;
    std::size_t tube_width = 8;
    bool swap_masks = false;

    std::size_t symbols() const { return compressed ? compressed : width / 2; }
    enc::EncoderConfig encoder() const;
    fusion::FusionConfig fusion() const;
    enc::ImageGeometry image() const;
    enc::TextGeometry text() const;
    enc::SpeechGeometry speech() const;
    enc::VideoEmbeddingConfig video() const;
    /// Rows produced by the encoder of `m` (L_M).
    std::size_t modality_length(Modality m) const;
    /// Throws ConfigError on every inconsistency the encoders would reject.
    void validate() const;
    /// Canonical text form; equal configs give equal strings.
    std::string canonical() const;
};

/// Named task presets. Each dataset kind has one; "img_recon" reconstructs
/// img_class images.
std::vector<std::string> preset_names();
task::TaskSpec preset_task(std::string_view preset, const data::Geometry& g);
data::DatasetKind preset_dataset(std::string_view preset);

/// Default learning rate of a task: 2e-4 for speech tasks, 1e-4 otherwise.
double default_learning_rate(const task::TaskSpec& spec);

/// All encoders, the fusion module, channel coders and task heads over one
/// parameter store. Only the encoders some task uses are built.
class Model {
public:
    Model(const ModelConfig& cfg, std::vector<task::TaskSpec> tasks);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    const ModelConfig& config() const { return cfg_; }
    const std::vector<task::TaskSpec>& tasks() const { return tasks_; }
    std::size_t task_index(std::string_view name) const;
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }

    /// Per-modality encoder outputs, tagged with the task.
    std::vector<SemanticFeatures> encode(const data::Sample& s, std::size_t task) const;
    /// Rows handed to the channel encoder: the fused 1 x P vector for
    /// multi-modal tasks, encoder rows plus the task row otherwise.
    Tensor semantic_rows(const data::Sample& s, std::size_t task) const;
    /// Channel encoder, channel (skipped when `ch` is null), channel decoder.
    Tensor transmit(const Tensor& rows, const channel::ChannelConfig* ch, Rng& rng) const;
    /// Full pipeline up to the head output.
    Tensor forward(const data::Sample& s, std::size_t task, const channel::ChannelConfig* ch, Rng& rng) const;
    Tensor loss(const Tensor& output, const data::Sample& s, std::size_t task) const;

    /// Rows sent over the channel per instance of `task`.
    std::size_t transmitted_rows(std::size_t task) const;
    /// Rows an unfused concatenation pipeline would send: sum of L_M plus one.
    std::size_t unfused_rows(std::size_t task) const;

    /// Parameters a step of `task` may touch, in store order.
    std::vector<std::string> active_parameters(std::size_t task) const;
    std::vector<Tensor> active_tensors(std::size_t task) const;

    /// FNV-1a of the configuration, the task registry and parameter shapes.
    std::uint64_t digest() const;

    const fusion::FusionModule* fusion_module() const { return fusion_ ? &*fusion_ : nullptr; }
    const enc::TaskEmbeddingTable& task_table() const { return task_table_; }

private:
    ModelConfig cfg_;
    std::vector<task::TaskSpec> tasks_;
    nn::ParamStore store_;
    std::optional<enc::ImageEncoder> image_;
    std::optional<enc::TextEncoder> text_;
    std::optional<enc::SpeechEncoder> speech_;
    std::optional<enc::VideoEncoder> video_;
    std::optional<fusion::FusionModule> fusion_;
    enc::TaskEmbeddingTable task_table_;
    channel::ChannelEncoder channel_encoder_;
    channel::ChannelDecoder channel_decoder_;
    std::vector<task::TaskHead> heads_;
};

std::string_view encoder_prefix(Modality m);

}  // namespace semcomm::model
