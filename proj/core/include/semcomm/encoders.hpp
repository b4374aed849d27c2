#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "semcomm/nn.hpp"
#include "semcomm/types.hpp"

namespace semcomm::enc {

using ad::Tensor;

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnknownId = 1;

/// Shared attention-stack geometry of the text, speech and video encoders.
struct EncoderConfig {
    std::size_t width = 64;  // P
    std::size_t layers = 2;
    std::size_t heads = 4;
    bool head_scale = false;

    nn::AttentionConfig attention() const;
};

// ---------------------------------------------------------------- image

struct ImageGeometry {
    std::size_t channels = 3;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t stem_stride = 2;
    std::size_t block_stride = 2;  // stride of the first residual block

    /// Spatial positions of the final feature map (L_I).
    std::size_t tokens() const;
    void validate() const;
};

/// Residual block: conv -> channel norm -> GeLU -> conv, plus a skip that is
/// the identity (stride 1) or a strided subsample of the input.
struct ResidualBlock {
    Tensor conv1, bias1, norm_gain, norm_bias, conv2, bias2;
    std::size_t stride = 1;

    /// x: C x H x W.
    Tensor forward(const Tensor& x) const;
};

class ImageEncoder {
public:
    ImageEncoder() = default;
    ImageEncoder(nn::ParamStore& store, const std::string& prefix, const ImageGeometry& geom, std::size_t width,
                 Rng& rng);

    /// image: C x H x W -> L_I x P.
    SemanticFeatures encode(const Tensor& image) const;
    /// Output of the stem and both blocks as a P x H' x W' map.
    Tensor feature_map(const Tensor& image) const;

    const ImageGeometry& geometry() const { return geom_; }
    std::size_t width() const { return width_; }

    Tensor stem, stem_bias;
    ResidualBlock block1, block2;

private:
    ImageGeometry geom_;
    std::size_t width_ = 0;
};

// ---------------------------------------------------------------- text

struct TextGeometry {
    std::size_t vocab = 34;  // includes pad (0) and unknown (1)
    std::size_t length = 8;  // L_T
    std::size_t segments = 2;
    void validate() const;
};

/// Maps words to ids; unknown words become kUnknownId. Truncates to `length`
/// or right-pads with kPadId.
std::vector<std::size_t> tokenize(std::span<const std::string> words,
                                  const std::map<std::string, std::size_t>& vocab, std::size_t length);

class TextEncoder {
public:
    TextEncoder() = default;
    TextEncoder(nn::ParamStore& store, const std::string& prefix, const TextGeometry& geom,
                const EncoderConfig& cfg, Rng& rng);

    /// Word + position + segment rows, L_T x P.
    Tensor input_embeddings(std::span<const std::size_t> ids, std::span<const std::size_t> segments) const;
    /// `segments` empty means all-zero segment ids.
    SemanticFeatures encode(std::span<const std::size_t> ids, std::span<const std::size_t> segments = {}) const;

    const TextGeometry& geometry() const { return geom_; }

    Tensor word_table, position_table, segment_table;
    std::vector<nn::AttentionLayer> layers;

private:
    TextGeometry geom_;
};

// ---------------------------------------------------------------- speech

struct FbankConfig {
    double sample_rate = 8000.0;
    std::size_t frame = 128;
    std::size_t hop = 64;
    std::size_t filters = 16;
    double log_floor = 1e-10;

    std::size_t frames_for(std::size_t samples) const;
    /// Filter edge frequencies in Hz, filters + 2 points equally spaced on the mel scale.
    std::vector<double> edges_hz() const;
    double center_hz(std::size_t filter) const { return edges_hz()[filter + 1]; }
};

/// log(max(energy, log_floor)) of triangular mel filters applied to the
/// Hann-windowed power spectrum of each frame. Returns T x filters.
Tensor compute_fbank(std::span<const double> waveform, const FbankConfig& cfg);

struct SpeechGeometry {
    FbankConfig fbank;
    std::size_t samples = 2048;
    std::size_t conv_channels = 32;
    std::size_t kernel = 3;

    std::size_t frames() const { return fbank.frames_for(samples); }
    /// ceil(T / 4) after two stride-2 downsamplings.
    static std::size_t tokens_for(std::size_t frames) { return (frames + 3) / 4; }
    std::size_t tokens() const { return tokens_for(frames()); }
    void validate() const;
};

class SpeechEncoder {
public:
    SpeechEncoder() = default;
    SpeechEncoder(nn::ParamStore& store, const std::string& prefix, const SpeechGeometry& geom,
                  const EncoderConfig& cfg, Rng& rng);

    /// Two causal conv + GeLU layers, each followed by stride-2 row subsampling.
    Tensor conv_stack(const Tensor& fbank) const;
    SemanticFeatures encode(const Tensor& fbank) const;
    SemanticFeatures encode_waveform(std::span<const double> waveform) const;

    const SpeechGeometry& geometry() const { return geom_; }

    Tensor conv1, bias1, conv2, bias2;
    nn::Linear projection;
    Tensor position_table;
    std::vector<nn::AttentionLayer> layers;

private:
    SpeechGeometry geom_;
};

// ---------------------------------------------------------------- video

struct VideoEmbeddingConfig {
    std::size_t frames = 8;  // N_F
    std::size_t channels = 3;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t tube_frames = 2;  // N_f
    std::size_t tube_height = 8;  // h
    std::size_t tube_width = 8;   // w
    /// Swap which block masks by time and which by spatial region.
    bool swap_masks = false;

    std::size_t n_f() const { return frames / tube_frames; }
    std::size_t n_h() const { return height / tube_height; }
    std::size_t n_w() const { return width / tube_width; }
    /// L_V = n_f * n_h * n_w
    std::size_t tokens() const { return n_f() * n_h() * n_w(); }
    std::size_t tube_size() const { return tube_frames * channels * tube_height * tube_width; }
    void validate() const;
};

/// Flat voxel indices of every tube; token index is (t * n_h + i) * n_w + j.
std::vector<std::vector<std::size_t>> tube_partition(const VideoEmbeddingConfig& cfg);

/// Allowed-pair masks (L_V x L_V) for the two factorized attention blocks.
/// The spatial block relates tokens of one time index, the temporal block
/// tokens of one spatial region (reversed when swap_masks is set).
std::vector<std::uint8_t> spatial_block_mask(const VideoEmbeddingConfig& cfg);
std::vector<std::uint8_t> temporal_block_mask(const VideoEmbeddingConfig& cfg);

class VideoEncoder {
public:
    VideoEncoder() = default;
    VideoEncoder(nn::ParamStore& store, const std::string& prefix, const VideoEmbeddingConfig& cfg,
                 const EncoderConfig& enc, Rng& rng);

    /// Tube projection plus position embeddings, L_V x P.
    Tensor tubelet_embed(const Tensor& video) const;
    SemanticFeatures encode(const Tensor& video) const;

    const VideoEmbeddingConfig& config() const { return cfg_; }

    nn::Linear projection;
    Tensor position_table;
    std::vector<nn::AttentionLayer> spatial_layers, temporal_layers;
    std::vector<std::uint8_t> spatial_mask, temporal_mask;

private:
    VideoEmbeddingConfig cfg_;
};

// ---------------------------------------------------------------- tasks

class TaskEmbeddingTable {
public:
    TaskEmbeddingTable() = default;
    TaskEmbeddingTable(nn::ParamStore& store, const std::string& name, std::size_t tasks, std::size_t width,
                       Rng& rng);

    /// Appends the task's row last; L grows by one.
    SemanticFeatures append(const SemanticFeatures& f, std::size_t task_id) const;
    Tensor row(std::size_t task_id) const;
    std::size_t tasks() const { return table.rows(); }

    Tensor table;
};

}  // namespace semcomm::enc
