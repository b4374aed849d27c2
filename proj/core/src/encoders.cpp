#include "semcomm/encoders.hpp"

#include <cmath>
#include <numbers>

#include "semcomm/errors.hpp"
#include "semcomm/ops.hpp"

namespace semcomm {

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::image: return "image";
        case Modality::text: return "text";
        case Modality::speech: return "speech";
        case Modality::video: return "video";
    }
    return "unknown";
}

Modality parse_modality(std::string_view name) {
    for (auto m : kAllModalities)
        if (to_string(m) == name) return m;
    throw ConfigError("unknown modality: " + std::string(name));
}

}  // namespace semcomm

namespace semcomm::enc {

namespace {

std::vector<nn::AttentionLayer> make_layers(nn::ParamStore& store, const std::string& prefix,
                                            const EncoderConfig& cfg, Rng& rng) {
    std::vector<nn::AttentionLayer> layers;
    for (std::size_t i = 0; i < cfg.layers; ++i)
        layers.emplace_back(store, prefix + ".layer" + std::to_string(i), cfg.attention(), rng);
    return layers;
}

Tensor run_layers(const std::vector<nn::AttentionLayer>& layers, Tensor h) {
    for (const auto& layer : layers) h = layer.forward(h);
    return h;
}

std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

// K x H x W  <->  (H*W) x K
Tensor to_positions(const Tensor& map) {
    const std::size_t k = map.dim(0), hw = map.dim(1) * map.dim(2);
    return ad::transpose(ad::reshape(map, {k, hw}));
}

Tensor from_positions(const Tensor& rows, std::size_t h, std::size_t w) {
    return ad::reshape(ad::transpose(rows), {rows.dim(1), h, w});
}

Tensor add_channel_bias(const Tensor& map, const Tensor& bias) {
    const std::size_t h = map.dim(1), w = map.dim(2);
    return from_positions(ad::add(to_positions(map), bias), h, w);
}

}  // namespace

nn::AttentionConfig EncoderConfig::attention() const {
    nn::AttentionConfig a;
    a.width = width;
    a.heads = heads;
    a.ffn_width = 4 * width;
    a.head_scale = head_scale;
    return a;
}

// ---------------------------------------------------------------- image

std::size_t ImageGeometry::tokens() const {
    auto out = [](std::size_t n, std::size_t s) { return (n + 2 - 3) / s + 1; };
    const std::size_t h = out(out(height, stem_stride), block_stride);
    const std::size_t w = out(out(width, stem_stride), block_stride);
    return h * w;
}

void ImageGeometry::validate() const {
    if (channels == 0 || height < 3 || width < 3) {
        throw ConfigError("image geometry needs at least 1 channel and 3x3 pixels");
    }
    if (stem_stride == 0 || block_stride == 0) throw ConfigError("image strides must be positive");
    if (height % (stem_stride * block_stride) != 0 || width % (stem_stride * block_stride) != 0) {
        throw ConfigError("image extents " + std::to_string(height) + "x" + std::to_string(width) +
                          " not divisible by total stride " + std::to_string(stem_stride * block_stride));
    }
}

Tensor ResidualBlock::forward(const Tensor& x) const {
    Tensor h = add_channel_bias(ad::conv2d(x, conv1, stride, 1), bias1);
    const std::size_t ho = h.dim(1), wo = h.dim(2);
    h = ad::gelu(from_positions(ad::layer_norm(to_positions(h), norm_gain, norm_bias), ho, wo));
    h = add_channel_bias(ad::conv2d(h, conv2, 1, 1), bias2);
    Tensor skip = x;
    if (stride != 1) {
        const std::size_t w = x.dim(2);
        std::vector<std::size_t> keep;
        for (std::size_t y = 0; y < ho; ++y)
            for (std::size_t c = 0; c < wo; ++c) keep.push_back(y * stride * w + c * stride);
        skip = from_positions(ad::take_rows(to_positions(x), keep), ho, wo);
    }
    return ad::add(h, skip);
}

ImageEncoder::ImageEncoder(nn::ParamStore& store, const std::string& prefix, const ImageGeometry& geom,
                           std::size_t width, Rng& rng)
    : geom_(geom), width_(width) {
    geom.validate();
    const std::size_t c = geom.channels, p = width;
    stem = store.add(prefix + ".stem.kernel", nn::glorot_uniform({p, c, 3, 3}, c * 9, p * 9, rng));
    stem_bias = store.add(prefix + ".stem.bias", Tensor::zeros({p}));
    auto make_block = [&](const std::string& name, std::size_t stride) {
        ResidualBlock b;
        b.stride = stride;
        b.conv1 = store.add(name + ".conv1", nn::glorot_uniform({p, p, 3, 3}, p * 9, p * 9, rng));
        b.bias1 = store.add(name + ".bias1", Tensor::zeros({p}));
        b.norm_gain = store.add(name + ".norm.gain", Tensor::full({p}, 1.0));
        b.norm_bias = store.add(name + ".norm.bias", Tensor::zeros({p}));
        b.conv2 = store.add(name + ".conv2", nn::glorot_uniform({p, p, 3, 3}, p * 9, p * 9, rng));
        b.bias2 = store.add(name + ".bias2", Tensor::zeros({p}));
        return b;
    };
    block1 = make_block(prefix + ".block1", geom.block_stride);
    block2 = make_block(prefix + ".block2", 1);
}

Tensor ImageEncoder::feature_map(const Tensor& image) const {
    if (image.rank() != 3 || image.dim(0) != geom_.channels || image.dim(1) != geom_.height ||
        image.dim(2) != geom_.width) {
        throw DimensionError("image encoder configured for [" + std::to_string(geom_.channels) + "x" +
                             std::to_string(geom_.height) + "x" + std::to_string(geom_.width) + "], got " +
                             ad::shape_str(image.shape()));
    }
    Tensor h = add_channel_bias(ad::conv2d(image, stem, geom_.stem_stride, 1), stem_bias);
    h = block1.forward(h);
    return block2.forward(h);
}

SemanticFeatures ImageEncoder::encode(const Tensor& image) const {
    return {to_positions(feature_map(image)), Modality::image, 0};
}

// ---------------------------------------------------------------- text

void TextGeometry::validate() const {
    if (vocab < 3) throw ConfigError("text vocabulary must hold pad, unknown and at least one word");
    if (length == 0) throw ConfigError("text length must be positive");
    if (segments == 0) throw ConfigError("text needs at least one segment");
}

std::vector<std::size_t> tokenize(std::span<const std::string> words,
                                  const std::map<std::string, std::size_t>& vocab, std::size_t length) {
    std::vector<std::size_t> ids(length, kPadId);
    for (std::size_t i = 0; i < std::min(length, words.size()); ++i) {
        auto it = vocab.find(words[i]);
        ids[i] = it == vocab.end() ? kUnknownId : it->second;
    }
    return ids;
}

TextEncoder::TextEncoder(nn::ParamStore& store, const std::string& prefix, const TextGeometry& geom,
                         const EncoderConfig& cfg, Rng& rng)
    : geom_(geom) {
    geom.validate();
    word_table = store.add(prefix + ".word_table", nn::embedding_table(geom.vocab, cfg.width, rng));
    position_table = store.add(prefix + ".position_table", nn::embedding_table(geom.length, cfg.width, rng));
    segment_table = store.add(prefix + ".segment_table", nn::embedding_table(geom.segments, cfg.width, rng));
    layers = make_layers(store, prefix, cfg, rng);
}

Tensor TextEncoder::input_embeddings(std::span<const std::size_t> ids, std::span<const std::size_t> segments) const {
    if (ids.size() != geom_.length) {
        throw DimensionError("text encoder expects " + std::to_string(geom_.length) + " ids, got " +
                             std::to_string(ids.size()));
    }
    std::vector<std::size_t> seg(segments.begin(), segments.end());
    if (seg.empty()) seg.assign(ids.size(), 0);
    if (seg.size() != ids.size()) throw DimensionError("segment ids and token ids differ in length");
    for (auto id : ids)
        if (id >= geom_.vocab) throw LookupError("token id " + std::to_string(id) + " outside vocabulary");
    for (auto s : seg)
        if (s >= geom_.segments) throw LookupError("segment id " + std::to_string(s) + " outside segment table");
    const auto pos = iota(ids.size());
    return ad::add(ad::add(ad::take_rows(word_table, ids), ad::take_rows(position_table, pos)),
                   ad::take_rows(segment_table, seg));
}

SemanticFeatures TextEncoder::encode(std::span<const std::size_t> ids, std::span<const std::size_t> segments) const {
    return {run_layers(layers, input_embeddings(ids, segments)), Modality::text, 0};
}

// ---------------------------------------------------------------- speech

std::size_t FbankConfig::frames_for(std::size_t samples) const {
    if (samples < frame) return 0;
    return (samples - frame) / hop + 1;
}

std::vector<double> FbankConfig::edges_hz() const {
    auto to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
    auto to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double top = to_mel(sample_rate / 2.0);
    std::vector<double> edges(filters + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
        edges[i] = to_hz(top * static_cast<double>(i) / static_cast<double>(filters + 1));
    return edges;
}

Tensor compute_fbank(std::span<const double> waveform, const FbankConfig& cfg) {
    if (cfg.frame == 0 || cfg.hop == 0 || cfg.filters == 0) throw ConfigError("fbank: frame, hop and filters must be positive");
    if (waveform.size() < cfg.frame) {
        throw DegenerateInputError("fbank: waveform of " + std::to_string(waveform.size()) +
                                   " samples is shorter than one frame of " + std::to_string(cfg.frame));
    }
    const std::size_t n = cfg.frame, bins = n / 2 + 1;
    const std::size_t frames = cfg.frames_for(waveform.size());
    const auto edges = cfg.edges_hz();

    std::vector<double> window(n), cos_t(n * bins), sin_t(n * bins);
    for (std::size_t i = 0; i < n; ++i)
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    for (std::size_t k = 0; k < bins; ++k)
        for (std::size_t i = 0; i < n; ++i) {
            const double a = 2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
            cos_t[k * n + i] = std::cos(a);
            sin_t[k * n + i] = std::sin(a);
        }
    // weights[m * bins + k]
    std::vector<double> weights(cfg.filters * bins, 0.0);
    for (std::size_t m = 0; m < cfg.filters; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * cfg.sample_rate / static_cast<double>(n);
            double w = 0.0;
            if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
            else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
            weights[m * bins + k] = w;
        }
    }

    Tensor out = Tensor::zeros({frames, cfg.filters});
    std::vector<double> buf(n), power(bins);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < n; ++i) buf[i] = waveform[t * cfg.hop + i] * window[i];
        for (std::size_t k = 0; k < bins; ++k) {
            double re = 0.0, im = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                re += buf[i] * cos_t[k * n + i];
                im -= buf[i] * sin_t[k * n + i];
            }
            power[k] = re * re + im * im;
        }
        for (std::size_t m = 0; m < cfg.filters; ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k < bins; ++k) e += weights[m * bins + k] * power[k];
            out.at(t, m) = std::log(std::max(e, cfg.log_floor));
        }
    }
    return out;
}

void SpeechGeometry::validate() const {
    if (frames() == 0) throw ConfigError("speech samples shorter than one fbank frame");
    if (conv_channels == 0 || kernel == 0) throw ConfigError("speech conv channels and kernel must be positive");
}

SpeechEncoder::SpeechEncoder(nn::ParamStore& store, const std::string& prefix, const SpeechGeometry& geom,
                             const EncoderConfig& cfg, Rng& rng)
    : geom_(geom) {
    geom.validate();
    const std::size_t f = geom.fbank.filters, c = geom.conv_channels, k = geom.kernel;
    conv1 = store.add(prefix + ".conv1", nn::glorot_uniform({c, f, k}, f * k, c * k, rng));
    bias1 = store.add(prefix + ".bias1", Tensor::zeros({c}));
    conv2 = store.add(prefix + ".conv2", nn::glorot_uniform({c, c, k}, c * k, c * k, rng));
    bias2 = store.add(prefix + ".bias2", Tensor::zeros({c}));
    projection = nn::Linear::create(store, prefix + ".projection", c, cfg.width, rng);
    position_table = store.add(prefix + ".position_table", nn::embedding_table(geom.tokens(), cfg.width, rng));
    layers = make_layers(store, prefix, cfg, rng);
}

Tensor SpeechEncoder::conv_stack(const Tensor& fbank) const {
    if (fbank.rank() != 2 || fbank.dim(1) != geom_.fbank.filters || fbank.dim(0) == 0) {
        throw DimensionError("speech encoder expects T x " + std::to_string(geom_.fbank.filters) + " fbank, got " +
                             ad::shape_str(fbank.shape()));
    }
    auto halve = [](const Tensor& x) {
        std::vector<std::size_t> keep;
        for (std::size_t t = 0; t < x.dim(0); t += 2) keep.push_back(t);
        return ad::take_rows(x, keep);
    };
    Tensor h = halve(ad::gelu(ad::add(ad::causal_conv1d(fbank, conv1), bias1)));
    return halve(ad::gelu(ad::add(ad::causal_conv1d(h, conv2), bias2)));
}

SemanticFeatures SpeechEncoder::encode(const Tensor& fbank) const {
    Tensor h = projection.forward(conv_stack(fbank));
    if (h.dim(0) > position_table.dim(0)) {
        throw DimensionError("speech input of " + std::to_string(fbank.dim(0)) + " frames exceeds configured " +
                             std::to_string(geom_.frames()));
    }
    h = ad::add(h, ad::slice_rows(position_table, 0, h.dim(0)));
    return {run_layers(layers, h), Modality::speech, 0};
}

SemanticFeatures SpeechEncoder::encode_waveform(std::span<const double> waveform) const {
    return encode(compute_fbank(waveform, geom_.fbank));
}

// ---------------------------------------------------------------- video

void VideoEmbeddingConfig::validate() const {
    if (tube_frames == 0 || tube_height == 0 || tube_width == 0 || frames == 0 || height == 0 || width == 0 ||
        channels == 0) {
        throw ConfigError("video extents and tube extents must be positive");
    }
    if (frames % tube_frames || height % tube_height || width % tube_width) {
        throw ConfigError("video " + std::to_string(frames) + "x" + std::to_string(height) + "x" +
                          std::to_string(width) + " not divisible by tube " + std::to_string(tube_frames) + "x" +
                          std::to_string(tube_height) + "x" + std::to_string(tube_width));
    }
}

std::vector<std::vector<std::size_t>> tube_partition(const VideoEmbeddingConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<std::size_t>> tubes(cfg.tokens());
    for (std::size_t t = 0; t < cfg.n_f(); ++t)
        for (std::size_t i = 0; i < cfg.n_h(); ++i)
            for (std::size_t j = 0; j < cfg.n_w(); ++j) {
                auto& tube = tubes[(t * cfg.n_h() + i) * cfg.n_w() + j];
                tube.reserve(cfg.tube_size());
                for (std::size_t df = 0; df < cfg.tube_frames; ++df)
                    for (std::size_t c = 0; c < cfg.channels; ++c)
                        for (std::size_t dy = 0; dy < cfg.tube_height; ++dy)
                            for (std::size_t dx = 0; dx < cfg.tube_width; ++dx) {
                                const std::size_t f = t * cfg.tube_frames + df;
                                const std::size_t y = i * cfg.tube_height + dy;
                                const std::size_t x = j * cfg.tube_width + dx;
                                tube.push_back(((f * cfg.channels + c) * cfg.height + y) * cfg.width + x);
                            }
            }
    return tubes;
}

namespace {
std::vector<std::uint8_t> block_mask(const VideoEmbeddingConfig& cfg, bool same_time) {
    const std::size_t n = cfg.tokens(), regions = cfg.n_h() * cfg.n_w();
    std::vector<std::uint8_t> mask(n * n, 0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const bool ok = same_time ? (a / regions == b / regions) : (a % regions == b % regions);
            mask[a * n + b] = ok ? 1 : 0;
        }
    return mask;
}
}  // namespace

std::vector<std::uint8_t> spatial_block_mask(const VideoEmbeddingConfig& cfg) { return block_mask(cfg, !cfg.swap_masks); }
std::vector<std::uint8_t> temporal_block_mask(const VideoEmbeddingConfig& cfg) { return block_mask(cfg, cfg.swap_masks); }

VideoEncoder::VideoEncoder(nn::ParamStore& store, const std::string& prefix, const VideoEmbeddingConfig& cfg,
                           const EncoderConfig& enc, Rng& rng)
    : cfg_(cfg) {
    cfg.validate();
    projection = nn::Linear::create(store, prefix + ".tube_projection", cfg.tube_size(), enc.width, rng);
    position_table = store.add(prefix + ".position_table", nn::embedding_table(cfg.tokens(), enc.width, rng));
    for (std::size_t i = 0; i < enc.layers; ++i) {
        spatial_layers.emplace_back(store, prefix + ".layer" + std::to_string(i) + ".spatial", enc.attention(), rng);
        temporal_layers.emplace_back(store, prefix + ".layer" + std::to_string(i) + ".temporal", enc.attention(), rng);
    }
    spatial_mask = spatial_block_mask(cfg);
    temporal_mask = temporal_block_mask(cfg);
}

Tensor VideoEncoder::tubelet_embed(const Tensor& video) const {
    if (video.rank() != 4 || video.dim(0) != cfg_.frames || video.dim(1) != cfg_.channels ||
        video.dim(2) != cfg_.height || video.dim(3) != cfg_.width) {
        throw DimensionError("video encoder configured for [" + std::to_string(cfg_.frames) + "x" +
                             std::to_string(cfg_.channels) + "x" + std::to_string(cfg_.height) + "x" +
                             std::to_string(cfg_.width) + "], got " + ad::shape_str(video.shape()));
    }
    const auto tubes = tube_partition(cfg_);
    std::vector<std::size_t> order;
    order.reserve(video.size());
    for (const auto& tube : tubes) order.insert(order.end(), tube.begin(), tube.end());
    Tensor column = ad::reshape(video, {video.size(), 1});
    Tensor flat = ad::reshape(ad::take_rows(column, order), {tubes.size(), cfg_.tube_size()});
    return ad::add(projection.forward(flat), position_table);
}

SemanticFeatures VideoEncoder::encode(const Tensor& video) const {
    Tensor h = tubelet_embed(video);
    for (std::size_t i = 0; i < spatial_layers.size(); ++i) {
        h = spatial_layers[i].forward(h, spatial_mask);
        h = temporal_layers[i].forward(h, temporal_mask);
    }
    return {h, Modality::video, 0};
}

// ---------------------------------------------------------------- tasks

TaskEmbeddingTable::TaskEmbeddingTable(nn::ParamStore& store, const std::string& name, std::size_t tasks,
                                       std::size_t width, Rng& rng) {
    if (tasks == 0) throw ConfigError("task embedding table needs at least one task");
    table = store.add(name, nn::embedding_table(tasks, width, rng));
}

Tensor TaskEmbeddingTable::row(std::size_t task_id) const {
    if (task_id >= table.rows()) {
        throw LookupError("task " + std::to_string(task_id) + " not registered (" + std::to_string(table.rows()) +
                          " tasks)");
    }
    const std::size_t idx[] = {task_id};
    return ad::take_rows(table, idx);
}

SemanticFeatures TaskEmbeddingTable::append(const SemanticFeatures& f, std::size_t task_id) const {
    Tensor r = row(task_id);
    if (f.matrix.rank() != 2 || f.matrix.dim(1) != table.dim(1)) {
        throw DimensionError("features " + ad::shape_str(f.matrix.shape()) + " do not match task embedding width " +
                             std::to_string(table.dim(1)));
    }
    const Tensor parts[] = {f.matrix, r};
    return {ad::concat_rows(parts), f.modality, task_id};
}

}  // namespace semcomm::enc
