#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semcomm/random.hpp"
#include "semcomm/tensor.hpp"

namespace semcomm::nn {

using ad::Tensor;

/// Insertion-ordered registry of named trainable tensors.
class ParamStore {
public:
    /// Registers `t` as trainable under `name`. Names must be unique.
    Tensor add(const std::string& name, Tensor t);
    Tensor get(const std::string& name) const;
    bool contains(const std::string& name) const;

    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();
    void clear_grad();
    /// Names of parameters whose storage is one of `tensors`.
    std::vector<std::string> names_of(std::span<const Tensor> tensors) const;

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

// Weight matrices: uniform in +-sqrt(6/(fan_in+fan_out)); biases zero;
// embedding tables normal(0, 0.02).
Tensor glorot_uniform(ad::Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor embedding_table(std::size_t rows, std::size_t width, Rng& rng);

struct Linear {
    Tensor weight;  // in x out
    Tensor bias;    // out

    static Linear create(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                         Rng& rng);
    Tensor forward(const Tensor& x) const;
    std::size_t in() const { return weight.dim(0); }
    std::size_t out() const { return weight.dim(1); }
};

struct AttentionConfig {
    std::size_t width = 64;
    std::size_t heads = 4;
    std::size_t ffn_width = 256;
    /// false: scores divided by sqrt(width); true: by sqrt(width / heads).
    bool head_scale = false;
    double ln_eps = 1e-5;

    std::size_t head_width() const { return width / heads; }
    double score_scale() const;
};

/// Post-norm transformer layer:
///   H' = LN(MSA(H) + H),  out = LN(FFN(H') + H'),
///   MSA(H) = concat(head_1..head_h) W_O,
///   head_i = softmax((H W_Q,i)(H W_K,i)^T / scale) H W_V,i,
///   FFN(x) = GeLU(x W1 + b1) W2 + b2.
/// Per-head projections are the column blocks of W_Q, W_K, W_V (width x width).
class AttentionLayer {
public:
    AttentionLayer() = default;
    AttentionLayer(ParamStore& store, const std::string& prefix, const AttentionConfig& cfg, Rng& rng);

    /// `allowed`, when non-empty, is an LxL mask of permitted query/key pairs.
    Tensor forward(const Tensor& h, std::span<const std::uint8_t> allowed = {}) const;
    Tensor self_attention(const Tensor& h, std::span<const std::uint8_t> allowed = {}) const;
    Tensor feed_forward(const Tensor& x) const;

    const AttentionConfig& config() const { return cfg_; }

    Tensor w_q, w_k, w_v, w_o;
    Linear ffn_in, ffn_out;
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;

private:
    AttentionConfig cfg_;
};

}  // namespace semcomm::nn
