#include "semcomm/nn.hpp"

#include <algorithm>
#include <cmath>

#include "semcomm/errors.hpp"
#include "semcomm/ops.hpp"

namespace semcomm {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = mix_seed(base);
    for (auto t : tags) s = mix_seed(s ^ mix_seed(t + 0x632be59bd9b4e019ULL));
    return s;
}

}  // namespace semcomm

namespace semcomm::nn {

Tensor ParamStore::add(const std::string& name, Tensor t) {
    if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
    t.set_requires_grad(true);
    items_.emplace_back(name, t);
    return t;
}

Tensor ParamStore::get(const std::string& name) const {
    for (const auto& [n, t] : items_)
        if (n == name) return t;
    throw LookupError("unknown parameter: " + name);
}

bool ParamStore::contains(const std::string& name) const {
    return std::any_of(items_.begin(), items_.end(), [&](const auto& p) { return p.first == name; });
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : items_) n += t.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [_, t] : items_) t.zero_grad();
}

void ParamStore::clear_grad() {
    for (auto& [_, t] : items_) t.clear_grad();
}

std::vector<std::string> ParamStore::names_of(std::span<const Tensor> tensors) const {
    std::vector<std::string> names;
    for (const auto& [n, t] : items_)
        for (const auto& q : tensors)
            if (t.same_storage(q)) {
                names.push_back(n);
                break;
            }
    return names;
}

Tensor glorot_uniform(ad::Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(-limit, limit);
    return t;
}

Tensor embedding_table(std::size_t rows, std::size_t width, Rng& rng) {
    Tensor t = Tensor::zeros({rows, width});
    for (double& v : t.data()) v = rng.normal(0.0, 0.02);
    return t;
}

Linear Linear::create(ParamStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                      Rng& rng) {
    Linear l;
    l.weight = store.add(prefix + ".weight", glorot_uniform({in, out}, in, out, rng));
    l.bias = store.add(prefix + ".bias", Tensor::zeros({out}));
    return l;
}

Tensor Linear::forward(const Tensor& x) const { return ad::add(ad::matmul(x, weight), bias); }

double AttentionConfig::score_scale() const {
    return std::sqrt(static_cast<double>(head_scale ? head_width() : width));
}

AttentionLayer::AttentionLayer(ParamStore& store, const std::string& prefix, const AttentionConfig& cfg,
                               Rng& rng)
    : cfg_(cfg) {
    if (cfg.heads == 0 || cfg.width % cfg.heads != 0) {
        throw ConfigError("attention width " + std::to_string(cfg.width) + " not divisible by " +
                          std::to_string(cfg.heads) + " heads");
    }
    const std::size_t p = cfg.width;
    w_q = store.add(prefix + ".w_q", glorot_uniform({p, p}, p, p, rng));
    w_k = store.add(prefix + ".w_k", glorot_uniform({p, p}, p, p, rng));
    w_v = store.add(prefix + ".w_v", glorot_uniform({p, p}, p, p, rng));
    w_o = store.add(prefix + ".w_o", glorot_uniform({p, p}, p, p, rng));
    ln1_gain = store.add(prefix + ".ln1.gain", Tensor::full({p}, 1.0));
    ln1_bias = store.add(prefix + ".ln1.bias", Tensor::zeros({p}));
    ffn_in = Linear::create(store, prefix + ".ffn1", p, cfg.ffn_width, rng);
    ffn_out = Linear::create(store, prefix + ".ffn2", cfg.ffn_width, p, rng);
    ln2_gain = store.add(prefix + ".ln2.gain", Tensor::full({p}, 1.0));
    ln2_bias = store.add(prefix + ".ln2.bias", Tensor::zeros({p}));
}

Tensor AttentionLayer::self_attention(const Tensor& h, std::span<const std::uint8_t> allowed) const {
    const std::size_t ph = cfg_.head_width();
    const double inv_scale = 1.0 / cfg_.score_scale();
    Tensor q = ad::matmul(h, w_q);
    Tensor k = ad::matmul(h, w_k);
    Tensor v = ad::matmul(h, w_v);
    std::vector<Tensor> heads;
    heads.reserve(cfg_.heads);
    for (std::size_t i = 0; i < cfg_.heads; ++i) {
        Tensor qi = ad::slice_cols(q, i * ph, ph);
        Tensor ki = ad::slice_cols(k, i * ph, ph);
        Tensor vi = ad::slice_cols(v, i * ph, ph);
        Tensor scores = ad::scale(ad::matmul(qi, ad::transpose(ki)), inv_scale);
        Tensor weights = allowed.empty() ? ad::softmax_rows(scores) : ad::masked_softmax_rows(scores, allowed);
        heads.push_back(ad::matmul(weights, vi));
    }
    Tensor joined = cfg_.heads == 1 ? heads[0] : ad::concat_cols(heads);
    return ad::matmul(joined, w_o);
}

Tensor AttentionLayer::feed_forward(const Tensor& x) const {
    return ffn_out.forward(ad::gelu(ffn_in.forward(x)));
}

Tensor AttentionLayer::forward(const Tensor& h, std::span<const std::uint8_t> allowed) const {
    if (h.rank() != 2 || h.dim(1) != cfg_.width || h.dim(0) == 0) {
        throw DimensionError("attention layer expects Lx" + std::to_string(cfg_.width) + " input, got " +
                             ad::shape_str(h.shape()));
    }
    Tensor mid = ad::layer_norm(ad::add(self_attention(h, allowed), h), ln1_gain, ln1_bias, cfg_.ln_eps);
    return ad::layer_norm(ad::add(feed_forward(mid), mid), ln2_gain, ln2_bias, cfg_.ln_eps);
}

}  // namespace semcomm::nn
