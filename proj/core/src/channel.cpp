#include "semcomm/channel.hpp"

#include <cmath>

#include "semcomm/errors.hpp"
#include "semcomm/log.hpp"
#include "semcomm/ops.hpp"

namespace semcomm::channel {

std::string_view to_string(Kind k) { return k == Kind::awgn ? "awgn" : "rayleigh"; }

Kind parse_kind(std::string_view name) {
    if (name == "awgn" || name == "AWGN") return Kind::awgn;
    if (name == "rayleigh" || name == "Rayleigh") return Kind::rayleigh;
    throw ConfigError("unknown channel kind: " + std::string(name));
}

void ChannelConfig::validate() const {
    if (!std::isfinite(snr_db)) throw ConfigError("channel SNR must be finite");
}

double ChannelConfig::noise_variance(double signal_power) const {
    return signal_power / std::pow(10.0, snr_db / 10.0);
}

ChannelEncoder::ChannelEncoder(nn::ParamStore& store, const std::string& prefix, std::size_t width,
                               std::size_t compressed, Rng& rng) {
    if (compressed == 0 || compressed >= width) {
        throw ConfigError("channel encoder output width " + std::to_string(compressed) + " must be in [1, " +
                          std::to_string(width) + ")");
    }
    if (width < 2) throw ConfigError("channel encoder input width must be at least 2");
    hidden = nn::Linear::create(store, prefix + ".hidden", width, width / 2, rng);
    compress = nn::Linear::create(store, prefix + ".compress", width / 2, compressed, rng);
}

SymbolBlock ChannelEncoder::encode(const Tensor& features) const {
    if (features.rank() != 2 || features.dim(0) == 0 || features.dim(1) != hidden.in()) {
        throw DimensionError("channel encoder expects L x " + std::to_string(hidden.in()) + " features, got " +
                             ad::shape_str(features.shape()));
    }
    Tensor z = compress.forward(ad::gelu(hidden.forward(features)));
    SymbolBlock block;
    block.symbols = ad::normalize_power(z, &block.degenerate);
    if (block.degenerate) {
        log::warn("channel encoder produced an all-zero block; transmitting zeros");
        block.signal_power = 0.0;
    } else {
        double ms = 0.0;
        for (double v : block.symbols.data()) ms += v * v;
        block.signal_power = ms / static_cast<double>(block.symbols.size());
    }
    return block;
}

ChannelDecoder::ChannelDecoder(nn::ParamStore& store, const std::string& prefix, std::size_t width,
                               std::size_t compressed, Rng& rng) {
    if (compressed == 0 || width < 2) throw ConfigError("channel decoder widths must be positive");
    hidden = nn::Linear::create(store, prefix + ".hidden", compressed, width / 2, rng);
    expand = nn::Linear::create(store, prefix + ".expand", width / 2, width, rng);
}

Tensor ChannelDecoder::decode(const Tensor& received) const {
    if (received.rank() != 2 || received.dim(1) != hidden.in()) {
        throw DimensionError("channel decoder expects L x " + std::to_string(hidden.in()) + " symbols, got " +
                             ad::shape_str(received.shape()));
    }
    return expand.forward(ad::gelu(hidden.forward(received)));
}

Tensor apply_channel(const SymbolBlock& x, const ChannelConfig& cfg, Rng& rng, Realization* drawn) {
    cfg.validate();
    const Tensor& s = x.symbols;
    // Degenerate blocks use the nominal unit power for the noise level.
    const double power = x.degenerate ? 1.0 : x.signal_power;
    Realization r;
    r.noise_variance = cfg.noise_variance(power);
    const double sigma = std::sqrt(r.noise_variance);

    if (cfg.kind == Kind::awgn) {
        Tensor noise = Tensor::zeros(s.shape());
        for (double& v : noise.data()) v = rng.normal(0.0, sigma);
        if (drawn) *drawn = r;
        return ad::add(s, noise);
    }

    const std::size_t n = s.size();
    Tensor flat = ad::reshape(s, {1, n});
    if (n % 2 != 0) {
        r.padded = true;
        const Tensor parts[] = {flat, Tensor::zeros({1, 1})};
        flat = ad::concat_cols(parts);
    }
    r.fading_re = rng.normal(0.0, std::sqrt(0.5));
    r.fading_im = rng.normal(0.0, std::sqrt(0.5));
    Tensor y = ad::complex_scale_pairs(flat, r.fading_re, r.fading_im);
    // Complex noise CN(0, sigma^2): half the variance on each real component.
    Tensor noise = Tensor::zeros(y.shape());
    for (double& v : noise.data()) v = rng.normal(0.0, sigma * std::sqrt(0.5));
    y = ad::add(y, noise);
    if (cfg.equalize) {
        const double mag2 = r.fading_re * r.fading_re + r.fading_im * r.fading_im;
        y = ad::complex_scale_pairs(y, r.fading_re / mag2, -r.fading_im / mag2);
    }
    if (r.padded) y = ad::slice_cols(y, 0, n);
    if (drawn) *drawn = r;
    return ad::reshape(y, s.shape());
}

}  // namespace semcomm::channel
