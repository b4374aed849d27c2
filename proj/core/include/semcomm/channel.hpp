#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "semcomm/nn.hpp"
#include "semcomm/random.hpp"

namespace semcomm::channel {

using ad::Tensor;

enum class Kind { awgn, rayleigh };

std::string_view to_string(Kind k);
Kind parse_kind(std::string_view name);

struct ChannelConfig {
    Kind kind = Kind::awgn;
    double snr_db = 10.0;
    std::uint64_t seed = 0;
    /// Rayleigh only: divide by the fading coefficient at the receiver (perfect CSI).
    bool equalize = true;

    void validate() const;
    /// Per-real-component noise variance: signal_power / 10^(snr_db / 10).
    double noise_variance(double signal_power) const;
};

/// Real symbols ready for transmission, normalized to unit mean-square power.
struct SymbolBlock {
    Tensor symbols;  // L_x x d
    double signal_power = 0.0;
    /// True for an all-zero block, which is sent as zeros.
    bool degenerate = false;
};

/// Two-layer MLP compressing P-wide rows to d-wide symbols: P -> P/2 (GeLU) -> d,
/// followed by power normalization over the whole block.
class ChannelEncoder {
public:
    ChannelEncoder() = default;
    ChannelEncoder(nn::ParamStore& store, const std::string& prefix, std::size_t width, std::size_t compressed,
                   Rng& rng);

    SymbolBlock encode(const Tensor& features) const;
    std::size_t compressed() const { return compress.out(); }

    nn::Linear hidden, compress;
};

/// Two-layer MLP restoring d-wide received rows to width P: d -> P/2 (GeLU) -> P.
class ChannelDecoder {
public:
    ChannelDecoder() = default;
    ChannelDecoder(nn::ParamStore& store, const std::string& prefix, std::size_t width, std::size_t compressed,
                   Rng& rng);

    Tensor decode(const Tensor& received) const;

    nn::Linear hidden, expand;
};

/// What one apply_channel call drew.
struct Realization {
    double fading_re = 1.0;
    double fading_im = 0.0;
    double noise_variance = 0.0;
    bool padded = false;
};

/// AWGN: x + n, n ~ N(0, sigma^2) per real component.
/// Rayleigh: consecutive reals form complex symbols, all multiplied by one
/// h ~ CN(0, 1); complex noise with sigma^2 per real component is added; with
/// equalize the result is divided by h. An odd symbol count is padded with one
/// zero that is stripped afterwards.
/// Noise and fading enter the tape as constants, so gradients flow to `x`.
Tensor apply_channel(const SymbolBlock& x, const ChannelConfig& cfg, Rng& rng, Realization* drawn = nullptr);

}  // namespace semcomm::channel
