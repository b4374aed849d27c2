#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "semcomm/tensor.hpp"

namespace semcomm::ad {

enum class Elementwise { add, sub, mul };

// Shape conventions: "matrix" means rank 2. Row-vector operands may be rank 1
// of length n or rank 2 of shape 1xn.

Tensor matmul(const Tensor& a, const Tensor& b);

/// Pointwise a (op) b. b may equal a's shape or be a row vector broadcast over a's rows.
Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b);
inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(Elementwise::mul, a, b); }

Tensor scale(const Tensor& x, double factor);
Tensor transpose(const Tensor& x);

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);
/// Row-wise softmax restricted to entries where allowed[r*n+c] != 0. Masked
/// entries are exactly zero. Every row must allow at least one entry.
Tensor masked_softmax_rows(const Tensor& x, std::span<const std::uint8_t> allowed);

/// Per-row normalization (biased variance) followed by per-column gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

/// 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
Tensor gelu(const Tensor& x);
double gelu_scalar(double x);

/// x: C x H x W, kernels: K x C x kh x kw. Cross-correlation with zero padding.
Tensor conv2d(const Tensor& x, const Tensor& kernels, std::size_t stride, std::size_t padding);

/// x: T x C, kernels: K x C x kw. Output row t sees input rows t-kw+1 .. t;
/// kernel tap kw-1 multiplies the current step.
Tensor causal_conv1d(const Tensor& x, const Tensor& kernels);

Tensor reshape(const Tensor& x, Shape shape);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);
/// Gathers rows by index; doubles as embedding lookup.
Tensor take_rows(const Tensor& x, std::span<const std::size_t> index);

/// 1 x n column means.
Tensor mean_rows(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

/// x / sqrt(mean(x^2)). An all-zero input is passed through unchanged and
/// reported through `degenerate`.
Tensor normalize_power(const Tensor& x, bool* degenerate = nullptr);

/// Treats consecutive element pairs as complex numbers and multiplies each by
/// (re + i im). Requires an even element count.
Tensor complex_scale_pairs(const Tensor& x, double re, double im);

namespace detail {
/// Marks `out` as tracked and records `rule` if any input requires a gradient.
/// `rule` reads out.grad() and accumulates into the inputs.
Tensor finish(const char* op, Tensor out, std::vector<Tensor> inputs,
              std::function<void(const Tensor& out)> rule);
bool tracks(const Tensor& t);
}  // namespace detail

}  // namespace semcomm::ad
