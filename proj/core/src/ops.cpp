#include "semcomm/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "semcomm/errors.hpp"

namespace semcomm::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC view(std::span<const double> d, std::size_t r, std::size_t c) {
    return MapC(d.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
Map view(std::span<double> d, std::size_t r, std::size_t c) {
    return Map(d.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

void require_matrix(const Tensor& t, const char* op) {
    if (!t.defined() || t.rank() != 2) {
        throw DimensionError(std::string(op) + " expects a matrix, got " +
                             (t.defined() ? shape_str(t.shape()) : std::string("<undefined>")));
    }
}

bool is_row_vector(const Tensor& t, std::size_t n) {
    if (t.rank() == 1) return t.dim(0) == n;
    if (t.rank() == 2) return t.dim(0) == 1 && t.dim(1) == n;
    return false;
}

void check_finite(std::span<const double> d, const char* op) {
    for (double v : d) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
    }
}

}  // namespace

namespace detail {

bool tracks(const Tensor& t) { return t.defined() && t.requires_grad(); }

Tensor finish(const char* op, Tensor out, std::vector<Tensor> inputs,
              std::function<void(const Tensor& out)> rule) {
    if (!grad_enabled()) return out;
    const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return tracks(t); });
    if (!any) return out;
    out.set_requires_grad(true);
    Tape::Node node;
    node.op = op;
    node.inputs = std::move(inputs);
    node.output = out;
    node.backward = [out, rule = std::move(rule)]() { rule(out); };
    tape().record(std::move(node));
    return out;
}

}  // namespace detail

using detail::finish;
using detail::tracks;

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner extents differ, " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
    Tensor out = Tensor::zeros({m, n});
    view(out.data(), m, n).noalias() = view(a.data(), m, k) * view(b.data(), k, n);
    return finish("matmul", out, {a, b}, [a, b, m, k, n](const Tensor& o) {
        auto g = view(o.grad(), m, n);
        if (tracks(a)) {
            Tensor aa = a;
            view(aa.grad_mut(), m, k).noalias() += g * view(b.data(), k, n).transpose();
        }
        if (tracks(b)) {
            Tensor bb = b;
            view(bb.grad_mut(), k, n).noalias() += view(a.data(), m, k).transpose() * g;
        }
    });
}

Tensor elementwise(Elementwise kind, const Tensor& a, const Tensor& b) {
    const bool same = a.shape() == b.shape();
    const bool broadcast = !same && a.rank() == 2 && is_row_vector(b, a.dim(1));
    if (!same && !broadcast) {
        throw DimensionError("elementwise: cannot combine " + shape_str(a.shape()) + " with " +
                             shape_str(b.shape()));
    }
    const std::size_t n = a.size();
    const std::size_t width = broadcast ? b.size() : n;
    std::vector<double> out(n);
    auto ad = a.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double bv = bd[i % width];
        switch (kind) {
            case Elementwise::add: out[i] = ad[i] + bv; break;
            case Elementwise::sub: out[i] = ad[i] - bv; break;
            case Elementwise::mul: out[i] = ad[i] * bv; break;
        }
    }
    return finish("elementwise", Tensor(a.shape(), std::move(out)), {a, b},
                  [a, b, kind, n, width](const Tensor& o) {
                      auto g = o.grad();
                      if (tracks(a)) {
                          Tensor aa = a;
                          auto ga = aa.grad_mut();
                          auto bd = b.data();
                          for (std::size_t i = 0; i < n; ++i) {
                              ga[i] += kind == Elementwise::mul ? g[i] * bd[i % width] : g[i];
                          }
                      }
                      if (tracks(b)) {
                          Tensor bb = b;
                          auto gb = bb.grad_mut();
                          auto ad = a.data();
                          for (std::size_t i = 0; i < n; ++i) {
                              double v = g[i];
                              if (kind == Elementwise::sub) v = -v;
                              if (kind == Elementwise::mul) v *= ad[i];
                              gb[i % width] += v;
                          }
                      }
                  });
}

Tensor scale(const Tensor& x, double factor) {
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v *= factor;
    return finish("scale", Tensor(x.shape(), std::move(out)), {x}, [x, factor](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
    });
}

Tensor transpose(const Tensor& x) {
    require_matrix(x, "transpose");
    const std::size_t m = x.dim(0), n = x.dim(1);
    Tensor out = Tensor::zeros({n, m});
    view(out.data(), n, m) = view(x.data(), m, n).transpose();
    return finish("transpose", out, {x}, [x, m, n](const Tensor& o) {
        Tensor xx = x;
        view(xx.grad_mut(), m, n) += view(o.grad(), n, m).transpose();
    });
}

namespace {

Tensor softmax_impl(const Tensor& x, std::span<const std::uint8_t> allowed, const char* op) {
    require_matrix(x, op);
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (n == 0) throw DimensionError(std::string(op) + ": rows must have at least one entry");
    check_finite(x.data(), op);
    const bool masked = !allowed.empty();
    if (masked && allowed.size() != m * n) {
        throw DimensionError(std::string(op) + ": mask size does not match " + shape_str(x.shape()));
    }
    Tensor out = Tensor::zeros({m, n});
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t r = 0; r < m; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n; ++c) {
            if (masked && !allowed[r * n + c]) continue;
            mx = std::max(mx, xd[r * n + c]);
        }
        if (!std::isfinite(mx)) throw ContractError(std::string(op) + ": row with no allowed entry");
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            if (masked && !allowed[r * n + c]) continue;
            od[r * n + c] = std::exp(xd[r * n + c] - mx);
            total += od[r * n + c];
        }
        for (std::size_t c = 0; c < n; ++c) od[r * n + c] /= total;
    }
    return finish(op, out, {x}, [x, m, n](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        auto y = o.data();
        for (std::size_t r = 0; r < m; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < n; ++c) dot += y[r * n + c] * g[r * n + c];
            for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += y[r * n + c] * (g[r * n + c] - dot);
        }
    });
}

}  // namespace

Tensor softmax_rows(const Tensor& x) { return softmax_impl(x, {}, "softmax_rows"); }

Tensor masked_softmax_rows(const Tensor& x, std::span<const std::uint8_t> allowed) {
    if (allowed.empty()) throw ContractError("masked_softmax_rows: empty mask");
    return softmax_impl(x, allowed, "masked_softmax_rows");
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require_matrix(x, "layer_norm");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (n < 2) throw DegenerateInputError("layer_norm: rows need at least 2 entries, got " + shape_str(x.shape()));
    if (!is_row_vector(gain, n) || !is_row_vector(bias, n)) {
        throw DimensionError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                             shape_str(bias.shape()) + " for input " + shape_str(x.shape()));
    }
    std::vector<double> xhat(m * n), inv_std(m);
    Tensor out = Tensor::zeros({m, n});
    auto xd = x.data();
    auto gd = gain.data();
    auto bd = bias.data();
    auto od = out.data();
    for (std::size_t r = 0; r < m; ++r) {
        double mu = 0.0;
        for (std::size_t c = 0; c < n; ++c) mu += xd[r * n + c];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double d = xd[r * n + c] - mu;
            var += d * d;
        }
        var /= static_cast<double>(n);
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < n; ++c) {
            xhat[r * n + c] = (xd[r * n + c] - mu) * inv_std[r];
            od[r * n + c] = gd[c] * xhat[r * n + c] + bd[c];
        }
    }
    return finish("layer_norm", out, {x, gain, bias},
                  [x, gain, bias, m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Tensor& o) {
                      auto g = o.grad();
                      auto gd = gain.data();
                      if (tracks(gain)) {
                          Tensor t = gain;
                          auto gg = t.grad_mut();
                          for (std::size_t i = 0; i < m * n; ++i) gg[i % n] += g[i] * xhat[i];
                      }
                      if (tracks(bias)) {
                          Tensor t = bias;
                          auto gb = t.grad_mut();
                          for (std::size_t i = 0; i < m * n; ++i) gb[i % n] += g[i];
                      }
                      if (tracks(x)) {
                          Tensor t = x;
                          auto gx = t.grad_mut();
                          const double inv_n = 1.0 / static_cast<double>(n);
                          for (std::size_t r = 0; r < m; ++r) {
                              double mean_d = 0.0, mean_dx = 0.0;
                              for (std::size_t c = 0; c < n; ++c) {
                                  const double d = g[r * n + c] * gd[c];
                                  mean_d += d;
                                  mean_dx += d * xhat[r * n + c];
                              }
                              mean_d *= inv_n;
                              mean_dx *= inv_n;
                              for (std::size_t c = 0; c < n; ++c) {
                                  const double d = g[r * n + c] * gd[c];
                                  gx[r * n + c] += inv_std[r] * (d - mean_d - xhat[r * n + c] * mean_dx);
                              }
                          }
                      }
                  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu_scalar(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

Tensor gelu(const Tensor& x) {
    std::vector<double> out(x.size());
    auto xd = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = gelu_scalar(xd[i]);
    return finish("gelu", Tensor(x.shape(), std::move(out)), {x}, [x](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        auto xd = x.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xd[i];
            const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
            const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
            gx[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
        }
    });
}

Tensor conv2d(const Tensor& x, const Tensor& kernels, std::size_t stride, std::size_t padding) {
    if (x.rank() != 3 || kernels.rank() != 4) {
        throw DimensionError("conv2d: expected CxHxW input and KxCxkhxkw kernels, got " +
                             shape_str(x.shape()) + " and " + shape_str(kernels.shape()));
    }
    if (stride == 0) throw ContractError("conv2d: stride must be positive");
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const std::size_t K = kernels.dim(0), kh = kernels.dim(2), kw = kernels.dim(3);
    if (kernels.dim(1) != C) {
        throw DimensionError("conv2d: kernel channels " + shape_str(kernels.shape()) +
                             " do not match input " + shape_str(x.shape()));
    }
    if (kh > H + 2 * padding || kw > W + 2 * padding) {
        throw DimensionError("conv2d: kernel " + shape_str(kernels.shape()) +
                             " larger than padded input " + shape_str(x.shape()));
    }
    const std::size_t Ho = (H + 2 * padding - kh) / stride + 1;
    const std::size_t Wo = (W + 2 * padding - kw) / stride + 1;
    const std::size_t patch = C * kh * kw;
    const std::size_t npos = Ho * Wo;

    // cols: patch x npos; entry -1 marks padding.
    std::vector<std::ptrdiff_t> src(patch * npos, -1);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
                const std::size_t prow = (c * kh + i) * kw + j;
                for (std::size_t oy = 0; oy < Ho; ++oy) {
                    const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + i) -
                                             static_cast<std::ptrdiff_t>(padding);
                    if (y < 0 || y >= static_cast<std::ptrdiff_t>(H)) continue;
                    for (std::size_t ox = 0; ox < Wo; ++ox) {
                        const std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(ox * stride + j) -
                                                  static_cast<std::ptrdiff_t>(padding);
                        if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(W)) continue;
                        src[prow * npos + oy * Wo + ox] =
                            static_cast<std::ptrdiff_t>((c * H + static_cast<std::size_t>(y)) * W +
                                                        static_cast<std::size_t>(xx));
                    }
                }
            }
    std::vector<double> cols(patch * npos, 0.0);
    auto xd = x.data();
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (src[i] >= 0) cols[i] = xd[static_cast<std::size_t>(src[i])];

    Tensor out = Tensor::zeros({K, Ho, Wo});
    view(out.data(), K, npos).noalias() = view(kernels.data(), K, patch) * view(std::span<const double>(cols), patch, npos);

    return finish("conv2d", out, {x, kernels},
                  [x, kernels, K, patch, npos, src = std::move(src), cols = std::move(cols)](const Tensor& o) {
                      auto g = view(o.grad(), K, npos);
                      if (tracks(kernels)) {
                          Tensor t = kernels;
                          view(t.grad_mut(), K, patch).noalias() += g * view(cols, patch, npos).transpose();
                      }
                      if (tracks(x)) {
                          RowMat dcols = view(kernels.data(), K, patch).transpose() * g;
                          Tensor t = x;
                          auto gx = t.grad_mut();
                          const double* dc = dcols.data();
                          for (std::size_t i = 0; i < src.size(); ++i)
                              if (src[i] >= 0) gx[static_cast<std::size_t>(src[i])] += dc[i];
                      }
                  });
}

Tensor causal_conv1d(const Tensor& x, const Tensor& kernels) {
    require_matrix(x, "causal_conv1d");
    if (kernels.rank() != 3) {
        throw DimensionError("causal_conv1d: expected KxCxkw kernels, got " + shape_str(kernels.shape()));
    }
    const std::size_t T = x.dim(0), C = x.dim(1);
    const std::size_t K = kernels.dim(0), kw = kernels.dim(2);
    if (kw < 1) throw ContractError("causal_conv1d: kernel width must be >= 1");
    if (kernels.dim(1) != C) {
        throw DimensionError("causal_conv1d: kernels " + shape_str(kernels.shape()) +
                             " do not match input " + shape_str(x.shape()));
    }
    const std::size_t patch = C * kw;
    // cols: T x patch, column c*kw + j reads input row t - (kw-1) + j.
    std::vector<double> cols(T * patch, 0.0);
    auto xd = x.data();
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < kw; ++j) {
            const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(kw - 1);
            if (s < 0) continue;
            for (std::size_t c = 0; c < C; ++c)
                cols[t * patch + c * kw + j] = xd[static_cast<std::size_t>(s) * C + c];
        }
    Tensor out = Tensor::zeros({T, K});
    view(out.data(), T, K).noalias() = view(std::span<const double>(cols), T, patch) * view(kernels.data(), K, patch).transpose();
    return finish("causal_conv1d", out, {x, kernels},
                  [x, kernels, T, C, K, kw, patch, cols = std::move(cols)](const Tensor& o) {
                      auto g = view(o.grad(), T, K);
                      if (tracks(kernels)) {
                          Tensor t = kernels;
                          view(t.grad_mut(), K, patch).noalias() += g.transpose() * view(cols, T, patch);
                      }
                      if (tracks(x)) {
                          RowMat dcols = g * view(kernels.data(), K, patch);
                          Tensor tx = x;
                          auto gx = tx.grad_mut();
                          for (std::size_t t = 0; t < T; ++t)
                              for (std::size_t j = 0; j < kw; ++j) {
                                  const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(t + j) -
                                                           static_cast<std::ptrdiff_t>(kw - 1);
                                  if (s < 0) continue;
                                  for (std::size_t c = 0; c < C; ++c)
                                      gx[static_cast<std::size_t>(s) * C + c] +=
                                          dcols(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c * kw + j));
                              }
                      }
                  });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (numel(shape) != x.size()) {
        throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape));
    }
    Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
    return finish("reshape", out, {x}, [x](const Tensor& o) {
        Tensor xx = x;
        xx.accumulate_grad(o.grad());
    });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
    require_matrix(x, "slice_rows");
    const std::size_t n = x.dim(1);
    if (begin + count > x.dim(0)) {
        throw DimensionError("slice_rows: [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                             ") out of " + shape_str(x.shape()));
    }
    auto xd = x.data();
    Tensor out({count, n}, std::vector<double>(xd.begin() + static_cast<std::ptrdiff_t>(begin * n),
                                               xd.begin() + static_cast<std::ptrdiff_t>((begin + count) * n)));
    return finish("slice_rows", out, {x}, [x, begin, n](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        for (std::size_t i = 0; i < g.size(); ++i) gx[begin * n + i] += g[i];
    });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
    require_matrix(x, "slice_cols");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (begin + count > n) {
        throw DimensionError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                             ") out of " + shape_str(x.shape()));
    }
    Tensor out = Tensor::zeros({m, count});
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < count; ++c) od[r * count + c] = xd[r * n + begin + c];
    return finish("slice_cols", out, {x}, [x, begin, m, n, count](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < count; ++c) gx[r * n + begin + c] += g[r * count + c];
    });
}

Tensor concat_rows(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("concat_rows: no inputs");
    const std::size_t n = parts[0].cols();
    std::size_t m = 0;
    for (const auto& p : parts) {
        require_matrix(p, "concat_rows");
        if (p.dim(1) != n) {
            throw DimensionError("concat_rows: widths differ, " + shape_str(parts[0].shape()) + " vs " +
                                 shape_str(p.shape()));
        }
        m += p.dim(0);
    }
    std::vector<double> out;
    out.reserve(m * n);
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    return finish("concat_rows", Tensor({m, n}, std::move(out)), inputs, [inputs](const Tensor& o) {
        auto g = o.grad();
        std::size_t off = 0;
        for (const auto& p : inputs) {
            if (tracks(p)) {
                Tensor t = p;
                t.accumulate_grad(g.subspan(off, p.size()));
            }
            off += p.size();
        }
    });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t m = parts[0].rows();
    std::size_t n = 0;
    for (const auto& p : parts) {
        require_matrix(p, "concat_cols");
        if (p.dim(0) != m) {
            throw DimensionError("concat_cols: heights differ, " + shape_str(parts[0].shape()) + " vs " +
                                 shape_str(p.shape()));
        }
        n += p.dim(1);
    }
    Tensor out = Tensor::zeros({m, n});
    auto od = out.data();
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t w = p.dim(1);
        auto pd = p.data();
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < w; ++c) od[r * n + off + c] = pd[r * w + c];
        off += w;
    }
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    return finish("concat_cols", out, inputs, [inputs, m, n](const Tensor& o) {
        auto g = o.grad();
        std::size_t off = 0;
        for (const auto& p : inputs) {
            const std::size_t w = p.dim(1);
            if (tracks(p)) {
                Tensor t = p;
                auto gp = t.grad_mut();
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < w; ++c) gp[r * w + c] += g[r * n + off + c];
            }
            off += w;
        }
    });
}

Tensor take_rows(const Tensor& x, std::span<const std::size_t> index) {
    require_matrix(x, "take_rows");
    const std::size_t m = x.dim(0), n = x.dim(1);
    std::vector<std::size_t> idx(index.begin(), index.end());
    Tensor out = Tensor::zeros({idx.size(), n});
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= m) {
            throw LookupError("take_rows: index " + std::to_string(idx[i]) + " out of range for " +
                              shape_str(x.shape()));
        }
        std::copy_n(xd.begin() + static_cast<std::ptrdiff_t>(idx[i] * n), n,
                    od.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    return finish("take_rows", out, {x}, [x, n, idx = std::move(idx)](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < n; ++c) gx[idx[i] * n + c] += g[i * n + c];
    });
}

Tensor mean_rows(const Tensor& x) {
    require_matrix(x, "mean_rows");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (m == 0) throw DimensionError("mean_rows: no rows");
    Tensor out = Tensor::zeros({1, n});
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) od[c] += xd[r * n + c];
    for (double& v : od) v /= static_cast<double>(m);
    return finish("mean_rows", out, {x}, [x, m, n](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        const double inv = 1.0 / static_cast<double>(m);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += g[c] * inv;
    });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.data()) total += v;
    return finish("sum", Tensor::scalar(total), {x}, [x](const Tensor& o) {
        Tensor xx = x;
        const double g = o.grad()[0];
        for (double& v : xx.grad_mut()) v += g;
    });
}

Tensor mean(const Tensor& x) {
    if (x.size() == 0) throw DimensionError("mean: empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor normalize_power(const Tensor& x, bool* degenerate) {
    const std::size_t n = x.size();
    double ms = 0.0;
    for (double v : x.data()) ms += v * v;
    ms = n ? ms / static_cast<double>(n) : 0.0;
    if (degenerate) *degenerate = ms == 0.0;
    if (ms == 0.0) {
        return finish("normalize_power", x.clone(), {x}, [x](const Tensor& o) {
            Tensor xx = x;
            xx.accumulate_grad(o.grad());
        });
    }
    const double s = std::sqrt(ms);
    std::vector<double> out(x.data().begin(), x.data().end());
    for (double& v : out) v /= s;
    return finish("normalize_power", Tensor(x.shape(), std::move(out)), {x}, [x, s, n](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        auto y = o.data();
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += g[i] * y[i];
        dot /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) gx[i] += (g[i] - y[i] * dot) / s;
    });
}

Tensor complex_scale_pairs(const Tensor& x, double re, double im) {
    const std::size_t n = x.size();
    if (n % 2 != 0) throw DimensionError("complex_scale_pairs: odd element count " + shape_str(x.shape()));
    std::vector<double> out(n);
    auto xd = x.data();
    for (std::size_t p = 0; p < n; p += 2) {
        out[p] = re * xd[p] - im * xd[p + 1];
        out[p + 1] = re * xd[p + 1] + im * xd[p];
    }
    return finish("complex_scale_pairs", Tensor(x.shape(), std::move(out)), {x}, [x, re, im, n](const Tensor& o) {
        Tensor xx = x;
        auto gx = xx.grad_mut();
        auto g = o.grad();
        for (std::size_t p = 0; p < n; p += 2) {
            gx[p] += re * g[p] + im * g[p + 1];
            gx[p + 1] += -im * g[p] + re * g[p + 1];
        }
    });
}

}  // namespace semcomm::ad
