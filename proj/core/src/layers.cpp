#include "signcraft/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "signcraft/errors.hpp"
#include "signcraft/parallel.hpp"

namespace signcraft::ops {

namespace {

template <typename T>
void require_rank(const BasicTensor<T>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_to_string(t.shape()));
}

// Conv work is split so that every output element is owned by one index;
// anything below this many multiply-adds stays on the calling thread.
constexpr std::size_t kParallelMacs = 1 << 15;

std::size_t grain_for(std::size_t macs_per_item) {
    return std::max<std::size_t>(1, kParallelMacs / std::max<std::size_t>(1, macs_per_item));
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias) {
    require_rank(input, 4, "conv2d input");
    require_rank(weights, 4, "conv2d weights");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const std::size_t o = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    if (weights.dim(1) != c)
        throw ShapeError("conv2d: input has " + std::to_string(c) + " channels, weights expect " +
                         std::to_string(weights.dim(1)));
    if (bias.size() != o) throw ShapeError("conv2d: bias length != output channels");
    if (kh > h || kw > w)
        throw ShapeError("conv2d: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                         " does not fit input " + std::to_string(h) + "x" + std::to_string(w));

    const std::size_t oh = h - kh + 1, ow = w - kw + 1;
    BasicTensor<T> out({n, o, oh, ow});
    const T* in = input.raw();
    const T* wt = weights.raw();
    T* dst = out.raw();

    parallel_for(
        n * o,
        [&](std::size_t item) {
            const std::size_t b = item / o, f = item % o;
            T* plane = dst + item * oh * ow;
            std::fill(plane, plane + oh * ow, bias[f]);
            for (std::size_t ch = 0; ch < c; ++ch) {
                const T* src = in + (b * c + ch) * h * w;
                const T* k = wt + (f * c + ch) * kh * kw;
                for (std::size_t i = 0; i < kh; ++i) {
                    for (std::size_t j = 0; j < kw; ++j) {
                        const T kv = k[i * kw + j];
                        for (std::size_t y = 0; y < oh; ++y) {
                            const T* row = src + (y + i) * w + j;
                            T* orow = plane + y * ow;
                            for (std::size_t x = 0; x < ow; ++x) orow[x] += kv * row[x];
                        }
                    }
                }
            }
        },
        grain_for(c * kh * kw * oh * ow));
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_output, bool need_input_grad,
                             bool need_param_grads) {
    require_rank(input, 4, "conv2d input");
    require_rank(weights, 4, "conv2d weights");
    require_rank(grad_output, 4, "conv2d grad_output");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const std::size_t o = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    if (weights.dim(1) != c || kh > h || kw > w) throw ShapeError("conv2d backward: shape mismatch");
    const std::size_t oh = h - kh + 1, ow = w - kw + 1;
    if (grad_output.shape() != Shape{n, o, oh, ow})
        throw ShapeError("conv2d backward: grad_output shape " +
                         shape_to_string(grad_output.shape()) + " does not match forward output");

    ConvGrads<T> grads;
    const T* in = input.raw();
    const T* wt = weights.raw();
    const T* g = grad_output.raw();

    if (need_param_grads) {
        grads.weights = BasicTensor<T>(weights.shape());
        grads.bias = BasicTensor<T>({o});
        T* dw = grads.weights.raw();
        T* db = grads.bias.raw();
        // one filter per index: dW[f] and db[f] accumulate over the batch in order
        parallel_for(
            o,
            [&](std::size_t f) {
                // per-column partial sums keep the inner loop free of a serial reduction
                std::vector<T> lane(ow);
                T bias_acc = 0;
                for (std::size_t b = 0; b < n; ++b) {
                    const T* gp = g + (b * o + f) * oh * ow;
                    for (std::size_t p = 0; p < oh * ow; ++p) bias_acc += gp[p];
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        const T* src = in + (b * c + ch) * h * w;
                        T* k = dw + (f * c + ch) * kh * kw;
                        for (std::size_t i = 0; i < kh; ++i) {
                            for (std::size_t j = 0; j < kw; ++j) {
                                std::fill(lane.begin(), lane.end(), T{0});
                                for (std::size_t y = 0; y < oh; ++y) {
                                    const T* row = src + (y + i) * w + j;
                                    const T* grow = gp + y * ow;
                                    for (std::size_t x = 0; x < ow; ++x) lane[x] += grow[x] * row[x];
                                }
                                T acc = 0;
                                for (std::size_t x = 0; x < ow; ++x) acc += lane[x];
                                k[i * kw + j] += acc;
                            }
                        }
                    }
                }
                db[f] = bias_acc;
            },
            grain_for(n * c * kh * kw * oh * ow));
    }

    if (need_input_grad) {
        grads.input = BasicTensor<T>(input.shape());
        T* dx = grads.input.raw();
        parallel_for(
            n * c,
            [&](std::size_t item) {
                const std::size_t b = item / c, ch = item % c;
                T* plane = dx + item * h * w;
                for (std::size_t f = 0; f < o; ++f) {
                    const T* gp = g + (b * o + f) * oh * ow;
                    const T* k = wt + (f * c + ch) * kh * kw;
                    for (std::size_t i = 0; i < kh; ++i) {
                        for (std::size_t j = 0; j < kw; ++j) {
                            const T kv = k[i * kw + j];
                            for (std::size_t y = 0; y < oh; ++y) {
                                T* row = plane + (y + i) * w + j;
                                const T* grow = gp + y * ow;
                                for (std::size_t x = 0; x < ow; ++x) row[x] += kv * grow[x];
                            }
                        }
                    }
                }
            },
            grain_for(o * kh * kw * oh * ow));
    }
    return grads;
}

template <typename T>
PoolResult<T> maxpool2x2_forward(const BasicTensor<T>& input) {
    require_rank(input, 4, "maxpool2x2 input");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (h < 2 || w < 2)
        throw ShapeError("maxpool2x2: spatial size " + std::to_string(h) + "x" + std::to_string(w) +
                         " is smaller than the 2x2 window");
    const std::size_t oh = h / 2, ow = w / 2;
    PoolResult<T> result{BasicTensor<T>({n, c, oh, ow}), std::vector<std::uint32_t>(n * c * oh * ow)};
    const T* in = input.raw();
    T* out = result.output.raw();
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::size_t best = base + 2 * y * w + 2 * x;
                const std::size_t candidates[3] = {best + 1, best + w, best + w + 1};
                for (std::size_t cand : candidates)
                    if (in[cand] > in[best]) best = cand;
                const std::size_t o = (plane * oh + y) * ow + x;
                out[o] = in[best];
                result.argmax[o] = static_cast<std::uint32_t>(best);
            }
        }
    }
    return result;
}

template <typename T>
BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>& grad_output,
                                   const std::vector<std::uint32_t>& argmax,
                                   const Shape& input_shape) {
    if (grad_output.size() != argmax.size())
        throw ShapeError("maxpool2x2 backward: gradient does not match forward output");
    BasicTensor<T> dx(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += grad_output[i];
    return dx;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
    BasicTensor<T> out = input;
    for (T& v : out.data()) v = v > T{0} ? v : T{0};
    return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_output) {
    if (input.shape() != grad_output.shape()) throw ShapeError("relu backward: shape mismatch");
    BasicTensor<T> dx(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i)
        dx[i] = input[i] > T{0} ? grad_output[i] : T{0};
    return dx;
}

template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& input, double rate, Rng& rng, Phase phase) {
    if (!(rate > 0.0 && rate < 1.0))
        throw InvalidArgument("dropout rate must lie strictly between 0 and 1, got " +
                              std::to_string(rate));
    if (phase == Phase::Eval) return {input, {}};
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    DropoutResult<T> result{BasicTensor<T>(input.shape()), BasicTensor<T>(input.shape())};
    for (std::size_t i = 0; i < input.size(); ++i) {
        const T m = rng.uniform() >= rate ? scale : T{0};
        result.mask[i] = m;
        result.output[i] = input[i] * m;
    }
    return result;
}

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_output, const BasicTensor<T>& mask) {
    if (mask.empty()) return grad_output;
    if (mask.shape() != grad_output.shape()) throw ShapeError("dropout backward: shape mismatch");
    BasicTensor<T> dx(grad_output.shape());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_output[i] * mask[i];
    return dx;
}

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias) {
    require_rank(input, 2, "dense input");
    require_rank(weights, 2, "dense weights");
    const std::size_t n = input.dim(0), f = input.dim(1), m = weights.dim(1);
    if (weights.dim(0) != f)
        throw ShapeError("dense: input has " + std::to_string(f) + " features, weights expect " +
                         std::to_string(weights.dim(0)));
    if (bias.size() != m) throw ShapeError("dense: bias length != output features");

    BasicTensor<T> out({n, m});
    const T* x = input.raw();
    const T* wt = weights.raw();
    T* y = out.raw();
    parallel_for(
        n,
        [&](std::size_t b) {
            T* row = y + b * m;
            std::copy(bias.raw(), bias.raw() + m, row);
            const T* xr = x + b * f;
            for (std::size_t k = 0; k < f; ++k) {
                const T xv = xr[k];
                const T* wr = wt + k * m;
                for (std::size_t j = 0; j < m; ++j) row[j] += xv * wr[j];
            }
        },
        grain_for(f * m));
    return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_output, bool need_input_grad,
                             bool need_param_grads) {
    require_rank(input, 2, "dense input");
    require_rank(weights, 2, "dense weights");
    const std::size_t n = input.dim(0), f = input.dim(1), m = weights.dim(1);
    if (weights.dim(0) != f || grad_output.shape() != Shape{n, m})
        throw ShapeError("dense backward: shape mismatch");

    DenseGrads<T> grads;
    const T* x = input.raw();
    const T* wt = weights.raw();
    const T* g = grad_output.raw();

    if (need_param_grads) {
        grads.weights = BasicTensor<T>({f, m});
        grads.bias = BasicTensor<T>({m});
        T* dw = grads.weights.raw();
        parallel_for(
            f,
            [&](std::size_t k) {
                T* row = dw + k * m;
                for (std::size_t b = 0; b < n; ++b) {
                    const T xv = x[b * f + k];
                    const T* gr = g + b * m;
                    for (std::size_t j = 0; j < m; ++j) row[j] += xv * gr[j];
                }
            },
            grain_for(n * m));
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t j = 0; j < m; ++j) grads.bias[j] += g[b * m + j];
    }

    if (need_input_grad) {
        grads.input = BasicTensor<T>({n, f});
        T* dx = grads.input.raw();
        parallel_for(
            n,
            [&](std::size_t b) {
                const T* gr = g + b * m;
                for (std::size_t k = 0; k < f; ++k) {
                    const T* wr = wt + k * m;
                    T acc = 0;
                    for (std::size_t j = 0; j < m; ++j) acc += gr[j] * wr[j];
                    dx[b * f + k] = acc;
                }
            },
            grain_for(f * m));
    }
    return grads;
}

template <typename T>
BasicTensor<T> flatten_forward(const BasicTensor<T>& input) {
    require_rank(input, 4, "flatten input");
    return input.reshaped({input.dim(0), input.dim(1) * input.dim(2) * input.dim(3)});
}

template <typename T>
BasicTensor<T> flatten_backward(const BasicTensor<T>& grad_output, const Shape& input_shape) {
    return grad_output.reshaped(input_shape);
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& input) {
    require_rank(input, 2, "softmax input");
    const std::size_t n = input.dim(0), k = input.dim(1);
    BasicTensor<T> out(input.shape());
    std::vector<double> e(k);
    for (std::size_t b = 0; b < n; ++b) {
        const T* row = input.raw() + b * k;
        const double mx = *std::max_element(row, row + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            e[j] = std::exp(static_cast<double>(row[j]) - mx);
            sum += e[j];
        }
        for (std::size_t j = 0; j < k; ++j) out[b * k + j] = static_cast<T>(e[j] / sum);
    }
    return out;
}

#define SIGNCRAFT_INSTANTIATE(T)                                                                  \
    template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,          \
                                           const BasicTensor<T>&);                                \
    template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                          const BasicTensor<T>&, bool, bool);                     \
    template PoolResult<T> maxpool2x2_forward(const BasicTensor<T>&);                             \
    template BasicTensor<T> maxpool2x2_backward(const BasicTensor<T>&,                            \
                                                const std::vector<std::uint32_t>&, const Shape&); \
    template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                  \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);          \
    template DropoutResult<T> dropout_forward(const BasicTensor<T>&, double, Rng&, Phase);        \
    template BasicTensor<T> dropout_backward(const BasicTensor<T>&, const BasicTensor<T>&);       \
    template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                          const BasicTensor<T>&);                                 \
    template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                          const BasicTensor<T>&, bool, bool);                     \
    template BasicTensor<T> flatten_forward(const BasicTensor<T>&);                               \
    template BasicTensor<T> flatten_backward(const BasicTensor<T>&, const Shape&);                \
    template BasicTensor<T> softmax(const BasicTensor<T>&);

SIGNCRAFT_INSTANTIATE(float)
SIGNCRAFT_INSTANTIATE(double)

#undef SIGNCRAFT_INSTANTIATE

}  // namespace signcraft::ops
