#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fontauth/common/errors.hpp"
#include "fontauth/common/rng.hpp"
#include "fontauth/nncore/layers.hpp"
#include "fontauth/nncore/tensor.hpp"

namespace fontauth::nn {

/// Learnable tensors of one layer. Activation layers leave both empty.
template <typename T>
struct LayerParams {
    Tensor<T> weights;
    Tensor<T> bias;

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <typename T>
using Gradients = std::vector<LayerParams<T>>;

/// Sequential stack of conv / dense / activation layers over an (H, W, C)
/// input. Parameters start at zero; see initialize().
template <typename T>
class Network {
public:
    Network() = default;

    Network(FeatureShape input, std::vector<LayerSpec> layers) : input_(input), layers_(std::move(layers)) {
        if (input_.height < 1 || input_.width < 1 || input_.channels < 1) throw ShapeError("empty network input");
        shapes_.push_back(input_);
        for (const auto& layer : layers_) shapes_.push_back(infer_output(layer, shapes_.back()));
        params_.reserve(layers_.size());
        for (const auto& layer : layers_) {
            LayerParams<T> p;
            if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
                p.weights = Tensor<T>({static_cast<std::size_t>(c->out_channels), static_cast<std::size_t>(c->kernel_h),
                                       static_cast<std::size_t>(c->kernel_w), static_cast<std::size_t>(c->in_channels)});
                p.bias = Tensor<T>({c->bias_count()});
            } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
                p.weights = Tensor<T>({static_cast<std::size_t>(d->out_features), static_cast<std::size_t>(d->in_features)});
                p.bias = Tensor<T>({d->bias_count()});
            }
            params_.push_back(std::move(p));
        }
    }

    const FeatureShape& input_shape() const { return input_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    /// shapes()[i] is the input geometry of layer i; shapes().back() is the output.
    const std::vector<FeatureShape>& shapes() const { return shapes_; }
    std::size_t output_width() const { return shapes_.back().size(); }

    std::vector<LayerParams<T>>& params() { return params_; }
    const std::vector<LayerParams<T>>& params() const { return params_; }

    /// Analytic count from the layer specs.
    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& layer : layers_) n += nn::param_count(layer);
        return n;
    }

    /// Count of scalars actually stored.
    std::size_t stored_param_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.weights.size() + p.bias.size();
        return n;
    }

    Gradients<T> zero_gradients() const {
        Gradients<T> g;
        for (const auto& p : params_) g.push_back({Tensor<T>(p.weights.shape), Tensor<T>(p.bias.shape)});
        return g;
    }

    template <typename U>
    Network<U> cast() const {
        Network<U> out(input_, layers_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            out.params()[i].weights = params_[i].weights.template cast<U>();
            out.params()[i].bias = params_[i].bias.template cast<U>();
        }
        return out;
    }

    friend bool operator==(const Network&, const Network&) = default;

private:
    FeatureShape input_;
    std::vector<LayerSpec> layers_;
    std::vector<FeatureShape> shapes_;
    std::vector<LayerParams<T>> params_;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// Draws happen layer by layer in storage order from Rng(seed).
template <typename T>
void initialize(Network<T>& net, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        double fan_in = 0, fan_out = 0;
        if (const auto* c = std::get_if<Conv2dSpec>(&net.layers()[i])) {
            fan_in = static_cast<double>(c->in_channels) * c->kernel_h * c->kernel_w;
            fan_out = static_cast<double>(c->out_channels) * c->kernel_h * c->kernel_w;
        } else if (const auto* d = std::get_if<DenseSpec>(&net.layers()[i])) {
            fan_in = d->in_features;
            fan_out = d->out_features;
        } else {
            continue;
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        auto& p = net.params()[i];
        for (auto& w : p.weights.data) w = static_cast<T>(rng.uniform(-limit, limit));
        for (auto& b : p.bias.data) b = T{0};
    }
}

/// Per-layer inputs recorded by forward() for use by backward().
template <typename T>
struct ForwardCache {
    std::size_t batch = 0;
    std::vector<std::vector<T>> layer_inputs;

    bool empty() const { return layer_inputs.empty(); }
    void clear() {
        batch = 0;
        layer_inputs.clear();
    }
};

namespace detail {

template <typename T>
void conv_forward(const Conv2dSpec& c, const FeatureShape& in_s, const FeatureShape& out_s, const LayerParams<T>& p,
                  const T* in, T* out) {
    const T* w = p.weights.ptr();
    const T* b = p.bias.ptr();
    const int ic_n = c.in_channels;
    for (int oy = 0; oy < out_s.height; ++oy)
        for (int ox = 0; ox < out_s.width; ++ox) {
            T* o = out + (static_cast<std::size_t>(oy) * out_s.width + ox) * out_s.channels;
            for (int oc = 0; oc < c.out_channels; ++oc) {
                T acc = b[oc];
                for (int ky = 0; ky < c.kernel_h; ++ky) {
                    const int iy = oy * c.stride + ky - c.padding;
                    if (iy < 0 || iy >= in_s.height) continue;
                    for (int kx = 0; kx < c.kernel_w; ++kx) {
                        const int ix = ox * c.stride + kx - c.padding;
                        if (ix < 0 || ix >= in_s.width) continue;
                        const T* ip = in + (static_cast<std::size_t>(iy) * in_s.width + ix) * ic_n;
                        const T* wp = w + ((static_cast<std::size_t>(oc) * c.kernel_h + ky) * c.kernel_w + kx) * ic_n;
                        for (int ic = 0; ic < ic_n; ++ic) acc += wp[ic] * ip[ic];
                    }
                }
                o[oc] = acc;
            }
        }
}

template <typename T>
void conv_backward(const Conv2dSpec& c, const FeatureShape& in_s, const FeatureShape& out_s, const LayerParams<T>& p,
                   const T* in, const T* grad_out, LayerParams<T>& grad, T* grad_in) {
    const T* w = p.weights.ptr();
    T* dw = grad.weights.ptr();
    T* db = grad.bias.ptr();
    const int ic_n = c.in_channels;
    for (int oy = 0; oy < out_s.height; ++oy)
        for (int ox = 0; ox < out_s.width; ++ox) {
            const T* g = grad_out + (static_cast<std::size_t>(oy) * out_s.width + ox) * out_s.channels;
            for (int oc = 0; oc < c.out_channels; ++oc) {
                const T go = g[oc];
                if (go == T{0}) continue;
                db[oc] += go;
                for (int ky = 0; ky < c.kernel_h; ++ky) {
                    const int iy = oy * c.stride + ky - c.padding;
                    if (iy < 0 || iy >= in_s.height) continue;
                    for (int kx = 0; kx < c.kernel_w; ++kx) {
                        const int ix = ox * c.stride + kx - c.padding;
                        if (ix < 0 || ix >= in_s.width) continue;
                        const std::size_t ioff = (static_cast<std::size_t>(iy) * in_s.width + ix) * ic_n;
                        const std::size_t woff = ((static_cast<std::size_t>(oc) * c.kernel_h + ky) * c.kernel_w + kx) * ic_n;
                        for (int ic = 0; ic < ic_n; ++ic) {
                            dw[woff + ic] += go * in[ioff + ic];
                            if (grad_in) grad_in[ioff + ic] += go * w[woff + ic];
                        }
                    }
                }
            }
        }
}

template <typename T>
void dense_forward(const DenseSpec& d, const LayerParams<T>& p, const T* in, T* out) {
    const T* w = p.weights.ptr();
    for (int o = 0; o < d.out_features; ++o) {
        T acc = p.bias.data[static_cast<std::size_t>(o)];
        const T* row = w + static_cast<std::size_t>(o) * d.in_features;
        for (int i = 0; i < d.in_features; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

template <typename T>
void dense_backward(const DenseSpec& d, const LayerParams<T>& p, const T* in, const T* grad_out, LayerParams<T>& grad,
                    T* grad_in) {
    const T* w = p.weights.ptr();
    T* dw = grad.weights.ptr();
    for (int o = 0; o < d.out_features; ++o) {
        const T go = grad_out[o];
        grad.bias.data[static_cast<std::size_t>(o)] += go;
        if (go == T{0}) continue;
        const std::size_t off = static_cast<std::size_t>(o) * d.in_features;
        for (int i = 0; i < d.in_features; ++i) {
            dw[off + i] += go * in[i];
            if (grad_in) grad_in[i] += go * w[off + i];
        }
    }
}

template <typename T>
void activation_forward(Activation a, std::size_t n, const T* in, T* out) {
    switch (a) {
    case Activation::relu:
        for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
        break;
    case Activation::tanh:
        for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
        break;
    }
}

template <typename T>
void activation_backward(Activation a, std::size_t n, const T* in, const T* grad_out, T* grad_in) {
    switch (a) {
    case Activation::relu:
        for (std::size_t i = 0; i < n; ++i) grad_in[i] += in[i] > T{0} ? grad_out[i] : T{0};
        break;
    case Activation::tanh:
        for (std::size_t i = 0; i < n; ++i) {
            const T t = std::tanh(in[i]);
            grad_in[i] += grad_out[i] * (T{1} - t * t);
        }
        break;
    }
}

} // namespace detail

/// Logits [B x K] for a batch [B x H x W x C]. When `cache` is given, the
/// per-layer inputs are stored for backward(). The network is not mutated,
/// so concurrent calls with distinct caches are safe.
template <typename T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& batch, ForwardCache<T>* cache = nullptr) {
    const auto& in_s = net.input_shape();
    if (batch.shape.size() != 4 || batch.shape[0] < 1 || batch.shape[1] != static_cast<std::size_t>(in_s.height) ||
        batch.shape[2] != static_cast<std::size_t>(in_s.width) || batch.shape[3] != static_cast<std::size_t>(in_s.channels))
        throw ShapeError("forward: batch shape " + shape_string(batch.shape) + " does not match network input " +
                         std::to_string(in_s.height) + "x" + std::to_string(in_s.width) + "x" +
                         std::to_string(in_s.channels));
    const std::size_t bsz = batch.shape[0];
    const auto& shapes = net.shapes();
    std::vector<T> current(batch.data);
    if (cache) {
        cache->batch = bsz;
        cache->layer_inputs.assign(net.layers().size(), {});
    }
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto& is = shapes[l];
        const auto& os = shapes[l + 1];
        std::vector<T> next(bsz * os.size());
        const auto& layer = net.layers()[l];
        for (std::size_t b = 0; b < bsz; ++b) {
            const T* in = current.data() + b * is.size();
            T* out = next.data() + b * os.size();
            if (const auto* c = std::get_if<Conv2dSpec>(&layer))
                detail::conv_forward(*c, is, os, net.params()[l], in, out);
            else if (const auto* d = std::get_if<DenseSpec>(&layer))
                detail::dense_forward(*d, net.params()[l], in, out);
            else
                detail::activation_forward(std::get<ActivationSpec>(layer).kind, is.size(), in, out);
        }
        if (cache)
            cache->layer_inputs[l] = std::move(current);
        current = std::move(next);
    }
    return Tensor<T>({bsz, net.output_width()}, std::move(current));
}

/// Parameter gradients of sum_b <grad_logits[b], logits[b]>, i.e. backprop of
/// the upstream gradient through the cached forward pass.
template <typename T>
Gradients<T> backward(const Network<T>& net, const ForwardCache<T>& cache, const Tensor<T>& grad_logits) {
    if (cache.empty() || cache.layer_inputs.size() != net.layers().size())
        throw InvalidArgument("backward called without a matching forward cache");
    const std::size_t bsz = cache.batch;
    if (grad_logits.shape != Shape{bsz, net.output_width()})
        throw ShapeError("backward: grad_logits shape " + shape_string(grad_logits.shape) + " does not match batch");
    const auto& shapes = net.shapes();
    Gradients<T> grads = net.zero_gradients();
    std::vector<T> upstream(grad_logits.data);
    for (std::size_t li = net.layers().size(); li-- > 0;) {
        const auto& is = shapes[li];
        const auto& os = shapes[li + 1];
        const auto& layer = net.layers()[li];
        const auto& inputs = cache.layer_inputs[li];
        const bool need_input_grad = li > 0;
        std::vector<T> down(need_input_grad ? bsz * is.size() : 0);
        for (std::size_t b = 0; b < bsz; ++b) {
            const T* in = inputs.data() + b * is.size();
            const T* g = upstream.data() + b * os.size();
            T* gi = need_input_grad ? down.data() + b * is.size() : nullptr;
            if (const auto* c = std::get_if<Conv2dSpec>(&layer))
                detail::conv_backward(*c, is, os, net.params()[li], in, g, grads[li], gi);
            else if (const auto* d = std::get_if<DenseSpec>(&layer))
                detail::dense_backward(*d, net.params()[li], in, g, grads[li], gi);
            else if (gi)
                detail::activation_backward(std::get<ActivationSpec>(layer).kind, is.size(), in, g, gi);
        }
        upstream = std::move(down);
    }
    return grads;
}

} // namespace fontauth::nn
