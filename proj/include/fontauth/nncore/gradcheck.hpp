#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "fontauth/common/rng.hpp"
#include "fontauth/nncore/loss.hpp"
#include "fontauth/nncore/network.hpp"

namespace fontauth::nn {

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t checked = 0;
    /// Coordinates where the +-step probes land on different sides of a ReLU
    /// kink; the central difference is meaningless there.
    std::size_t skipped = 0;
};

namespace detail {

inline std::vector<bool> relu_pattern(const Network<double>& net, const ForwardCache<double>& cache) {
    std::vector<bool> bits;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const auto* a = std::get_if<ActivationSpec>(&net.layers()[l]);
        if (!a || a->kind != Activation::relu) continue;
        for (double v : cache.layer_inputs[l]) bits.push_back(v > 0.0);
    }
    return bits;
}

} // namespace detail

/// Compares backward() with central differences of the mean softmax
/// cross-entropy for every parameter. Relative error is
/// |analytic - numeric| / max(|analytic|, |numeric|, denom_floor).
inline GradCheckReport gradient_check(Network<double> net, const Tensor<double>& batch, std::span<const int> labels,
                                      double step = 1e-4, double denom_floor = 1e-5) {
    ForwardCache<double> cache;
    const auto logits = forward(net, batch, &cache);
    const auto analytic = backward(net, cache, softmax_xent(logits, labels).grad_logits);

    auto probe = [&](std::vector<bool>& pattern) {
        ForwardCache<double> c;
        const double loss = softmax_xent(forward(net, batch, &c), labels).loss;
        pattern = detail::relu_pattern(net, c);
        return loss;
    };

    GradCheckReport report;
    for (std::size_t l = 0; l < net.params().size(); ++l) {
        for (int which = 0; which < 2; ++which) {
            auto& values = which == 0 ? net.params()[l].weights.data : net.params()[l].bias.data;
            const auto& grads = which == 0 ? analytic[l].weights.data : analytic[l].bias.data;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double saved = values[i];
                std::vector<bool> up_pattern, down_pattern;
                values[i] = saved + step;
                const double up = probe(up_pattern);
                values[i] = saved - step;
                const double down = probe(down_pattern);
                values[i] = saved;
                if (up_pattern != down_pattern) {
                    ++report.skipped;
                    continue;
                }
                const double numeric = (up - down) / (2.0 * step);
                const double abs_err = std::abs(grads[i] - numeric);
                const double denom = std::max({std::abs(grads[i]), std::abs(numeric), denom_floor});
                report.max_abs_error = std::max(report.max_abs_error, abs_err);
                report.max_rel_error = std::max(report.max_rel_error, abs_err / denom);
                ++report.checked;
            }
        }
    }
    return report;
}

struct GradCheckCase {
    Network<double> network;
    Tensor<double> batch;
    std::vector<int> labels;
};

/// Random conv/activation/dense stack with at most max_params parameters,
/// initialized with non-zero biases, plus a random batch and labels.
inline GradCheckCase random_gradcheck_case(std::uint64_t seed, std::size_t max_params = 1000) {
    Rng rng(seed);
    while (true) {
        FeatureShape in{3 + static_cast<int>(rng.below(4)), 3 + static_cast<int>(rng.below(4)),
                        1 + static_cast<int>(rng.below(2))};
        std::vector<LayerSpec> layers;
        FeatureShape cur = in;
        const int convs = 1 + static_cast<int>(rng.below(2));
        bool ok = true;
        for (int i = 0; i < convs && ok; ++i) {
            Conv2dSpec c;
            c.in_channels = cur.channels;
            c.out_channels = 1 + static_cast<int>(rng.below(3));
            c.kernel_h = 1 + static_cast<int>(rng.below(3));
            c.kernel_w = 1 + static_cast<int>(rng.below(3));
            c.stride = 1 + static_cast<int>(rng.below(2));
            c.padding = static_cast<int>(rng.below(2));
            try {
                cur = infer_output(c, cur);
            } catch (const ShapeError&) {
                ok = false;
                break;
            }
            layers.push_back(c);
            layers.push_back(ActivationSpec{rng.bernoulli(0.5) ? Activation::relu : Activation::tanh});
        }
        if (!ok) continue;
        const int classes = 2 + static_cast<int>(rng.below(4));
        layers.push_back(DenseSpec{static_cast<int>(cur.size()), classes});
        if (rng.bernoulli(0.5)) {
            layers.push_back(ActivationSpec{Activation::tanh});
            layers.push_back(DenseSpec{classes, classes});
        }
        Network<double> net(in, layers);
        if (net.param_count() > max_params) continue;
        initialize(net, rng.below(1u << 30));
        for (auto& p : net.params())
            for (auto& b : p.bias.data) b = rng.uniform(-0.1, 0.1);

        const std::size_t bsz = 1 + rng.below(3);
        Tensor<double> batch({bsz, static_cast<std::size_t>(in.height), static_cast<std::size_t>(in.width),
                              static_cast<std::size_t>(in.channels)});
        for (auto& v : batch.data) v = rng.uniform(-1.0, 1.0);
        std::vector<int> labels;
        for (std::size_t b = 0; b < bsz; ++b) labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(classes))));
        return {std::move(net), std::move(batch), std::move(labels)};
    }
}

} // namespace fontauth::nn
