#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "fontauth/nncore/network.hpp"

namespace fontauth::nn {

struct TrainConfig {
    double learning_rate = 0.05;
    double momentum = 0.9;
    int batch_size = 32;
    int epochs = 20;
    std::uint64_t seed = 1;
    /// Learning rate for epoch e is learning_rate * lr_decay^e.
    double lr_decay = 0.92;

    /// learning_rate >= 0 (0 is allowed and freezes the parameters),
    /// momentum in [0,1), batch_size >= 1, epochs >= 1, lr_decay in (0,1].
    void validate() const;

    double rate_for_epoch(int epoch) const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

template <typename T>
struct SgdState {
    Gradients<T> velocity;
};

/// Momentum SGD: v <- momentum * v + g; w <- w - lr * v. With momentum 0 this
/// is exactly w <- w - lr * g.
template <typename T>
void sgd_step(Network<T>& net, const Gradients<T>& grads, double learning_rate, double momentum, SgdState<T>& state) {
    auto& params = net.params();
    if (grads.size() != params.size()) throw ShapeError("sgd_step: gradient/parameter layer count mismatch");
    if (state.velocity.empty()) state.velocity = net.zero_gradients();
    const T lr = static_cast<T>(learning_rate);
    const T mu = static_cast<T>(momentum);
    auto update = [&](Tensor<T>& w, const Tensor<T>& g, Tensor<T>& v) {
        if (w.shape != g.shape || w.shape != v.shape) throw ShapeError("sgd_step: tensor shape mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) {
            v.data[i] = mu * v.data[i] + g.data[i];
            w.data[i] -= lr * v.data[i];
        }
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        update(params[l].weights, grads[l].weights, state.velocity[l].weights);
        update(params[l].bias, grads[l].bias, state.velocity[l].bias);
    }
}

} // namespace fontauth::nn
