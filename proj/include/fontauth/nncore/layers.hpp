#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

namespace fontauth::nn {

struct Conv2dSpec {
    int in_channels = 1;
    int out_channels = 1;
    int kernel_h = 3;
    int kernel_w = 3;
    int stride = 1;
    int padding = 0;

    std::size_t weight_count() const {
        return static_cast<std::size_t>(out_channels) * kernel_h * kernel_w * in_channels;
    }
    std::size_t bias_count() const { return static_cast<std::size_t>(out_channels); }

    friend bool operator==(const Conv2dSpec&, const Conv2dSpec&) = default;
};

/// Fully connected layer; flattens its (H, W, C) input in row-major order.
struct DenseSpec {
    int in_features = 1;
    int out_features = 1;

    std::size_t weight_count() const { return static_cast<std::size_t>(in_features) * out_features; }
    std::size_t bias_count() const { return static_cast<std::size_t>(out_features); }

    friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

enum class Activation { relu, tanh };

struct ActivationSpec {
    Activation kind = Activation::relu;

    friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

using LayerSpec = std::variant<Conv2dSpec, DenseSpec, ActivationSpec>;

/// Activation geometry between layers, height x width x channels.
struct FeatureShape {
    int height = 0;
    int width = 0;
    int channels = 0;

    std::size_t size() const { return static_cast<std::size_t>(height) * width * channels; }
    friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Output geometry of `layer` for `input`; throws ShapeError when they are
/// incompatible or the spec is invalid.
FeatureShape infer_output(const LayerSpec& layer, const FeatureShape& input);

/// Weights plus biases the layer owns.
std::size_t param_count(const LayerSpec& layer);

} // namespace fontauth::nn
