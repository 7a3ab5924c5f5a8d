#include "fontauth/nncore/layers.hpp"

#include "fontauth/common/errors.hpp"

namespace fontauth::nn {

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw InvalidArgument("unknown activation: " + std::string(name));
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

std::string describe(const FeatureShape& s) {
    return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

} // namespace

FeatureShape infer_output(const LayerSpec& layer, const FeatureShape& in) {
    return std::visit(
        overloaded{
            [&](const Conv2dSpec& c) {
                if (c.kernel_h < 1 || c.kernel_w < 1 || c.stride < 1 || c.padding < 0 || c.in_channels < 1 ||
                    c.out_channels < 1)
                    throw ShapeError("invalid conv2d spec");
                if (c.in_channels != in.channels)
                    throw ShapeError("conv2d expects " + std::to_string(c.in_channels) + " channels, input is " +
                                     describe(in));
                const int oh = (in.height + 2 * c.padding - c.kernel_h) / c.stride + 1;
                const int ow = (in.width + 2 * c.padding - c.kernel_w) / c.stride + 1;
                if (in.height + 2 * c.padding < c.kernel_h || in.width + 2 * c.padding < c.kernel_w)
                    throw ShapeError("conv2d kernel larger than padded input " + describe(in));
                return FeatureShape{oh, ow, c.out_channels};
            },
            [&](const DenseSpec& d) {
                if (d.in_features < 1 || d.out_features < 1) throw ShapeError("invalid dense spec");
                if (static_cast<std::size_t>(d.in_features) != in.size())
                    throw ShapeError("dense layer expects " + std::to_string(d.in_features) + " inputs, got " +
                                     describe(in));
                return FeatureShape{1, 1, d.out_features};
            },
            [&](const ActivationSpec&) { return in; },
        },
        layer);
}

std::size_t param_count(const LayerSpec& layer) {
    return std::visit(overloaded{
                          [](const Conv2dSpec& c) { return c.weight_count() + c.bias_count(); },
                          [](const DenseSpec& d) { return d.weight_count() + d.bias_count(); },
                          [](const ActivationSpec&) { return std::size_t{0}; },
                      },
                      layer);
}

} // namespace fontauth::nn
