#include "fontauth/nncore/model_io.hpp"

#include <limits>

#include "fontauth/common/errors.hpp"

namespace fontauth::nn {

namespace {

enum class LayerTag : std::uint8_t { conv2d = 0, dense = 1, activation = 2 };

std::uint16_t narrow16(int v, const char* what) {
    if (v < 0 || v > std::numeric_limits<std::uint16_t>::max())
        throw InvalidArgument(std::string(what) + " does not fit the model format");
    return static_cast<std::uint16_t>(v);
}

void write_payload(ByteWriter& w, const Network<float>& net) {
    const auto& in = net.input_shape();
    w.u16(narrow16(in.height, "input height"));
    w.u16(narrow16(in.width, "input width"));
    w.u16(narrow16(in.channels, "input channels"));
    w.u16(narrow16(static_cast<int>(net.layers().size()), "layer count"));
    for (const auto& layer : net.layers()) {
        if (const auto* c = std::get_if<Conv2dSpec>(&layer)) {
            w.u8(static_cast<std::uint8_t>(LayerTag::conv2d));
            for (int v : {c->in_channels, c->out_channels, c->kernel_h, c->kernel_w, c->stride, c->padding})
                w.u16(narrow16(v, "conv2d parameter"));
        } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
            w.u8(static_cast<std::uint8_t>(LayerTag::dense));
            w.u32(static_cast<std::uint32_t>(d->in_features));
            w.u32(static_cast<std::uint32_t>(d->out_features));
        } else {
            w.u8(static_cast<std::uint8_t>(LayerTag::activation));
            w.u8(static_cast<std::uint8_t>(std::get<ActivationSpec>(layer).kind));
        }
    }
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        if (std::holds_alternative<ActivationSpec>(net.layers()[l])) continue;
        for (const auto* t : {&net.params()[l].weights, &net.params()[l].bias}) {
            w.u32(static_cast<std::uint32_t>(t->size()));
            for (float v : t->data) w.f32(v);
        }
    }
}

Network<float> read_payload(ByteReader& r) {
    FeatureShape in;
    in.height = r.u16();
    in.width = r.u16();
    in.channels = r.u16();
    const int count = r.u16();
    std::vector<LayerSpec> layers;
    for (int i = 0; i < count; ++i) {
        switch (static_cast<LayerTag>(r.u8())) {
        case LayerTag::conv2d: {
            Conv2dSpec c;
            c.in_channels = r.u16();
            c.out_channels = r.u16();
            c.kernel_h = r.u16();
            c.kernel_w = r.u16();
            c.stride = r.u16();
            c.padding = r.u16();
            layers.emplace_back(c);
            break;
        }
        case LayerTag::dense: {
            DenseSpec d;
            d.in_features = static_cast<int>(r.u32());
            d.out_features = static_cast<int>(r.u32());
            layers.emplace_back(d);
            break;
        }
        case LayerTag::activation: {
            const auto kind = r.u8();
            if (kind > static_cast<std::uint8_t>(Activation::tanh)) throw FormatError("unknown activation tag");
            layers.emplace_back(ActivationSpec{static_cast<Activation>(kind)});
            break;
        }
        default: throw FormatError("unknown layer tag in model file");
        }
    }
    Network<float> net;
    try {
        net = Network<float>(in, std::move(layers));
    } catch (const ShapeError& e) {
        throw FormatError(std::string("inconsistent layer table: ") + e.what());
    }
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        if (std::holds_alternative<ActivationSpec>(net.layers()[l])) continue;
        for (auto* t : {&net.params()[l].weights, &net.params()[l].bias}) {
            if (r.u32() != t->size()) throw FormatError("parameter blob size does not match layer table");
            for (auto& v : t->data) v = r.f32();
        }
    }
    return net;
}

} // namespace

Bytes serialize_model(const Network<float>& net, std::span<const std::uint8_t> extension) {
    ByteWriter w;
    w.magic("FFNN");
    w.u16(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(extension.size()));
    w.raw(extension);
    write_payload(w, net);
    auto bytes = w.take();
    append_crc(bytes);
    return bytes;
}

ModelFile deserialize_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(open_container(bytes, "FFNN", kModelFormatVersion));
    ModelFile file;
    const auto ext_len = r.u32();
    const auto ext = r.raw(ext_len);
    file.extension.assign(ext.begin(), ext.end());
    file.network = read_payload(r);
    if (r.remaining() != 0) throw FormatError("trailing bytes after model parameters");
    return file;
}

std::string content_hash(const Network<float>& net) {
    ByteWriter w;
    write_payload(w, net);
    return sha256_hex(w.bytes());
}

void save_network(const Network<float>& net, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(net));
}

Network<float> load_network(const std::filesystem::path& path) {
    return deserialize_model(read_file(path)).network;
}

} // namespace fontauth::nn
