#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fontauth/common/errors.hpp"
#include "fontauth/common/rng.hpp"
#include "fontauth/nncore/gradcheck.hpp"
#include "fontauth/nncore/loss.hpp"
#include "fontauth/nncore/model_io.hpp"
#include "fontauth/nncore/network.hpp"
#include "fontauth/nncore/sgd.hpp"

using namespace fontauth;
using namespace fontauth::nn;

namespace {

Tensor<double> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Tensor<double> t(std::move(shape));
    Rng rng(seed);
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Direct convolution straight from the definition, independent of the
// engine's loop order: out[y][x][o] = b[o] + sum w[o][i][j][c] * in[y*s+i-p][x*s+j-p][c].
std::vector<double> conv_oracle(const Conv2dSpec& c, int h, int w, const std::vector<double>& in,
                                const std::vector<double>& wt, const std::vector<double>& bias) {
    const int oh = (h + 2 * c.padding - c.kernel_h) / c.stride + 1;
    const int ow = (w + 2 * c.padding - c.kernel_w) / c.stride + 1;
    std::vector<double> out(static_cast<std::size_t>(oh * ow * c.out_channels));
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int o = 0; o < c.out_channels; ++o) {
                double s = bias[static_cast<std::size_t>(o)];
                for (int i = 0; i < c.kernel_h; ++i)
                    for (int j = 0; j < c.kernel_w; ++j)
                        for (int ch = 0; ch < c.in_channels; ++ch) {
                            const int yy = y * c.stride + i - c.padding;
                            const int xx = x * c.stride + j - c.padding;
                            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                            s += wt[static_cast<std::size_t>(((o * c.kernel_h + i) * c.kernel_w + j) * c.in_channels + ch)] *
                                 in[static_cast<std::size_t>((yy * w + xx) * c.in_channels + ch)];
                        }
                out[static_cast<std::size_t>((y * ow + x) * c.out_channels + o)] = s;
            }
    return out;
}

Network<double> reference_like(std::uint64_t seed) {
    Network<double> net({19, 15, 1}, {Conv2dSpec{1, 8, 3, 3, 1, 1}, ActivationSpec{}, Conv2dSpec{8, 8, 3, 3, 2, 1},
                                      ActivationSpec{}, Conv2dSpec{8, 12, 3, 3, 2, 1}, ActivationSpec{},
                                      DenseSpec{240, 20}});
    initialize(net, seed);
    return net;
}

} // namespace

TEST_CASE("parameter counts") {
    CHECK(param_count(Conv2dSpec{1, 8, 3, 3, 1, 1}) == 80);
    CHECK(param_count(DenseSpec{240, 20}) == 4820);
    CHECK(param_count(ActivationSpec{}) == 0);
    const auto net = reference_like(1);
    CHECK(net.param_count() == 80 + 584 + 876 + 4820);
    CHECK(net.stored_param_count() == net.param_count());
    CHECK(net.output_width() == 20);
}

TEST_CASE("layer shape inference") {
    CHECK(infer_output(Conv2dSpec{1, 8, 3, 3, 1, 1}, {19, 15, 1}) == FeatureShape{19, 15, 8});
    CHECK(infer_output(Conv2dSpec{8, 8, 3, 3, 2, 1}, {19, 15, 8}) == FeatureShape{10, 8, 8});
    CHECK(infer_output(Conv2dSpec{8, 12, 3, 3, 2, 1}, {10, 8, 8}) == FeatureShape{5, 4, 12});
    CHECK_THROWS_AS(infer_output(Conv2dSpec{2, 8, 3, 3, 1, 1}, {19, 15, 1}), ShapeError);
    CHECK_THROWS_AS(infer_output(Conv2dSpec{1, 8, 0, 3, 1, 1}, {19, 15, 1}), ShapeError);
    CHECK_THROWS_AS(infer_output(Conv2dSpec{1, 8, 3, 3, 0, 1}, {19, 15, 1}), ShapeError);
    CHECK_THROWS_AS(infer_output(DenseSpec{100, 2}, {19, 15, 1}), ShapeError);
    CHECK_THROWS_AS(Network<double>({19, 15, 1}, {DenseSpec{10, 2}}), ShapeError);
}

TEST_CASE("zero parameters give zero logits") {
    Network<double> net({19, 15, 1}, {Conv2dSpec{1, 8, 3, 3, 1, 1}, ActivationSpec{}, DenseSpec{19 * 15 * 8, 20}});
    const auto logits = forward(net, random_tensor({3, 19, 15, 1}, 4));
    CHECK(logits.shape == Shape{3, 20});
    for (double v : logits.data) CHECK(v == 0.0);
}

TEST_CASE("1x1 identity kernel passes the input through") {
    Network<double> net({19, 15, 1}, {Conv2dSpec{1, 1, 1, 1, 1, 0}});
    net.params()[0].weights.data = {1.0};
    const auto x = random_tensor({2, 19, 15, 1}, 5);
    CHECK(forward(net, x).data == x.data);
}

TEST_CASE("identical images give identical logit rows") {
    const auto net = reference_like(3);
    auto x = random_tensor({2, 19, 15, 1}, 6, 0.0, 1.0);
    std::copy(x.data.begin(), x.data.begin() + 285, x.data.begin() + 285);
    const auto y = forward(net, x);
    for (std::size_t k = 0; k < 20; ++k) CHECK(y.row(0)[k] == y.row(1)[k]);
}

TEST_CASE("convolution matches the direct definition") {
    for (const auto& c : {Conv2dSpec{2, 3, 3, 3, 1, 1}, Conv2dSpec{2, 3, 3, 2, 2, 0}, Conv2dSpec{1, 2, 2, 3, 2, 1}}) {
        Network<double> net({7, 6, c.in_channels}, {c});
        net.params()[0].weights = random_tensor(net.params()[0].weights.shape, 11);
        net.params()[0].bias = random_tensor(net.params()[0].bias.shape, 12);
        const auto x = random_tensor({1, 7, 6, static_cast<std::size_t>(c.in_channels)}, 13);
        const auto want = conv_oracle(c, 7, 6, x.data, net.params()[0].weights.data, net.params()[0].bias.data);
        const auto got = forward(net, x);
        REQUIRE(got.data.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(got.data[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("dense layer is a matrix-vector product") {
    Network<double> net({1, 1, 3}, {DenseSpec{3, 2}});
    net.params()[0].weights.data = {1, 2, 3, 4, 5, 6};
    net.params()[0].bias.data = {0.5, -0.5};
    const Tensor<double> x({1, 1, 1, 3}, std::vector<double>{1, -1, 2});
    const auto y = forward(net, x);
    CHECK(y.data[0] == doctest::Approx(1 - 2 + 6 + 0.5));
    CHECK(y.data[1] == doctest::Approx(4 - 5 + 12 - 0.5));
}

TEST_CASE("forward rejects mismatched input geometry") {
    const auto net = reference_like(1);
    CHECK_THROWS_AS(forward(net, Tensor<double>({1, 15, 19, 1})), ShapeError);
    CHECK_THROWS_AS(forward(net, Tensor<double>({19, 15, 1})), ShapeError);
}

TEST_CASE("softmax rows sum to one, even for extreme logits") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto logits = random_tensor({4, 20}, seed, -1000.0, 1000.0);
        const auto p = softmax(logits);
        CHECK(p.all_finite());
        for (std::size_t b = 0; b < 4; ++b) {
            double s = 0.0;
            for (double v : p.row(b)) s += v;
            CHECK(std::abs(s - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("cross-entropy reference values") {
    const Tensor<double> uniform({2, 20});
    const std::vector<int> labels{3, 17};
    CHECK(softmax_xent(uniform, labels).loss == doctest::Approx(std::log(20.0)).epsilon(1e-12));
    CHECK(std::log(20.0) == doctest::Approx(2.9957).epsilon(1e-4));

    Tensor<double> margin({1, 20});
    margin.data[5] = 200.0;
    const std::vector<int> five{5};
    CHECK(softmax_xent(margin, five).loss < 1e-12);
    CHECK(softmax_xent(margin, five).loss >= 0.0);
}

TEST_CASE("cross-entropy is shift invariant and its gradient rows sum to zero") {
    const auto logits = random_tensor({3, 7}, 21, -5, 5);
    auto shifted = logits;
    for (std::size_t b = 0; b < 3; ++b)
        for (auto& v : shifted.row(b)) v += 10.0 * static_cast<double>(b + 1);
    const std::vector<int> labels{0, 6, 3};
    const auto a = softmax_xent(logits, labels);
    const auto s = softmax_xent(shifted, labels);
    CHECK(std::abs(a.loss - s.loss) <= 1e-9);
    CHECK(a.loss >= 0.0);
    for (std::size_t b = 0; b < 3; ++b) {
        double sum = 0.0;
        for (double g : a.grad_logits.row(b)) sum += g;
        CHECK(std::abs(sum) <= 1e-9);
    }
}

TEST_CASE("cross-entropy gradient matches central differences") {
    const double h = 1e-4;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto logits = random_tensor({3, 5}, 100 + seed, -3, 3);
        const std::vector<int> labels{static_cast<int>(seed % 5), 2, 4};
        const auto grad = softmax_xent(logits, labels).grad_logits;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            const double saved = logits.data[i];
            logits.data[i] = saved + h;
            const double up = softmax_xent(logits, labels).loss;
            logits.data[i] = saved - h;
            const double down = softmax_xent(logits, labels).loss;
            logits.data[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double denom = std::max({std::abs(numeric), std::abs(grad.data[i]), 1e-5});
            CHECK(std::abs(numeric - grad.data[i]) / denom < 1e-5);
        }
    }
}

TEST_CASE("cross-entropy rejects bad labels") {
    const Tensor<double> logits({2, 4});
    const std::vector<int> bad{0, 4};
    CHECK_THROWS_AS(softmax_xent(logits, bad), InvalidArgument);
    const std::vector<int> short_labels{0};
    CHECK_THROWS_AS(softmax_xent(logits, short_labels), ShapeError);
}

TEST_CASE("backward needs a forward cache") {
    const auto net = reference_like(1);
    ForwardCache<double> empty;
    CHECK_THROWS_AS(backward(net, empty, Tensor<double>({1, 20})), InvalidArgument);
}

TEST_CASE("backward is linear in the upstream gradient") {
    const auto net = reference_like(8);
    const auto x = random_tensor({2, 19, 15, 1}, 9, 0.0, 1.0);
    ForwardCache<double> cache;
    forward(net, x, &cache);

    const auto zero = backward(net, cache, Tensor<double>({2, 20}));
    for (const auto& g : zero) {
        for (double v : g.weights.data) CHECK(v == 0.0);
        for (double v : g.bias.data) CHECK(v == 0.0);
    }

    const auto up = random_tensor({2, 20}, 10);
    auto twice = up;
    for (auto& v : twice.data) v *= 2.0;
    const auto g1 = backward(net, cache, up);
    const auto g2 = backward(net, cache, twice);
    for (std::size_t l = 0; l < g1.size(); ++l) {
        CHECK(g1[l].weights.shape == net.params()[l].weights.shape);
        CHECK(g1[l].bias.shape == net.params()[l].bias.shape);
        for (std::size_t i = 0; i < g1[l].weights.size(); ++i)
            CHECK(g2[l].weights.data[i] == doctest::Approx(2.0 * g1[l].weights.data[i]).epsilon(1e-12));
        for (std::size_t i = 0; i < g1[l].bias.size(); ++i)
            CHECK(g2[l].bias.data[i] == doctest::Approx(2.0 * g1[l].bias.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("gradients match central differences on a small three-layer net") {
    Network<double> net({6, 5, 1}, {Conv2dSpec{1, 4, 3, 3, 1, 1}, ActivationSpec{Activation::tanh},
                                    Conv2dSpec{4, 4, 3, 3, 2, 1}, ActivationSpec{Activation::relu},
                                    DenseSpec{3 * 3 * 4, 3}});
    REQUIRE(net.param_count() <= 500);
    initialize(net, 31);
    for (auto& p : net.params())
        for (auto& b : p.bias.data) b = 0.05;
    const auto x = random_tensor({4, 6, 5, 1}, 32);
    const std::vector<int> labels{0, 1, 2, 1};
    const auto r = gradient_check(net, x, labels, 1e-4);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("gradients match central differences on random networks") {
    std::size_t checked = 0, skipped = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        CAPTURE(seed);
        const auto tc = random_gradcheck_case(seed, 1000);
        CHECK(tc.network.param_count() <= 1000);
        CHECK(tc.batch.shape[0] <= 4);
        const auto r = gradient_check(tc.network, tc.batch, tc.labels, 1e-4);
        CHECK(r.max_rel_error < 1e-4);
        checked += r.checked;
        skipped += r.skipped;
    }
    // Kink crossings are rare; nearly every coordinate is actually compared.
    CHECK(skipped * 100 < checked);
}

TEST_CASE("finite inputs up to 1e3 never produce NaN or Inf") {
    auto net = reference_like(12);
    const auto x = random_tensor({4, 19, 15, 1}, 13, -1000.0, 1000.0);
    ForwardCache<double> cache;
    const auto logits = forward(net, x, &cache);
    CHECK(logits.all_finite());
    const std::vector<int> labels{0, 5, 10, 19};
    const auto loss = softmax_xent(logits, labels);
    CHECK(std::isfinite(loss.loss));
    for (const auto& g : backward(net, cache, loss.grad_logits)) {
        CHECK(g.weights.all_finite());
        CHECK(g.bias.all_finite());
    }
}

TEST_CASE("plain SGD step") {
    Network<double> net({1, 1, 1}, {DenseSpec{1, 1}});
    net.params()[0].weights.data = {1.0};
    auto g = net.zero_gradients();
    g[0].weights.data = {0.5};
    SgdState<double> st;
    sgd_step(net, g, 0.1, 0.0, st);
    CHECK(net.params()[0].weights.data[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(net.params()[0].bias.data[0] == 0.0);

    const auto before = net;
    SgdState<double> st2;
    sgd_step(net, net.zero_gradients(), 0.1, 0.0, st2);
    CHECK(net == before);
}

TEST_CASE("two momentum steps follow the recurrence") {
    Network<double> net({1, 1, 1}, {DenseSpec{1, 1}});
    const double w0 = 0.7, g1 = 0.3, g2 = -0.2, lr = 0.05, mu = 0.9;
    net.params()[0].weights.data = {w0};
    SgdState<double> st;
    auto g = net.zero_gradients();
    g[0].weights.data = {g1};
    sgd_step(net, g, lr, mu, st);
    g[0].weights.data = {g2};
    sgd_step(net, g, lr, mu, st);
    // v1 = g1; w1 = w0 - lr g1; v2 = mu g1 + g2; w2 = w1 - lr v2.
    const double want = w0 - lr * g1 - lr * (mu * g1 + g2);
    CHECK(std::abs(net.params()[0].weights.data[0] - want) <= 1e-12);
}

TEST_CASE("train config validation and decay") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.learning_rate = 0.0;
    CHECK_NOTHROW(c.validate());
    c.learning_rate = -0.1;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = TrainConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = TrainConfig{};
    c.momentum = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c = TrainConfig{};
    CHECK(c.rate_for_epoch(2) == doctest::Approx(c.learning_rate * c.lr_decay * c.lr_decay));
    const nlohmann::json j = c;
    CHECK(j.get<TrainConfig>() == c);
}

TEST_CASE("model files round-trip bit-exactly") {
    auto net = reference_like(40).cast<float>();
    for (auto& p : net.params())
        for (auto& b : p.bias.data) b = 0.125f;
    const auto bytes = serialize_model(net);
    const auto back = deserialize_model(bytes);
    CHECK(back.network == net);
    CHECK(back.extension.empty());
    CHECK(serialize_model(back.network) == bytes);
    CHECK(content_hash(back.network) == content_hash(net));

    const Bytes ext{1, 2, 3};
    const auto with_ext = serialize_model(net, ext);
    CHECK(deserialize_model(with_ext).extension == ext);
    CHECK(content_hash(deserialize_model(with_ext).network) == content_hash(net));

    auto other = net;
    other.params()[0].weights.data[0] += 1.0f;
    CHECK(content_hash(other) != content_hash(net));
}

TEST_CASE("damaged model files are rejected") {
    const auto bytes = serialize_model(reference_like(41).cast<float>());
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x10;
    CHECK_THROWS_AS(deserialize_model(flipped), ChecksumError);
    const Bytes truncated(bytes.begin(), bytes.end() - 10);
    CHECK_THROWS_AS(deserialize_model(truncated), ChecksumError);
    auto magic = bytes;
    magic[1] = 'X';
    CHECK_THROWS_AS(deserialize_model(magic), FormatError);
}
