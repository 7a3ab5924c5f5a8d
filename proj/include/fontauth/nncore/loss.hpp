#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fontauth/nncore/tensor.hpp"

namespace fontauth::nn {

template <typename T>
struct LossResult {
    /// Mean cross-entropy over the batch.
    double loss = 0.0;
    /// Gradient of the mean loss w.r.t. the logits.
    Tensor<T> grad_logits;
};

/// Row-wise softmax, computed in double with max subtraction.
template <typename T>
std::vector<double> softmax_row(std::span<const T> logits) {
    const double peak = static_cast<double>(*std::max_element(logits.begin(), logits.end()));
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(static_cast<double>(logits[k]) - peak);
        z += p[k];
    }
    for (auto& v : p) v /= z;
    return p;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (logits.shape.size() != 2) throw ShapeError("softmax expects a [B x K] tensor");
    Tensor<T> out(logits.shape);
    for (std::size_t b = 0; b < logits.shape[0]; ++b) {
        const auto p = softmax_row(logits.row(b));
        std::copy(p.begin(), p.end(), out.row(b).begin());
    }
    return out;
}

template <typename T>
LossResult<T> softmax_xent(const Tensor<T>& logits, std::span<const int> labels) {
    if (logits.shape.size() != 2 || logits.shape[0] != labels.size() || logits.shape[0] == 0)
        throw ShapeError("softmax_xent: logits " + shape_string(logits.shape) + " vs " +
                         std::to_string(labels.size()) + " labels");
    const std::size_t bsz = logits.shape[0];
    const std::size_t k = logits.shape[1];
    LossResult<T> result{0.0, Tensor<T>(logits.shape)};
    for (std::size_t b = 0; b < bsz; ++b) {
        const int label = labels[b];
        if (label < 0 || static_cast<std::size_t>(label) >= k)
            throw InvalidArgument("label " + std::to_string(label) + " outside [0," + std::to_string(k) + ")");
        const auto row = logits.row(b);
        const double peak = static_cast<double>(*std::max_element(row.begin(), row.end()));
        double z = 0.0;
        for (T v : row) z += std::exp(static_cast<double>(v) - peak);
        const double log_z = std::log(z) + peak;
        result.loss += log_z - static_cast<double>(row[static_cast<std::size_t>(label)]);
        auto g = result.grad_logits.row(b);
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::exp(static_cast<double>(row[j]) - log_z);
            g[j] = static_cast<T>((p - (j == static_cast<std::size_t>(label) ? 1.0 : 0.0)) / static_cast<double>(bsz));
        }
    }
    result.loss /= static_cast<double>(bsz);
    return result;
}

} // namespace fontauth::nn
