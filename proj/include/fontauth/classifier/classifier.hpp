#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fontauth/common/binary_io.hpp"
#include "fontauth/nncore/network.hpp"
#include "fontauth/nncore/sgd.hpp"
#include "fontauth/synthgen/dataset.hpp"

namespace fontauth::clf {

/// c_type: joint (character, font) head with 2M classes.
/// cprime_type: font-only head with 2 classes.
/// plain: character-only head with M classes (the "standard" recognizer the
/// field verdict combines with a c_type model).
enum class ClassifierKind : std::uint8_t { c_type = 0, cprime_type = 1, plain = 2 };

std::string_view to_string(ClassifierKind kind);
/// Accepts "c", "cprime", "plain" and the long names.
ClassifierKind parse_kind(std::string_view text);

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::c_type;
    int alphabet_size = synth::kDigitAlphabetSize;

    int output_width() const;
    friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

/// Class layout: c_type -> char_index + M * forged (genuine block, then
/// forged block); cprime_type -> forged; plain -> char_index.
int encode_label(int char_index, bool forged, const ClassifierSpec& spec);

struct Prediction {
    std::vector<double> probabilities;
    int class_index = 0;
    /// From the argmax class (always false for plain models).
    bool forged = false;
    /// Absent for cprime_type.
    std::optional<int> char_index;
    double confidence = 0.0;
    /// Font-marginal probability: sum over the forged block for c_type,
    /// probabilities[1] for cprime_type, 0 for plain. Reported only; it
    /// never overrides the argmax decision.
    double forged_probability = 0.0;
};

/// Argmax with ties broken toward the lowest class index.
Prediction decode_output(std::span<const double> probabilities, const ClassifierSpec& spec);

/// conv 3x3 1->8 s1 p1, ReLU, conv 3x3 8->8 s2 p1, ReLU, conv 3x3 8->12 s2 p1,
/// ReLU, dense 240 -> output width. 15x19 input shrinks to 5x4x12 before the
/// dense layer.
nn::Network<float> build_network(const ClassifierSpec& spec);

struct EpochLog {
    int epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;
    double val_font_accuracy = 0.0;
    double val_char_accuracy = 0.0;
};

void to_json(nlohmann::json& j, const EpochLog& e);
void from_json(const nlohmann::json& j, EpochLog& e);

struct TrainingProvenance {
    std::string train_dataset_hash;
    std::string val_dataset_hash;
    nn::TrainConfig config;
    int best_epoch = -1;
    double best_val_font_accuracy = 0.0;
    double best_val_char_accuracy = 0.0;
    std::string tool_version;
};

void to_json(nlohmann::json& j, const TrainingProvenance& p);
void from_json(const nlohmann::json& j, TrainingProvenance& p);

/// Immutable once trained; predict() is safe for concurrent callers.
struct TrainedModel {
    ClassifierSpec spec;
    nn::Network<float> network;
    TrainingProvenance provenance;

    std::string content_hash() const;
};

struct TrainResult {
    TrainedModel model;
    std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Momentum SGD over shuffled mini-batches. Returns the parameter snapshot
/// with the best validation metric (font-bit accuracy for c_type and
/// cprime_type, character accuracy for plain; ties keep the earlier epoch).
/// Throws DataError on dataset/codec mismatch and DivergenceError on a
/// non-finite loss.
TrainResult train(const ClassifierSpec& spec, const synth::Dataset& train_set, const synth::Dataset& val_set,
                  const nn::TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Validation accuracies of a model on a labeled dataset.
struct Accuracy {
    double font = 0.0;
    double character = 0.0;
};
Accuracy measure_accuracy(const TrainedModel& model, const synth::Dataset& ds);

Prediction predict(const TrainedModel& model, const synth::GlyphImage& image);
std::vector<Prediction> predict_batch(const TrainedModel& model, std::span<const synth::GlyphImage> images);

/// FFNN container whose extension block holds the codec header
/// (u8 kind, u16 M) and the training provenance as JSON.
fontauth::Bytes serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

} // namespace fontauth::clf
