#include "fontauth/nncore/sgd.hpp"

#include <cmath>

#include "fontauth/common/errors.hpp"

namespace fontauth::nn {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must be in [0,1)");
    if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (epochs < 1) throw InvalidArgument("epoch count must be >= 1");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InvalidArgument("lr_decay must be in (0,1]");
}

double TrainConfig::rate_for_epoch(int epoch) const { return learning_rate * std::pow(lr_decay, epoch); }

void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"learning_rate", c.learning_rate}, {"momentum", c.momentum}, {"batch_size", c.batch_size},
         {"epochs", c.epochs},               {"seed", c.seed},         {"lr_decay", c.lr_decay}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
    const TrainConfig d;
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.momentum = j.value("momentum", d.momentum);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.epochs = j.value("epochs", d.epochs);
    c.seed = j.value("seed", d.seed);
    c.lr_decay = j.value("lr_decay", d.lr_decay);
}

} // namespace fontauth::nn
