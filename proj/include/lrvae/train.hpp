// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "lrvae/config.hpp"
#include "lrvae/data.hpp"
#include "lrvae/nn.hpp"
#include "lrvae/objectives.hpp"

namespace lrvae::cli {

struct EpochStats {
    int epoch = 0;
    objectives::LossBreakdown mean;  // sample-weighted mean over the epoch
    double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(const nn::Model&, const EpochStats&)>;

struct TrainResult {
    nn::Model model;
    std::vector<EpochStats> epochs;
};

// Resolves the configured data source (IDX paths or synthetic spec) and
// applies n_limit.
data::Dataset load_dataset(const RunConfig& cfg);

// Full training loop: seeded batches, total_loss, Adam. Deterministic per
// (config, seed). NaN losses abort with the epoch/batch index in the message.
TrainResult train_model(const RunConfig& cfg, const Tensor& x,
                        const EpochCallback& on_epoch = {});

}  // namespace lrvae::cli
