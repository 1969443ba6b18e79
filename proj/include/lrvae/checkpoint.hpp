// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "lrvae/nn.hpp"

namespace lrvae::cli {

// "LRV1" container: 4 magic bytes, UTF-8 `key=value` header lines terminated
// by a blank line (format version, architecture, likelihood, epoch, payload
// byte length), then all parameters as little-endian f64 in declared layer
// order (weights row-major then bias; encoder trunk, mu head, logvar head,
// decoder). save -> load -> save is byte-identical.
inline constexpr char kCheckpointMagic[4] = {'L', 'R', 'V', '1'};
inline constexpr int kCheckpointVersion = 1;

struct LoadedCheckpoint {
    nn::Model model;
    int epoch = 0;
};

void checkpoint_save(const nn::Model& model, int epoch, const std::string& path);
LoadedCheckpoint checkpoint_load(const std::string& path);

}  // namespace lrvae::cli
