// SPDX-License-Identifier: Apache-2.0
//
// Training configuration. JSON keys match the field names one to one, and
// the CLI exposes a flag per field under the same name.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "deltanet/cells.hpp"
#include "deltanet/dataset.hpp"

namespace deltanet {

struct TrainConfig {
    std::string cell_kind = "lstm";
    std::vector<std::size_t> layer_sizes{32};
    double theta_x = 0.1;
    double theta_h = 0.1;
    std::size_t epochs = 30;
    std::size_t batch_size = 1;
    double learning_rate = 1e-3;
    std::string optimizer = "adam";
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    double max_grad_norm = 0.0;  // 0 disables clipping
    bool cosine_lr = false;
    bool per_timestep_loss = false;
    std::uint64_t seed = 1;
    std::string precision = "fp64";
    bool dense_oracle_grads = false;  // gradients from the dense masked oracle
    SyntheticTaskSpec dataset;
};

CellKind parse_cell_kind(const std::string& name);

void validate(const TrainConfig& cfg);

nlohmann::json config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

// merge: fields present in `overrides` replace those parsed from `base`
TrainConfig config_from_json_file(const std::string& path);

}  // namespace deltanet
