// SPDX-License-Identifier: Apache-2.0
//
// Seed-deterministic synthetic sequence tasks at desk scale. The smoothness
// factor is the AR(1) pole of the filler/noise process, so it directly
// controls how often coordinates move past a delta threshold.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deltanet/tensor.hpp"

namespace deltanet {

enum class TaskKind { TemporalPattern, DelayedRecall };

const char* task_kind_name(TaskKind k);
TaskKind task_kind_from_name(const std::string& name);

struct SyntheticTaskSpec {
    TaskKind kind = TaskKind::DelayedRecall;
    std::size_t num_classes = 2;
    std::size_t seq_len = 20;
    std::size_t input_dim = 8;
    double noise = 0.1;
    double smoothness = 0.9;
    std::size_t train_per_class = 100;
    std::size_t eval_per_class = 25;
};

void validate(const SyntheticTaskSpec& spec);

struct Sample {
    std::vector<Vector> xs;
    std::size_t label = 0;
};

struct Dataset {
    std::vector<Sample> train;
    std::vector<Sample> eval;
};

Dataset generate_dataset(const SyntheticTaskSpec& spec, std::uint64_t seed);

}  // namespace deltanet
