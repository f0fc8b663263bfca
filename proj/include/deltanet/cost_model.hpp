// SPDX-License-Identifier: Apache-2.0
//
// Closed-form operation/memory cost predictions for delta cells and the
// reconciliation of those predictions against an instrumented OpLedger.
// Dense per-timestep MACs for a cell are gates * n_out * (n_in + n_out);
// a kernel at occupancy o costs o times its dense count, and the backward
// pass runs two kernels (input gradient + weight gradient) per stream.

#pragma once

#include <cstdint>
#include <string>

#include "deltanet/cells.hpp"
#include "deltanet/ledger.hpp"

namespace deltanet {

struct CellShape {
    std::size_t n_in = 0;
    std::size_t n_out = 0;
    std::size_t gates = 1;

    static CellShape of(CellKind kind, std::size_t n_in, std::size_t n_out) {
        return {n_in, n_out, gate_count(kind)};
    }

    // dense MACs per timestep, one MxV pass over both streams
    std::uint64_t dense_macs_per_step() const {
        return static_cast<std::uint64_t>(gates) * n_out * (n_in + n_out);
    }
    std::uint64_t dense_macs_x() const { return static_cast<std::uint64_t>(gates) * n_out * n_in; }
    std::uint64_t dense_macs_h() const { return static_cast<std::uint64_t>(gates) * n_out * n_out; }
};

struct CostPrediction {
    double dense_macs = 0;        // per timestep
    double sparse_macs = 0;       // per timestep, occupancy-scaled
    double speedup = 0;           // dense / sparse
    double memory_words_sparse = 0;  // per timestep weight traffic + vector traffic
};

CostPrediction predict_fp_cost(std::size_t n_in, std::size_t n_out, std::size_t gates,
                               double occupancy);

// Backward runs the input-gradient and weight-gradient kernels, twice the
// forward MxV count at the same occupancy.
CostPrediction predict_bp_cost(std::size_t n_in, std::size_t n_out, std::size_t gates,
                               double occupancy);

struct ReconcileReport {
    std::uint64_t measured_fp = 0;
    std::uint64_t measured_bp_input_grad = 0;
    std::uint64_t measured_bp_weight_grad = 0;
    std::uint64_t expected_fp = 0;
    std::uint64_t expected_bp_input_grad = 0;
    std::uint64_t expected_bp_weight_grad = 0;
    bool exact_match = false;
    std::string detail;
};

// Checks that the ledger's counted MACs equal the per-step occupancy trace
// times the dense per-step cost, exactly. `input_grads_counted` states
// whether the x-stream input-gradient kernel ran during backward.
ReconcileReport reconcile(const OpLedger& ledger, const CellShape& shape,
                          bool input_grads_counted = true);

}  // namespace deltanet
