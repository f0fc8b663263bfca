// SPDX-License-Identifier: Apache-2.0

#include "deltanet/cost_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace deltanet {

namespace {

// Weight traffic o*W plus one read of the delta vector, one read of the mask
// and one write of the result per timestep (3 vector-length words).
double memory_words(double occupancy, double weight_words, std::size_t vec_len) {
    return occupancy * weight_words + 3.0 * static_cast<double>(vec_len);
}

}  // namespace

CostPrediction predict_fp_cost(std::size_t n_in, std::size_t n_out, std::size_t gates,
                               double occupancy) {
    require(occupancy >= 0.0 && occupancy <= 1.0, "predict_fp_cost: occupancy out of range");
    const CellShape shape{n_in, n_out, gates};
    CostPrediction p;
    p.dense_macs = static_cast<double>(shape.dense_macs_per_step());
    p.sparse_macs = occupancy * p.dense_macs;
    p.speedup = p.sparse_macs > 0 ? p.dense_macs / p.sparse_macs
                                  : std::numeric_limits<double>::infinity();
    p.memory_words_sparse = memory_words(occupancy, p.dense_macs, n_in + n_out);
    return p;
}

CostPrediction predict_bp_cost(std::size_t n_in, std::size_t n_out, std::size_t gates,
                               double occupancy) {
    require(occupancy >= 0.0 && occupancy <= 1.0, "predict_bp_cost: occupancy out of range");
    const CellShape shape{n_in, n_out, gates};
    CostPrediction p;
    p.dense_macs = 2.0 * static_cast<double>(shape.dense_macs_per_step());
    p.sparse_macs = occupancy * p.dense_macs;
    p.speedup = p.sparse_macs > 0 ? p.dense_macs / p.sparse_macs
                                  : std::numeric_limits<double>::infinity();
    // memory per kernel: each backward kernel walks the weight array once
    p.memory_words_sparse =
        memory_words(occupancy, static_cast<double>(shape.dense_macs_per_step()), n_in + n_out);
    return p;
}

ReconcileReport reconcile(const OpLedger& ledger, const CellShape& shape,
                          bool input_grads_counted) {
    ReconcileReport r;
    r.measured_fp = ledger.macs_fp;
    r.measured_bp_input_grad = ledger.macs_bp_input_grad;
    r.measured_bp_weight_grad = ledger.macs_bp_weight_grad;

    const std::uint64_t rows = shape.gates * shape.n_out;
    for (const OpLedger::StepOcc& s : ledger.fp_trace)
        r.expected_fp += rows * (static_cast<std::uint64_t>(s.nnz_x) + s.nnz_h);
    for (const OpLedger::StepOcc& s : ledger.bp_trace) {
        r.expected_bp_weight_grad += rows * (static_cast<std::uint64_t>(s.nnz_x) + s.nnz_h);
        r.expected_bp_input_grad += rows * s.nnz_h;
        if (input_grads_counted) r.expected_bp_input_grad += rows * s.nnz_x;
    }

    r.exact_match = r.measured_fp == r.expected_fp &&
                    r.measured_bp_input_grad == r.expected_bp_input_grad &&
                    r.measured_bp_weight_grad == r.expected_bp_weight_grad;
    std::ostringstream os;
    if (r.exact_match) {
        os << "ledger matches occupancy-scaled prediction exactly (fp=" << r.measured_fp
           << " bp_ig=" << r.measured_bp_input_grad << " bp_wg=" << r.measured_bp_weight_grad
           << ")";
    } else {
        os << "kernel count mismatch:"
           << " fp " << r.measured_fp << "/" << r.expected_fp
           << " bp_ig " << r.measured_bp_input_grad << "/" << r.expected_bp_input_grad
           << " bp_wg " << r.measured_bp_weight_grad << "/" << r.expected_bp_weight_grad;
    }
    r.detail = os.str();
    return r;
}

}  // namespace deltanet
