// SPDX-License-Identifier: Apache-2.0
//
// Gradient verification harness: sparse-vs-dense-masked equivalence cases and
// the finite-difference check with a mask-stability guard. The threshold rule
// is non-differentiable exactly at the threshold, so gradients are exact only
// within a fixed mask pattern; coordinates whose perturbation flips any mask
// bit are skipped and reported rather than compared.

#pragma once

#include <cstdint>
#include <vector>

#include "deltanet/backward.hpp"

namespace deltanet {

struct VerifyCase {
    CellKind kind = CellKind::Rnn;
    std::size_t n_in = 4;
    std::size_t n_hidden = 4;
    std::size_t steps = 8;
    double theta = 0.1;
    std::uint64_t seed = 1;
};

struct EquivalenceResult {
    VerifyCase config;
    double max_rel_discrepancy = 0;  // sparse vs dense-masked, per-block relative
    bool sparsity_identity = false;  // per-step BP occupancy == FP occupancy
    double mean_occupancy_x = 0;
    double mean_occupancy_h = 0;
};

// Per-block relative discrepancy: ||a-b||_inf / max(||a||_inf, ||b||_inf),
// maximized over dwx, dwh, dbias and the input-gradient streams.
double grad_rel_discrepancy(const CellGrads<double>& a, const CellGrads<double>& b);

// Smooth drifting stream with per-step increments small enough that the
// usual thresholds produce mixed masks.
std::vector<Vector> make_test_stream(std::size_t steps, std::size_t dim, Rng& rng);

std::vector<Vector> make_loss_grads(std::size_t steps, std::size_t dim, Rng& rng);

EquivalenceResult run_equivalence_case(const VerifyCase& c);

// cells x thetas x repeats grid, at least `min_cases` entries
std::vector<VerifyCase> default_equivalence_grid(std::size_t min_cases = 200);

struct FdCheckResult {
    VerifyCase config;
    std::size_t tested = 0;
    std::size_t passed = 0;
    std::size_t skipped = 0;  // mask-flip coordinates, never compared
    double max_rel_err = 0;   // over surviving coordinates
};

// Central differences of a quadratic tracking loss against the analytic
// sparse-BPTT weight gradients, coordinate by coordinate over wx, wh, bias.
FdCheckResult run_fd_check(const VerifyCase& c, double eps = 1e-6, double tol = 1e-5);

}  // namespace deltanet
