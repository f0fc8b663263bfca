// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "deltanet/backward.hpp"
#include "deltanet/cost_model.hpp"
#include "deltanet/verify.hpp"

using namespace deltanet;

TEST_CASE("dense per-timestep MAC predictions for the 16-128 cells") {
    auto lstm_fp = predict_fp_cost(16, 128, 4, 1.0);
    CHECK(lstm_fp.dense_macs == 73728.0);
    CHECK(lstm_fp.sparse_macs == 73728.0);
    CHECK(lstm_fp.speedup == 1.0);

    auto lstm_bp = predict_bp_cost(16, 128, 4, 1.0);
    CHECK(lstm_bp.dense_macs == 147456.0);

    auto gru_fp = predict_fp_cost(16, 128, 3, 1.0);
    CHECK(gru_fp.dense_macs == 55296.0);
    auto gru_bp = predict_bp_cost(16, 128, 3, 1.0);
    CHECK(gru_bp.dense_macs == 110592.0);
}

TEST_CASE("occupancy-scaled predictions against the reported operating points") {
    // sparsity 83.4% -> occupancy 0.166
    auto fp = predict_fp_cost(16, 128, 4, 1.0 - 0.834);
    CHECK(std::abs(fp.sparse_macs - 12200.0) / 12200.0 <= 0.01);
    auto bp = predict_bp_cost(16, 128, 4, 1.0 - 0.834);
    CHECK(std::abs(bp.sparse_macs - 24500.0) / 24500.0 <= 0.01);

    // sparsity 92.9%
    auto bp2 = predict_bp_cost(16, 128, 4, 1.0 - 0.929);
    CHECK(std::abs(bp2.sparse_macs - 10500.0) / 10500.0 <= 0.01);

    // zero occupancy costs nothing
    CHECK(predict_fp_cost(16, 128, 4, 0.0).sparse_macs == 0.0);
    CHECK_THROWS_AS((void)predict_fp_cost(16, 128, 4, 1.5), std::invalid_argument);
}

TEST_CASE("memory cost per timestep for a square kernel") {
    // 0.2 * 128^2 + 3 * 128 = 3660.8 words
    auto p = predict_bp_cost(0, 128, 1, 0.2);
    CHECK(p.memory_words_sparse == doctest::Approx(0.2 * 128.0 * 128.0 + 3.0 * 128.0));
}

TEST_CASE("backward dense MACs are twice forward for every cell kind") {
    for (std::size_t gates : {1ull, 3ull, 4ull}) {
        auto fp = predict_fp_cost(16, 128, gates, 1.0);
        auto bp = predict_bp_cost(16, 128, gates, 1.0);
        CHECK(bp.dense_macs == 2.0 * fp.dense_macs);
    }
}

TEST_CASE("reconcile on a run with uniform half occupancy") {
    // square-wave input on half the coordinates: those flip through the
    // threshold at every step while the rest stay silent, giving an exact
    // occupancy of one half
    const std::size_t n = 8, steps = 8;
    Rng rng(4);
    auto p = init_cell_params<double>(CellKind::Rnn, n, n, rng);
    // keep hidden deltas quiet so only the x stream counts
    for (auto& w : p.wx.data) w *= 1e-4;
    for (auto& w : p.wh.data) w *= 1e-4;
    for (auto& b : p.bias.data) b = 0.0;

    std::vector<Vector> xs;
    for (std::size_t t = 0; t < steps; ++t) {
        Vector x(n);
        for (std::size_t i = 0; i < n / 2; ++i) x[i] = (t % 2 == 0) ? 1.0 : 0.0;
        xs.push_back(std::move(x));
    }

    OpLedger ledger;
    auto run = delta_forward(p, xs, 0.5, 0.5, &ledger);
    (void)run;
    CHECK(ledger.mean_occupancy_x() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(ledger.macs_fp == steps * n * (n / 2));  // h stream never activates

    // measured == occupancy-scaled dense, exactly
    auto report = reconcile(ledger, CellShape::of(CellKind::Rnn, n, n), true);
    CHECK(report.exact_match);
}

TEST_CASE("reconcile over random-threshold instrumented runs") {
    Rng rng(5);
    for (double theta : {0.0, 0.03, 0.12, 0.4}) {
        auto p = init_cell_params<double>(CellKind::Gru, 6, 9, rng);
        auto xs = make_test_stream(11, 6, rng);
        auto lg = make_loss_grads(11, 9, rng);
        OpLedger ledger;
        auto run = delta_forward(p, xs, theta, theta, &ledger);
        BackwardOptions opts;
        opts.want_input_grads = true;
        (void)delta_backward(p, run.tape, lg, &ledger, opts);
        auto report = reconcile(ledger, CellShape::of(CellKind::Gru, 6, 9), true);
        INFO(report.detail);
        CHECK(report.exact_match);

        // theta 0 run counts the full dense cost from the second step on
        if (theta == 0.0) {
            const CellShape shape = CellShape::of(CellKind::Gru, 6, 9);
            const std::uint64_t dense_fp =
                11 * shape.dense_macs_per_step() - shape.dense_macs_h();  // empty h delta at t=1
            CHECK(ledger.macs_fp == dense_fp);
        }
    }
}

TEST_CASE("forward and backward occupancy traces agree elementwise") {
    Rng rng(6);
    auto p = init_cell_params<double>(CellKind::Lstm, 5, 6, rng);
    auto xs = make_test_stream(10, 5, rng);
    auto lg = make_loss_grads(10, 6, rng);
    OpLedger ledger;
    auto run = delta_forward(p, xs, 0.1, 0.1, &ledger);
    (void)delta_backward(p, run.tape, lg, &ledger);
    REQUIRE(ledger.fp_trace.size() == ledger.bp_trace.size());
    CHECK(ledger.fp_occupancy_x() == ledger.bp_occupancy_x());
    CHECK(ledger.fp_occupancy_h() == ledger.bp_occupancy_h());
}
