// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "deltanet/cells.hpp"

using namespace deltanet;

namespace {

std::vector<Vector> random_stream(std::size_t timesteps, std::size_t dim, Rng& rng,
                                  double scale = 1.0) {
    std::vector<Vector> xs;
    for (std::size_t t = 0; t < timesteps; ++t) {
        Vector x(dim);
        for (auto& v : x.data) v = rng.uniform(-scale, scale);
        xs.push_back(std::move(x));
    }
    return xs;
}

}  // namespace

TEST_CASE("zero threshold matches the dense reference cell") {
    Rng rng(11);
    for (CellKind kind : {CellKind::Rnn, CellKind::Lstm, CellKind::Gru}) {
        for (int rep = 0; rep < 6; ++rep) {
            const std::size_t n_in = 1 + rng.index(32);
            const std::size_t n_h = 1 + rng.index(32);
            const std::size_t steps = 1 + rng.index(16);
            auto params = init_cell_params<double>(kind, n_in, n_h, rng);
            auto xs = random_stream(steps, n_in, rng);

            auto run = delta_forward(params, xs, 0.0, 0.0);
            auto ref = dense_reference_forward(params, xs);
            REQUIRE(run.h.size() == ref.size());
            for (std::size_t t = 0; t < steps; ++t)
                CHECK(linf_dist(run.h[t], ref[t]) <= 1e-12);
        }
    }
}

TEST_CASE("all-zero stream with zero biases stays silent") {
    Rng rng(3);
    for (CellKind kind : {CellKind::Rnn, CellKind::Lstm, CellKind::Gru}) {
        auto params = init_cell_params<double>(kind, 4, 6, rng);
        for (auto& b : params.bias.data) b = 0.0;
        std::vector<Vector> xs(5, Vector(4));

        OpLedger ledger;
        auto run = delta_forward(params, xs, 0.05, 0.05, &ledger);
        for (const Vector& h : run.h) CHECK(linf_norm(h) == 0.0);
        for (const auto& s : ledger.fp_trace) {
            CHECK(s.nnz_x == 0);
            CHECK(s.nnz_h == 0);
        }
        CHECK(ledger.macs_fp == 0);
    }
}

// Every gate memory must satisfy M_t = M_0 + sum of the per-step dense
// products of the decoded tape deltas.
TEST_CASE("memory telescoping recomputed densely from the tape") {
    Rng rng(21);
    for (CellKind kind : {CellKind::Rnn, CellKind::Lstm, CellKind::Gru}) {
        auto params = init_cell_params<double>(kind, 4, 4, rng);
        auto xs = random_stream(3, 4, rng);
        auto run = delta_forward(params, xs, 0.05, 0.05);

        Vector accum(mem_block_count(kind) * params.n_hidden);
        for (std::size_t i = 0; i < params.bias.size(); ++i) accum[i] = params.bias[i];

        for (std::size_t t = 0; t < run.tape.length(); ++t) {
            const auto& rec = run.tape.steps[t];
            const Vector cx = matvec(params.wx, decode(rec.dx));
            const Vector ch = matvec(params.wh, decode(rec.dh));
            if (kind == CellKind::Gru) {
                const std::size_t n = params.n_hidden;
                for (std::size_t i = 0; i < 3 * n; ++i) accum[i] += cx[i];
                for (std::size_t i = 0; i < 2 * n; ++i) accum[i] += ch[i];
                for (std::size_t i = 0; i < n; ++i) accum[3 * n + i] += ch[2 * n + i];
            } else {
                for (std::size_t i = 0; i < cx.size(); ++i) accum[i] += cx[i] + ch[i];
            }
            CHECK(linf_dist(accum, rec.mem) <= 1e-12);
        }
    }
}

TEST_CASE("lstm with saturated forget gate accumulates its cell state") {
    Rng rng(31);
    auto params = init_cell_params<double>(CellKind::Lstm, 3, 5, rng);
    const std::size_t n = params.n_hidden;
    for (std::size_t i = 0; i < n; ++i) params.bias[n + i] += 10.0;  // forget-gate block

    auto xs = random_stream(6, 3, rng, 0.3);
    auto run = delta_forward(params, xs, 0.0, 0.0);
    auto ref = dense_reference_forward(params, xs);
    for (std::size_t t = 0; t < xs.size(); ++t) CHECK(linf_dist(run.h[t], ref[t]) <= 1e-12);

    for (const auto& rec : run.tape.steps) {
        for (std::size_t i = 0; i < n; ++i) {
            const double leaky = rec.c[i] - (rec.c_prev[i] + rec.gate_i[i] * rec.gate_g[i]);
            CHECK(std::abs(leaky) <= 2e-4);  // 1 - sigmoid(~10) worth of leakage
        }
    }
}

TEST_CASE("gru with update gate forced to one returns the candidate") {
    Rng rng(41);
    auto params = init_cell_params<double>(CellKind::Gru, 3, 5, rng);
    const std::size_t n = params.n_hidden;
    for (std::size_t i = 0; i < n; ++i) params.bias[n + i] += 45.0;  // update-gate block

    auto xs = random_stream(5, 3, rng, 0.5);
    auto run = delta_forward(params, xs, 0.05, 0.05);
    for (const auto& rec : run.tape.steps) CHECK(rec.h == rec.cand);
}

TEST_CASE("per-timestep dense MAC counts at full occupancy") {
    Rng rng(51);

    // 16-input, 128-hidden LSTM: 73,728 forward MACs per fully-occupied step
    {
        auto params = init_cell_params<double>(CellKind::Lstm, 16, 128, rng);
        auto xs = random_stream(2, 16, rng);
        OpLedger ledger;
        auto run = delta_forward(params, xs, 0.0, 0.0, &ledger);
        (void)run;
        REQUIRE(ledger.fp_trace.size() == 2);
        CHECK(ledger.fp_trace[1].nnz_x == 16);
        CHECK(ledger.fp_trace[1].nnz_h == 128);
        const std::uint64_t step1 = 4ull * 128 * 16;  // no hidden delta at t=1
        CHECK(ledger.macs_fp - step1 == 73728);
    }

    // same-size dense GRU step: 55,296 MACs
    {
        auto params = init_cell_params<double>(CellKind::Gru, 16, 128, rng);
        auto xs = random_stream(2, 16, rng);
        OpLedger ledger;
        auto run = delta_forward(params, xs, 0.0, 0.0, &ledger);
        (void)run;
        REQUIRE(ledger.fp_trace[1].nnz_h == 128);
        const std::uint64_t step1 = 3ull * 128 * 16;
        CHECK(ledger.macs_fp - step1 == 55296);
    }
}

TEST_CASE("forward error paths") {
    Rng rng(61);
    auto params = init_cell_params<double>(CellKind::Rnn, 2, 3, rng);
    auto state = init_delta_state(params);
    TrainingTape<double> tape;
    Vector wrong(5);
    CHECK_THROWS_AS(delta_forward_step(params, state, wrong, 0.1, 0.1, tape),
                    std::invalid_argument);

    // overflow the pre-activation memory
    params.wx(0, 0) = 1e308;
    params.wx(0, 1) = 1e308;
    state = init_delta_state(params);
    TrainingTape<double> tape2;
    Vector big{1.0, 1.0};
    CHECK_THROWS_AS(delta_forward_step(params, state, big, 0.0, 0.0, tape2), std::runtime_error);
}
