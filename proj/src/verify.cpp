// SPDX-License-Identifier: Apache-2.0

#include "deltanet/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "deltanet/oracle.hpp"

namespace deltanet {

namespace {

double block_rel(double dist, double scale_a, double scale_b) {
    const double scale = std::max(scale_a, scale_b);
    if (scale == 0.0) return dist == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return dist / scale;
}

struct CaseData {
    CellParams<double> params;
    std::vector<Vector> xs;
    std::vector<Vector> loss_grads;
};

CaseData build_case(const VerifyCase& c) {
    Rng rng(c.seed);
    CaseData d;
    d.params = init_cell_params<double>(c.kind, c.n_in, c.n_hidden, rng);
    d.xs = make_test_stream(c.steps, c.n_in, rng);
    d.loss_grads = make_loss_grads(c.steps, c.n_hidden, rng);
    return d;
}

}  // namespace

std::vector<Vector> make_test_stream(std::size_t steps, std::size_t dim, Rng& rng) {
    std::vector<Vector> xs;
    Vector x(dim);
    for (std::size_t t = 0; t < steps; ++t) {
        for (auto& v : x.data) v = 0.9 * v + rng.uniform(-0.35, 0.35);
        xs.push_back(x);
    }
    return xs;
}

std::vector<Vector> make_loss_grads(std::size_t steps, std::size_t dim, Rng& rng) {
    std::vector<Vector> gs;
    for (std::size_t t = 0; t < steps; ++t) {
        Vector g(dim);
        for (auto& v : g.data) v = rng.uniform(-1.0, 1.0);
        gs.push_back(std::move(g));
    }
    return gs;
}

double grad_rel_discrepancy(const CellGrads<double>& a, const CellGrads<double>& b) {
    double worst = block_rel(linf_dist(a.dwx, b.dwx), linf_norm(a.dwx), linf_norm(b.dwx));
    worst = std::max(worst, block_rel(linf_dist(a.dwh, b.dwh), linf_norm(a.dwh), linf_norm(b.dwh)));
    worst = std::max(worst,
                     block_rel(linf_dist(a.dbias, b.dbias), linf_norm(a.dbias), linf_norm(b.dbias)));
    if (a.dx.size() == b.dx.size()) {
        for (std::size_t t = 0; t < a.dx.size(); ++t)
            worst = std::max(worst, block_rel(linf_dist(a.dx[t], b.dx[t]), linf_norm(a.dx[t]),
                                              linf_norm(b.dx[t])));
    } else if (!a.dx.empty() || !b.dx.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    return worst;
}

EquivalenceResult run_equivalence_case(const VerifyCase& c) {
    CaseData d = build_case(c);

    OpLedger ledger;
    ForwardRun<double> run = delta_forward(d.params, d.xs, c.theta, c.theta, &ledger);

    BackwardOptions opts;
    opts.want_input_grads = true;
    CellGrads<double> sparse = delta_backward(d.params, run.tape, d.loss_grads, &ledger, opts);
    CellGrads<double> dense = dense_masked_backward(d.params, run.tape, d.loss_grads, true);

    EquivalenceResult r;
    r.config = c;
    r.max_rel_discrepancy = grad_rel_discrepancy(sparse, dense);
    r.sparsity_identity =
        ledger.fp_trace.size() == ledger.bp_trace.size() &&
        std::equal(ledger.fp_trace.begin(), ledger.fp_trace.end(), ledger.bp_trace.begin(),
                   [](const OpLedger::StepOcc& a, const OpLedger::StepOcc& b) {
                       return a.nnz_x == b.nnz_x && a.len_x == b.len_x && a.nnz_h == b.nnz_h &&
                              a.len_h == b.len_h;
                   });
    r.mean_occupancy_x = ledger.mean_occupancy_x();
    r.mean_occupancy_h = ledger.mean_occupancy_h();
    return r;
}

std::vector<VerifyCase> default_equivalence_grid(std::size_t min_cases) {
    const CellKind kinds[] = {CellKind::Rnn, CellKind::Lstm, CellKind::Gru};
    const double thetas[] = {0.0, 0.05, 0.1, 0.3};
    std::vector<VerifyCase> grid;
    Rng rng(20240405);
    std::uint64_t seed = 1;
    while (grid.size() < min_cases) {
        for (CellKind kind : kinds) {
            for (double theta : thetas) {
                VerifyCase c;
                c.kind = kind;
                c.theta = theta;
                c.n_in = 1 + rng.index(32);
                c.n_hidden = 1 + rng.index(32);
                c.steps = 1 + rng.index(16);
                c.seed = seed++;
                grid.push_back(c);
            }
        }
    }
    return grid;
}

FdCheckResult run_fd_check(const VerifyCase& c, double eps, double tol) {
    CaseData d = build_case(c);
    Rng rng(c.seed ^ 0x9e3779b97f4a7c15ull);

    // quadratic tracking loss L = 1/2 sum_t ||h_t - y_t||^2
    std::vector<Vector> targets;
    for (std::size_t t = 0; t < c.steps; ++t) {
        Vector y(c.n_hidden);
        for (auto& v : y.data) v = rng.uniform(-0.8, 0.8);
        targets.push_back(std::move(y));
    }

    auto mask_pattern = [](const TrainingTape<double>& tape) {
        std::vector<Mask> ms;
        ms.reserve(tape.length() * 2);
        for (const auto& rec : tape.steps) {
            ms.push_back(rec.mask_x);
            ms.push_back(rec.mask_h);
        }
        return ms;
    };

    auto loss_of = [&](const CellParams<double>& p, std::vector<Mask>* pattern) {
        ForwardRun<double> run = delta_forward(p, d.xs, c.theta, c.theta);
        if (pattern) *pattern = mask_pattern(run.tape);
        double loss = 0;
        for (std::size_t t = 0; t < c.steps; ++t) {
            const Vector diff = sub(run.h[t], targets[t]);
            loss += 0.5 * dot(diff, diff);
        }
        return loss;
    };

    std::vector<Mask> base_pattern;
    ForwardRun<double> base = delta_forward(d.params, d.xs, c.theta, c.theta);
    base_pattern = mask_pattern(base.tape);

    std::vector<Vector> loss_grads;
    for (std::size_t t = 0; t < c.steps; ++t) loss_grads.push_back(sub(base.h[t], targets[t]));
    CellGrads<double> analytic = delta_backward(d.params, base.tape, loss_grads);

    FdCheckResult res;
    res.config = c;

    auto check_coord = [&](double* coord, double analytic_grad) {
        ++res.tested;
        const double saved = *coord;
        std::vector<Mask> pat_hi, pat_lo;
        *coord = saved + eps;
        const double f_hi = loss_of(d.params, &pat_hi);
        *coord = saved - eps;
        const double f_lo = loss_of(d.params, &pat_lo);
        *coord = saved;
        if (pat_hi != base_pattern || pat_lo != base_pattern) {
            ++res.skipped;
            return;
        }
        const double fd = (f_hi - f_lo) / (2 * eps);
        const double err = std::abs(analytic_grad - fd);
        const double rel = err / std::max({std::abs(analytic_grad), std::abs(fd), 1e-30});
        if (err <= tol * std::max(std::abs(analytic_grad), std::abs(fd)) + 1e-8) {
            ++res.passed;
            if (err > 1e-8) res.max_rel_err = std::max(res.max_rel_err, rel);
        } else {
            res.max_rel_err = std::max(res.max_rel_err, rel);
        }
    };

    for (std::size_t i = 0; i < d.params.wx.data.size(); ++i)
        check_coord(&d.params.wx.data[i], analytic.dwx.data[i]);
    for (std::size_t i = 0; i < d.params.wh.data.size(); ++i)
        check_coord(&d.params.wh.data[i], analytic.dwh.data[i]);
    for (std::size_t i = 0; i < d.params.bias.data.size(); ++i)
        check_coord(&d.params.bias.data[i], analytic.dbias.data[i]);

    return res;
}

}  // namespace deltanet
