// SPDX-License-Identifier: Apache-2.0
//
// Two dense gradient paths used to check the sparse backward:
//
//  * dense_masked_autodiff — reverse-mode differentiation of the delta graph
//    with the forward masks entering as constant 0/1 multipliers and no
//    skipping anywhere. Runs the same delta forward, then a dense backward
//    built from full transposed MxV and dense outer products. This is the
//    ground truth the sparse path must match.
//
//  * dense_reference_grads — textbook BPTT through the dense reference cells,
//    used for the zero-threshold degeneracy checks.

#pragma once

#include <vector>

#include "deltanet/backward.hpp"
#include "deltanet/cells.hpp"

namespace deltanet {

namespace detail {

template <class T>
Vec<T> sigmoid_block(const Vec<T>& mem, std::size_t blk, std::size_t n) {
    Vec<T> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid_scalar(mem[blk * n + i]);
    return out;
}

}  // namespace detail

// Dense masked BPTT over an existing tape. Derivatives of the activations are
// recomputed from the pre-activation snapshots.
template <class T>
CellGrads<T> dense_masked_backward(const CellParams<T>& p, const TrainingTape<T>& tape,
                                   const std::vector<Vec<T>>& loss_grads,
                                   bool want_input_grads = false) {
    const std::size_t steps = tape.length();
    require(steps >= 1, "dense_masked_backward: empty tape");
    require(loss_grads.size() == steps, "dense_masked_backward: tape/loss length mismatch");
    const std::size_t n = p.n_hidden;
    const std::size_t gr = p.gate_rows();

    CellGrads<T> grads = detail::make_grads(p);
    if (want_input_grads) grads.dx.resize(steps);

    Vec<T> dmem_next(p.kind == CellKind::Gru ? 4 * n : gr);
    Vec<T> dcell(n);   // lstm
    Vec<T> dh_next(n); // gru
    Vec<T> dh_hat(n);
    Vec<T> ddh(n);
    Vec<T> dx_hat(p.n_in);

    for (std::size_t t = steps; t-- > 0;) {
        const TapeRecord<T>& rec = tape.steps[t];
        const Vec<T> mvec_h = mask_to_vec<T>(rec.mask_h);
        const Vec<T> mvec_x = mask_to_vec<T>(rec.mask_x);

        Vec<T> dh = loss_grads[t];
        if (t + 1 < steps) {
            const TapeRecord<T>& next = tape.steps[t + 1];
            const Vec<T> mnext = mask_to_vec<T>(next.mask_h);
            for (std::size_t i = 0; i < n; ++i) dh[i] += (dh_hat[i] + ddh[i]) * mnext[i];
            if (p.kind == CellKind::Gru) {
                const Vec<T> u_next = detail::sigmoid_block(next.mem, 1, n);
                for (std::size_t i = 0; i < n; ++i) dh[i] += dh_next[i] * (T(1) - u_next[i]);
            }
        }

        // gate adjoints
        Vec<T> dmem(dmem_next.size());
        Vec<T> dmem_x_side;  // gru: [r | u | cx]; other kinds alias dmem
        switch (p.kind) {
            case CellKind::Rnn: {
                for (std::size_t i = 0; i < n; ++i) {
                    const T th = std::tanh(rec.mem[i]);
                    dmem[i] = dh[i] * (T(1) - th * th) + dmem_next[i];
                }
                break;
            }
            case CellKind::Lstm: {
                Vec<T> dc(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const T tc = std::tanh(rec.c[i]);
                    const T go = sigmoid_scalar(rec.mem[3 * n + i]);
                    dc[i] = dh[i] * go * (T(1) - tc * tc) + dcell[i];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const T gi = sigmoid_scalar(rec.mem[i]);
                    const T gf = sigmoid_scalar(rec.mem[n + i]);
                    const T gg = std::tanh(rec.mem[2 * n + i]);
                    const T go = sigmoid_scalar(rec.mem[3 * n + i]);
                    const T tc = std::tanh(rec.c[i]);
                    dmem[i] = dc[i] * gg * gi * (T(1) - gi) + dmem_next[i];
                    dmem[n + i] = dc[i] * rec.c_prev[i] * gf * (T(1) - gf) + dmem_next[n + i];
                    dmem[2 * n + i] = dc[i] * gi * (T(1) - gg * gg) + dmem_next[2 * n + i];
                    dmem[3 * n + i] = dh[i] * tc * go * (T(1) - go) + dmem_next[3 * n + i];
                    dcell[i] = dc[i] * gf;
                }
                break;
            }
            case CellKind::Gru: {
                // dmem blocks [r | u | cx | ch]
                for (std::size_t i = 0; i < n; ++i) {
                    const T r = sigmoid_scalar(rec.mem[i]);
                    const T u = sigmoid_scalar(rec.mem[n + i]);
                    const T cand = std::tanh(rec.mem_c[i]);
                    const T dmc = dh[i] * u * (T(1) - cand * cand);
                    dmem[i] = dmc * rec.mem[3 * n + i] * r * (T(1) - r) + dmem_next[i];
                    dmem[n + i] = dh[i] * (cand - rec.h_prev[i]) * u * (T(1) - u) + dmem_next[n + i];
                    dmem[2 * n + i] = dmc + dmem_next[2 * n + i];
                    dmem[3 * n + i] = dmc * r + dmem_next[3 * n + i];
                }
                break;
            }
        }

        // the h-path / x-path adjoint vectors entering the MxV and outer
        // products (gru uses different memory blocks per side)
        Vec<T> dmem_h_side;
        if (p.kind == CellKind::Gru) {
            dmem_h_side = Vec<T>(3 * n);
            dmem_x_side = Vec<T>(3 * n);
            for (std::size_t i = 0; i < n; ++i) {
                dmem_h_side[i] = dmem[i];
                dmem_h_side[n + i] = dmem[n + i];
                dmem_h_side[2 * n + i] = dmem[3 * n + i];
                dmem_x_side[i] = dmem[i];
                dmem_x_side[n + i] = dmem[n + i];
                dmem_x_side[2 * n + i] = dmem[2 * n + i];
            }
        } else {
            dmem_h_side = dmem;
            dmem_x_side = dmem;
        }

        // dense outer products against the decoded (zero-filled) deltas
        outer_accum(grads.dwx, dmem_x_side, decode(rec.dx));
        outer_accum(grads.dwh, dmem_h_side, decode(rec.dh));

        // delta adjoints: full transposed MxV, then the mask as a multiplier
        Vec<T> ddh_prev = hadamard(matvec_transposed(p.wh, dmem_h_side), mvec_h);
        if (want_input_grads) {
            Vec<T> ddx = hadamard(matvec_transposed(p.wx, dmem_x_side), mvec_x);
            Vec<T> dx_t(p.n_in);
            for (std::size_t i = 0; i < p.n_in; ++i) {
                dx_t[i] = (dx_hat[i] + ddx[i]) * mvec_x[i];
                dx_hat[i] = dx_hat[i] * (T(1) - mvec_x[i]) - ddx[i] * mvec_x[i];
            }
            grads.dx[t] = std::move(dx_t);
        }

        if (t + 1 < steps) {
            const Vec<T> mnext = mask_to_vec<T>(tape.steps[t + 1].mask_h);
            for (std::size_t i = 0; i < n; ++i)
                dh_hat[i] = dh_hat[i] * (T(1) - mnext[i]) - ddh[i] * mnext[i];
        }
        ddh = std::move(ddh_prev);
        dh_next = std::move(dh);
        dmem_next = std::move(dmem);
    }

    if (p.kind == CellKind::Gru) {
        grads.dbias = Vec<T>(3 * n);
        for (std::size_t i = 0; i < 3 * n; ++i) grads.dbias[i] = dmem_next[i];
    } else {
        grads.dbias = dmem_next;
    }
    return grads;
}

// Runs the delta forward (thresholds applied), then the dense masked backward.
template <class T>
CellGrads<T> dense_masked_autodiff(const CellParams<T>& p, const std::vector<Vec<T>>& xs,
                                   T theta_x, T theta_h, const std::vector<Vec<T>>& loss_grads,
                                   bool want_input_grads = false) {
    ForwardRun<T> run = delta_forward(p, xs, theta_x, theta_h);
    return dense_masked_backward(p, run.tape, loss_grads, want_input_grads);
}

// ---------------------------------------------------------------------------
// Textbook BPTT through the dense reference cells.
// ---------------------------------------------------------------------------

template <class T>
CellGrads<T> dense_reference_grads(const CellParams<T>& p, const std::vector<Vec<T>>& xs,
                                   const std::vector<Vec<T>>& loss_grads,
                                   bool want_input_grads = false) {
    const std::size_t steps = xs.size();
    require(steps >= 1, "dense_reference_grads: empty stream");
    require(loss_grads.size() == steps, "dense_reference_grads: stream/loss length mismatch");
    const std::size_t n = p.n_hidden;

    // forward caches
    std::vector<Vec<T>> hs(steps + 1, Vec<T>(n));  // hs[t] = h_t, hs[0] = 0
    std::vector<Vec<T>> cs(steps + 1, Vec<T>(n));
    std::vector<Vec<T>> zx(steps), zh(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        zx[t] = matvec(p.wx, xs[t]);
        zh[t] = matvec(p.wh, hs[t]);
        switch (p.kind) {
            case CellKind::Rnn:
                for (std::size_t i = 0; i < n; ++i)
                    hs[t + 1][i] = std::tanh(zx[t][i] + zh[t][i] + p.bias[i]);
                break;
            case CellKind::Lstm:
                for (std::size_t i = 0; i < n; ++i) {
                    const T gi = sigmoid_scalar(zx[t][i] + zh[t][i] + p.bias[i]);
                    const T gf = sigmoid_scalar(zx[t][n + i] + zh[t][n + i] + p.bias[n + i]);
                    const T gg = std::tanh(zx[t][2 * n + i] + zh[t][2 * n + i] + p.bias[2 * n + i]);
                    const T go = sigmoid_scalar(zx[t][3 * n + i] + zh[t][3 * n + i] + p.bias[3 * n + i]);
                    cs[t + 1][i] = gf * cs[t][i] + gi * gg;
                    hs[t + 1][i] = go * std::tanh(cs[t + 1][i]);
                }
                break;
            case CellKind::Gru:
                for (std::size_t i = 0; i < n; ++i) {
                    const T r = sigmoid_scalar(zx[t][i] + zh[t][i] + p.bias[i]);
                    const T u = sigmoid_scalar(zx[t][n + i] + zh[t][n + i] + p.bias[n + i]);
                    const T cand = std::tanh(zx[t][2 * n + i] + p.bias[2 * n + i] + r * zh[t][2 * n + i]);
                    hs[t + 1][i] = (T(1) - u) * hs[t][i] + u * cand;
                }
                break;
        }
    }

    CellGrads<T> grads = detail::make_grads(p);
    if (want_input_grads) grads.dx.resize(steps);

    Vec<T> dz_next(p.gate_rows());  // gate pre-activation adjoints of step t+1
    Vec<T> dcell(n);
    Vec<T> dh_direct(n);  // gru: dC/dh_{t+1} . (1 - u_{t+1})

    for (std::size_t t = steps; t-- > 0;) {
        Vec<T> dh = loss_grads[t];
        if (t + 1 < steps) {
            const Vec<T> rec_h = matvec_transposed(p.wh, dz_next);
            for (std::size_t i = 0; i < n; ++i) dh[i] += rec_h[i];
            if (p.kind == CellKind::Gru)
                for (std::size_t i = 0; i < n; ++i) dh[i] += dh_direct[i];
        }

        Vec<T> dz(p.gate_rows());
        switch (p.kind) {
            case CellKind::Rnn: {
                for (std::size_t i = 0; i < n; ++i) {
                    const T th = hs[t + 1][i];
                    dz[i] = dh[i] * (T(1) - th * th);
                }
                break;
            }
            case CellKind::Lstm: {
                for (std::size_t i = 0; i < n; ++i) {
                    const T gi = sigmoid_scalar(zx[t][i] + zh[t][i] + p.bias[i]);
                    const T gf = sigmoid_scalar(zx[t][n + i] + zh[t][n + i] + p.bias[n + i]);
                    const T gg = std::tanh(zx[t][2 * n + i] + zh[t][2 * n + i] + p.bias[2 * n + i]);
                    const T go = sigmoid_scalar(zx[t][3 * n + i] + zh[t][3 * n + i] + p.bias[3 * n + i]);
                    const T tc = std::tanh(cs[t + 1][i]);
                    const T dc = dh[i] * go * (T(1) - tc * tc) + dcell[i];
                    dz[i] = dc * gg * gi * (T(1) - gi);
                    dz[n + i] = dc * cs[t][i] * gf * (T(1) - gf);
                    dz[2 * n + i] = dc * gi * (T(1) - gg * gg);
                    dz[3 * n + i] = dh[i] * tc * go * (T(1) - go);
                    dcell[i] = dc * gf;
                }
                break;
            }
            case CellKind::Gru: {
                for (std::size_t i = 0; i < n; ++i) {
                    const T r = sigmoid_scalar(zx[t][i] + zh[t][i] + p.bias[i]);
                    const T u = sigmoid_scalar(zx[t][n + i] + zh[t][n + i] + p.bias[n + i]);
                    const T cand = std::tanh(zx[t][2 * n + i] + p.bias[2 * n + i] + r * zh[t][2 * n + i]);
                    const T da_c = dh[i] * u * (T(1) - cand * cand);
                    dz[i] = da_c * zh[t][2 * n + i] * r * (T(1) - r);
                    dz[n + i] = dh[i] * (cand - hs[t][i]) * u * (T(1) - u);
                    dz[2 * n + i] = da_c;  // bias/x side of the candidate
                    dh_direct[i] = dh[i] * (T(1) - u);
                }
                break;
            }
        }

        // the gru candidate feeds the hidden weight through r . a_c
        Vec<T> dz_h = dz;
        if (p.kind == CellKind::Gru) {
            for (std::size_t i = 0; i < n; ++i) {
                const T r = sigmoid_scalar(zx[t][i] + zh[t][i] + p.bias[i]);
                dz_h[2 * n + i] = dz[2 * n + i] * r;
            }
        }

        outer_accum(grads.dwx, dz, xs[t]);
        outer_accum(grads.dwh, dz_h, hs[t]);
        for (std::size_t i = 0; i < dz.size(); ++i) grads.dbias[i] += dz[i];
        if (want_input_grads) grads.dx[t] = matvec_transposed(p.wx, dz);

        dz_next = std::move(dz_h);
    }
    return grads;
}

}  // namespace deltanet
