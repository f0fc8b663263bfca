// SPDX-License-Identifier: Apache-2.0
//
// Masked backpropagation-through-time over a training tape. The only matrix
// work is done by the two column-skipping kernels (transposed MxV for the
// delta adjoints, outer-product accumulation for the weight gradients), both
// driven by the masks recorded during the forward pass, so the backward MxV
// occupancy at a timestep equals the forward occupancy by construction.
//
// Adjoint bookkeeping per reversed timestep t (h stream; x analogous):
//   dC/dh_t   = dL_t/dh_t + (dC/dh^_t + dC/dDh_t) . m_{h,t}   (+ GRU direct
//               recurrence term dC/dh_{t+1} . (1 - u_{t+1}))
//   dC/dM_t   = gate-specific elementwise factors + dC/dM_{t+1}
//   dC/dDh_{t-1} = (Wh^T dC/dM_t) . m_{h,t-1}        [sparse kernel]
//   dC/dh^_{t-1} = dC/dh^_t . (1 - m_{h,t}) - dC/dDh_t . m_{h,t}
// The retained-state adjoint is carried densely; only the MxV kernels skip.

#pragma once

#include <vector>

#include "deltanet/cells.hpp"
#include "deltanet/sparse_kernels.hpp"

namespace deltanet {

template <class T>
struct CellGrads {
    Mat<T> dwx;
    Mat<T> dwh;
    Vec<T> dbias;
    std::vector<Vec<T>> dx;  // dC/dx_t per timestep, filled on request

    void scale(T s) {
        for (T& v : dwx.data) v *= s;
        for (T& v : dwh.data) v *= s;
        for (T& v : dbias.data) v *= s;
        for (Vec<T>& v : dx)
            for (T& e : v.data) e *= s;
    }

    void accumulate(const CellGrads<T>& other) {
        for (std::size_t i = 0; i < dwx.data.size(); ++i) dwx.data[i] += other.dwx.data[i];
        for (std::size_t i = 0; i < dwh.data.size(); ++i) dwh.data[i] += other.dwh.data[i];
        for (std::size_t i = 0; i < dbias.data.size(); ++i) dbias.data[i] += other.dbias.data[i];
    }
};

struct BackwardOptions {
    bool want_input_grads = false;
};

namespace detail {

template <class T>
CellGrads<T> make_grads(const CellParams<T>& p) {
    CellGrads<T> g;
    g.dwx = Mat<T>(p.wx.rows, p.wx.cols);
    g.dwh = Mat<T>(p.wh.rows, p.wh.cols);
    g.dbias = Vec<T>(p.bias.size());
    return g;
}

// Shared x-stream adjoint bookkeeping: dC/dx_t = (dC/dx^_t + dC/dDx_t) . m_x
// and the retained-input carry update.
template <class T>
struct InputGradTracker {
    bool active = false;
    Vec<T> dx_hat;  // dC/dx^_t carry

    void init(bool want, std::size_t n_in) {
        active = want;
        if (want) dx_hat = Vec<T>(n_in);
    }

    void step(const CellParams<T>& p, const TapeRecord<T>& rec, const Vec<T>& dmem_x,
              CellGrads<T>& grads, std::size_t t_index, OpLedger* ledger) {
        if (!active) return;
        DeltaVec<T> ddx = sparse_input_grad(p.wx, dmem_x, rec.mask_x, ledger);
        Vec<T> ddx_full = decode(ddx);
        Vec<T> dx_t(p.n_in);
        Vec<T> next_hat(p.n_in);
        for (std::size_t i = 0; i < p.n_in; ++i) {
            if (rec.mask_x.test(i)) {
                dx_t[i] = dx_hat[i] + ddx_full[i];
                next_hat[i] = -ddx_full[i];
            } else {
                next_hat[i] = dx_hat[i];
            }
        }
        grads.dx[t_index] = std::move(dx_t);
        dx_hat = std::move(next_hat);
    }
};

template <class T>
void record_bp_occupancy(OpLedger* ledger, std::size_t t_index, const TapeRecord<T>& rec,
                         std::size_t n_in, std::size_t n_hidden) {
    if (!ledger) return;
    ledger->record_bp_step(t_index, {static_cast<std::uint32_t>(rec.mask_x.popcount()),
                                     static_cast<std::uint32_t>(n_in),
                                     static_cast<std::uint32_t>(rec.mask_h.popcount()),
                                     static_cast<std::uint32_t>(n_hidden)});
}

}  // namespace detail

template <class T>
CellGrads<T> delta_rnn_backward(const CellParams<T>& p, const TrainingTape<T>& tape,
                                const std::vector<Vec<T>>& loss_grads,
                                OpLedger* ledger = nullptr, BackwardOptions opts = {}) {
    const std::size_t steps = tape.length();
    require(steps >= 1, "delta_rnn_backward: empty tape");
    require(loss_grads.size() == steps, "delta_rnn_backward: tape/loss length mismatch");
    const std::size_t n = p.n_hidden;

    CellGrads<T> grads = detail::make_grads(p);
    if (opts.want_input_grads) grads.dx.resize(steps);
    if (ledger) ledger->begin_bp_pass(steps);

    Vec<T> dmem_next(n);  // dC/dM_{t+1}
    Vec<T> dh_hat(n);     // dC/dh^_t
    Vec<T> ddh(n);        // dC/dDh_t
    detail::InputGradTracker<T> xtrack;
    xtrack.init(opts.want_input_grads, p.n_in);

    for (std::size_t t = steps; t-- > 0;) {
        const TapeRecord<T>& rec = tape.steps[t];

        Vec<T> dh = loss_grads[t];
        if (t + 1 < steps) {
            const Mask& m_next = tape.steps[t + 1].mask_h;
            m_next.for_each_set([&](std::size_t i) { dh[i] += dh_hat[i] + ddh[i]; });
        }

        Vec<T> dmem(n);
        for (std::size_t i = 0; i < n; ++i) {
            const T th = rec.h[i];
            dmem[i] = dh[i] * (T(1) - th * th) + dmem_next[i];
        }

        sparse_weight_grad_accum(grads.dwx, dmem, rec.dx, ledger);
        sparse_weight_grad_accum(grads.dwh, dmem, rec.dh, ledger);

        DeltaVec<T> ddh_prev = sparse_input_grad(p.wh, dmem, rec.mask_h, ledger);
        xtrack.step(p, rec, dmem, grads, t, ledger);
        detail::record_bp_occupancy(ledger, t, rec, p.n_in, n);

        if (t + 1 < steps) {
            const Mask& m_next = tape.steps[t + 1].mask_h;
            Vec<T> dh_hat_prev(n);
            for (std::size_t i = 0; i < n; ++i)
                dh_hat_prev[i] = m_next.test(i) ? -ddh[i] : dh_hat[i];
            dh_hat = std::move(dh_hat_prev);
        }
        ddh = decode(ddh_prev);
        dmem_next = std::move(dmem);
    }

    grads.dbias = dmem_next;  // dC/db = dC/dM_0 = dC/dM_1
    return grads;
}

template <class T>
CellGrads<T> delta_lstm_backward(const CellParams<T>& p, const TrainingTape<T>& tape,
                                 const std::vector<Vec<T>>& loss_grads,
                                 OpLedger* ledger = nullptr, BackwardOptions opts = {}) {
    const std::size_t steps = tape.length();
    require(steps >= 1, "delta_lstm_backward: empty tape");
    require(loss_grads.size() == steps, "delta_lstm_backward: tape/loss length mismatch");
    const std::size_t n = p.n_hidden;

    CellGrads<T> grads = detail::make_grads(p);
    if (opts.want_input_grads) grads.dx.resize(steps);
    if (ledger) ledger->begin_bp_pass(steps);

    Vec<T> dmem_next(4 * n);  // dC/dM_{t+1}, gate blocks [i | f | g | o]
    Vec<T> dcell(n);          // dC/dc_{t+1} . f_{t+1}, the direct cell path
    Vec<T> dh_hat(n);
    Vec<T> ddh(n);
    detail::InputGradTracker<T> xtrack;
    xtrack.init(opts.want_input_grads, p.n_in);

    for (std::size_t t = steps; t-- > 0;) {
        const TapeRecord<T>& rec = tape.steps[t];

        Vec<T> dh = loss_grads[t];
        if (t + 1 < steps) {
            const Mask& m_next = tape.steps[t + 1].mask_h;
            m_next.for_each_set([&](std::size_t i) { dh[i] += dh_hat[i] + ddh[i]; });
        }

        Vec<T> dc(n);
        for (std::size_t i = 0; i < n; ++i) {
            const T tc = rec.tanh_c[i];
            dc[i] = dh[i] * rec.gate_o[i] * (T(1) - tc * tc) + dcell[i];
        }

        Vec<T> dmem(4 * n);
        for (std::size_t i = 0; i < n; ++i) {
            const T gi = rec.gate_i[i], gf = rec.gate_f[i], gg = rec.gate_g[i], go = rec.gate_o[i];
            dmem[i] = dc[i] * gg * gi * (T(1) - gi) + dmem_next[i];
            dmem[n + i] = dc[i] * rec.c_prev[i] * gf * (T(1) - gf) + dmem_next[n + i];
            dmem[2 * n + i] = dc[i] * gi * (T(1) - gg * gg) + dmem_next[2 * n + i];
            dmem[3 * n + i] = dh[i] * rec.tanh_c[i] * go * (T(1) - go) + dmem_next[3 * n + i];
        }

        sparse_weight_grad_accum(grads.dwx, dmem, rec.dx, ledger);
        sparse_weight_grad_accum(grads.dwh, dmem, rec.dh, ledger);

        DeltaVec<T> ddh_prev = sparse_input_grad(p.wh, dmem, rec.mask_h, ledger);
        xtrack.step(p, rec, dmem, grads, t, ledger);
        detail::record_bp_occupancy(ledger, t, rec, p.n_in, n);

        if (t + 1 < steps) {
            const Mask& m_next = tape.steps[t + 1].mask_h;
            Vec<T> dh_hat_prev(n);
            for (std::size_t i = 0; i < n; ++i)
                dh_hat_prev[i] = m_next.test(i) ? -ddh[i] : dh_hat[i];
            dh_hat = std::move(dh_hat_prev);
        }
        ddh = decode(ddh_prev);
        for (std::size_t i = 0; i < n; ++i) dcell[i] = dc[i] * rec.gate_f[i];
        dmem_next = std::move(dmem);
    }

    grads.dbias = dmem_next;
    return grads;
}

template <class T>
CellGrads<T> delta_gru_backward(const CellParams<T>& p, const TrainingTape<T>& tape,
                                const std::vector<Vec<T>>& loss_grads,
                                OpLedger* ledger = nullptr, BackwardOptions opts = {}) {
    const std::size_t steps = tape.length();
    require(steps >= 1, "delta_gru_backward: empty tape");
    require(loss_grads.size() == steps, "delta_gru_backward: tape/loss length mismatch");
    const std::size_t n = p.n_hidden;

    CellGrads<T> grads = detail::make_grads(p);
    if (opts.want_input_grads) grads.dx.resize(steps);
    if (ledger) ledger->begin_bp_pass(steps);

    Vec<T> dmem_r(n), dmem_u(n), dmem_cx(n), dmem_ch(n);  // dC/dM_{.,t+1}
    Vec<T> dh_next(n);                                    // dC/dh_{t+1}
    Vec<T> dh_hat(n);
    Vec<T> ddh(n);
    detail::InputGradTracker<T> xtrack;
    xtrack.init(opts.want_input_grads, p.n_in);

    for (std::size_t t = steps; t-- > 0;) {
        const TapeRecord<T>& rec = tape.steps[t];

        Vec<T> dh = loss_grads[t];
        if (t + 1 < steps) {
            const TapeRecord<T>& next = tape.steps[t + 1];
            next.mask_h.for_each_set([&](std::size_t i) { dh[i] += dh_hat[i] + ddh[i]; });
            // direct self-recursion of h through (1 - u_{t+1})
            for (std::size_t i = 0; i < n; ++i) dh[i] += dh_next[i] * (T(1) - next.gate_u[i]);
        }

        Vec<T> dmem_c(n);
        for (std::size_t i = 0; i < n; ++i) {
            const T cand = rec.cand[i];
            dmem_c[i] = dh[i] * rec.gate_u[i] * (T(1) - cand * cand);
        }

        Vec<T> dmr(n), dmu(n), dmcx(n), dmch(n);
        for (std::size_t i = 0; i < n; ++i) {
            const T r = rec.gate_r[i], u = rec.gate_u[i];
            dmch[i] = dmem_c[i] * r + dmem_ch[i];
            // reset path carries the sigma'(M_r) chain factor of r = sigma(M_r)
            dmr[i] = dmem_c[i] * rec.mem[3 * n + i] * r * (T(1) - r) + dmem_r[i];
            dmu[i] = dh[i] * (rec.cand[i] - rec.h_prev[i]) * u * (T(1) - u) + dmem_u[i];
            dmcx[i] = dmem_c[i] + dmem_cx[i];
        }

        Vec<T> dmem_h(3 * n);  // adjoint of the h-path memories [r | u | ch]
        Vec<T> dmem_x(3 * n);  // adjoint of the x-path memories [r | u | cx]
        for (std::size_t i = 0; i < n; ++i) {
            dmem_h[i] = dmr[i];
            dmem_h[n + i] = dmu[i];
            dmem_h[2 * n + i] = dmch[i];
            dmem_x[i] = dmr[i];
            dmem_x[n + i] = dmu[i];
            dmem_x[2 * n + i] = dmcx[i];
        }

        sparse_weight_grad_accum(grads.dwx, dmem_x, rec.dx, ledger);
        sparse_weight_grad_accum(grads.dwh, dmem_h, rec.dh, ledger);

        DeltaVec<T> ddh_prev = sparse_input_grad(p.wh, dmem_h, rec.mask_h, ledger);
        xtrack.step(p, rec, dmem_x, grads, t, ledger);
        detail::record_bp_occupancy(ledger, t, rec, p.n_in, n);

        if (t + 1 < steps) {
            const Mask& m_next = tape.steps[t + 1].mask_h;
            Vec<T> dh_hat_prev(n);
            for (std::size_t i = 0; i < n; ++i)
                dh_hat_prev[i] = m_next.test(i) ? -ddh[i] : dh_hat[i];
            dh_hat = std::move(dh_hat_prev);
        }
        ddh = decode(ddh_prev);
        dh_next = std::move(dh);
        dmem_r = std::move(dmr);
        dmem_u = std::move(dmu);
        dmem_cx = std::move(dmcx);
        dmem_ch = std::move(dmch);
    }

    grads.dbias = Vec<T>(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
        grads.dbias[i] = dmem_r[i];
        grads.dbias[n + i] = dmem_u[i];
        grads.dbias[2 * n + i] = dmem_cx[i];
    }
    return grads;
}

template <class T>
CellGrads<T> delta_backward(const CellParams<T>& p, const TrainingTape<T>& tape,
                            const std::vector<Vec<T>>& loss_grads, OpLedger* ledger = nullptr,
                            BackwardOptions opts = {}) {
    switch (p.kind) {
        case CellKind::Rnn: return delta_rnn_backward(p, tape, loss_grads, ledger, opts);
        case CellKind::Lstm: return delta_lstm_backward(p, tape, loss_grads, ledger, opts);
        case CellKind::Gru: return delta_gru_backward(p, tape, loss_grads, ledger, opts);
    }
    throw std::invalid_argument("delta_backward: bad cell kind");
}

}  // namespace deltanet
