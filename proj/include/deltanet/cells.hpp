// SPDX-License-Identifier: Apache-2.0
//
// Forward propagation for delta RNN / LSTM / GRU cells. Each step encodes the
// input and previous hidden state against their retained values, updates the
// pre-activation memories through the column-skipping kernel, and records on
// a training tape everything the backward pass consumes. Dense reference
// cells (textbook RNN/LSTM/GRU in the same parameterization) serve as the
// zero-threshold baseline.
//
// Weight layout is gate-concatenated so a single NZIL walk serves all gates:
//   rnn   wx,wh rows: [h]
//   lstm  wx,wh rows: [i | f | g | o]
//   gru   wx rows: [r | u | c]  feeding memories  [M_r | M_u | M_cx]
//         wh rows: [r | u | c]  feeding memories  [M_r | M_u | M_ch]
// The GRU memory state holds four blocks [M_r | M_u | M_cx | M_ch]; M_ch
// starts at zero, every other memory starts at its bias.

#pragma once

#include <vector>

#include "deltanet/delta_codec.hpp"
#include "deltanet/ledger.hpp"
#include "deltanet/sparse_kernels.hpp"
#include "deltanet/tensor.hpp"

namespace deltanet {

enum class CellKind { Rnn, Lstm, Gru };

inline const char* cell_kind_name(CellKind k) {
    switch (k) {
        case CellKind::Rnn: return "rnn";
        case CellKind::Lstm: return "lstm";
        case CellKind::Gru: return "gru";
    }
    return "?";
}

// Rows of the concatenated weight matrices, in units of n_hidden.
inline std::size_t gate_count(CellKind k) {
    switch (k) {
        case CellKind::Rnn: return 1;
        case CellKind::Lstm: return 4;
        case CellKind::Gru: return 3;
    }
    return 0;
}

// Blocks of the pre-activation memory state, in units of n_hidden.
inline std::size_t mem_block_count(CellKind k) {
    return k == CellKind::Gru ? 4 : gate_count(k);
}

template <class T>
struct CellParams {
    CellKind kind = CellKind::Rnn;
    std::size_t n_in = 0;
    std::size_t n_hidden = 0;
    Mat<T> wx;    // (G*n_hidden) x n_in
    Mat<T> wh;    // (G*n_hidden) x n_hidden
    Vec<T> bias;  // G*n_hidden

    std::size_t gate_rows() const { return gate_count(kind) * n_hidden; }
};

template <class T>
CellParams<T> init_cell_params(CellKind kind, std::size_t n_in, std::size_t n_hidden, Rng& rng) {
    CellParams<T> p;
    p.kind = kind;
    p.n_in = n_in;
    p.n_hidden = n_hidden;
    const std::size_t rows = gate_count(kind) * n_hidden;
    p.wx = uniform_init<T>(rows, n_in, rng);
    p.wh = uniform_init<T>(rows, n_hidden, rng);
    p.bias = uniform_init_vec<T>(rows, 1.0 / std::sqrt(static_cast<double>(n_hidden)), rng);
    return p;
}

template <class T>
struct DeltaCellState {
    Vec<T> x_hat;  // retained input
    Vec<T> h_hat;  // retained hidden state
    Vec<T> h;      // h_{t-1} on entry of a step, h_t after
    Vec<T> mem;    // pre-activation memories, block layout per cell kind
    Vec<T> cell;   // lstm cell state
};

template <class T>
DeltaCellState<T> init_delta_state(const CellParams<T>& p) {
    DeltaCellState<T> s;
    s.x_hat = Vec<T>(p.n_in);
    s.h_hat = Vec<T>(p.n_hidden);
    s.h = Vec<T>(p.n_hidden);
    s.mem = Vec<T>(mem_block_count(p.kind) * p.n_hidden);
    // memories start at their biases (the GRU hidden-path memory at zero)
    for (std::size_t i = 0; i < p.bias.size(); ++i) s.mem[i] = p.bias[i];
    if (p.kind == CellKind::Lstm) s.cell = Vec<T>(p.n_hidden);
    return s;
}

// One timestep of tape. `mask_h`/`dh` describe the delta of h_{t-1} encoded
// on entry of step t; `mem` is the post-update memory snapshot.
template <class T>
struct TapeRecord {
    Mask mask_x;
    Mask mask_h;
    DeltaVec<T> dx;
    DeltaVec<T> dh;
    Vec<T> mem;
    Vec<T> h;

    // lstm
    Vec<T> gate_i, gate_f, gate_g, gate_o, c, c_prev, tanh_c;
    // gru
    Vec<T> gate_r, gate_u, cand, mem_c, h_prev;
};

template <class T>
struct TrainingTape {
    CellKind kind = CellKind::Rnn;
    std::size_t n_in = 0;
    std::size_t n_hidden = 0;
    std::vector<TapeRecord<T>> steps;

    std::size_t length() const { return steps.size(); }
};

namespace detail {

template <class T>
void step_common_encode(const CellParams<T>& p, DeltaCellState<T>& state, const Vec<T>& x_t,
                        T theta_x, T theta_h, TapeRecord<T>& rec, OpLedger* ledger) {
    require(x_t.size() == p.n_in, "delta forward: input length mismatch");
    auto ex = delta_encode(x_t, state.x_hat, theta_x);
    auto eh = delta_encode(state.h, state.h_hat, theta_h);
    if (ledger)
        ledger->record_fp_step({static_cast<std::uint32_t>(ex.delta.nnz()),
                                static_cast<std::uint32_t>(p.n_in),
                                static_cast<std::uint32_t>(eh.delta.nnz()),
                                static_cast<std::uint32_t>(p.n_hidden)});
    rec.mask_x = std::move(ex.mask);
    rec.mask_h = std::move(eh.mask);
    rec.dx = std::move(ex.delta);
    rec.dh = std::move(eh.delta);
}

template <class T>
Vec<T> block(const Vec<T>& v, std::size_t idx, std::size_t n) {
    Vec<T> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = v[idx * n + i];
    return out;
}

}  // namespace detail

template <class T>
void delta_rnn_forward_step(const CellParams<T>& p, DeltaCellState<T>& state, const Vec<T>& x_t,
                            T theta_x, T theta_h, TrainingTape<T>& tape,
                            OpLedger* ledger = nullptr) {
    TapeRecord<T> rec;
    detail::step_common_encode(p, state, x_t, theta_x, theta_h, rec, ledger);

    sparse_matvec_accum(p.wx, rec.dx, state.mem.span(), ledger);
    sparse_matvec_accum(p.wh, rec.dh, state.mem.span(), ledger);

    if (!all_finite(state.mem)) throw std::runtime_error("delta_rnn_forward_step: non-finite state");
    state.h = activation(Activation::Tanh, state.mem);

    rec.mem = state.mem;
    rec.h = state.h;
    tape.steps.push_back(std::move(rec));
}

template <class T>
void delta_lstm_forward_step(const CellParams<T>& p, DeltaCellState<T>& state, const Vec<T>& x_t,
                             T theta_x, T theta_h, TrainingTape<T>& tape,
                             OpLedger* ledger = nullptr) {
    const std::size_t n = p.n_hidden;
    TapeRecord<T> rec;
    detail::step_common_encode(p, state, x_t, theta_x, theta_h, rec, ledger);

    sparse_matvec_accum(p.wx, rec.dx, state.mem.span(), ledger);
    sparse_matvec_accum(p.wh, rec.dh, state.mem.span(), ledger);

    if (!all_finite(state.mem)) throw std::runtime_error("delta_lstm_forward_step: non-finite state");
    rec.gate_i = activation(Activation::Sigmoid, detail::block(state.mem, 0, n));
    rec.gate_f = activation(Activation::Sigmoid, detail::block(state.mem, 1, n));
    rec.gate_g = activation(Activation::Tanh, detail::block(state.mem, 2, n));
    rec.gate_o = activation(Activation::Sigmoid, detail::block(state.mem, 3, n));

    rec.c_prev = state.cell;
    Vec<T> c(n);
    for (std::size_t i = 0; i < n; ++i)
        c[i] = rec.gate_f[i] * rec.c_prev[i] + rec.gate_i[i] * rec.gate_g[i];
    state.cell = c;
    rec.c = std::move(c);
    rec.tanh_c = activation(Activation::Tanh, rec.c);

    Vec<T> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = rec.gate_o[i] * rec.tanh_c[i];
    state.h = h;

    rec.mem = state.mem;
    rec.h = std::move(h);
    tape.steps.push_back(std::move(rec));
}

template <class T>
void delta_gru_forward_step(const CellParams<T>& p, DeltaCellState<T>& state, const Vec<T>& x_t,
                            T theta_x, T theta_h, TrainingTape<T>& tape,
                            OpLedger* ledger = nullptr) {
    const std::size_t n = p.n_hidden;
    TapeRecord<T> rec;
    rec.h_prev = state.h;
    detail::step_common_encode(p, state, x_t, theta_x, theta_h, rec, ledger);

    // x path feeds [M_r | M_u | M_cx], h path feeds [M_r | M_u] and M_ch
    sparse_matvec_accum(p.wx, rec.dx, std::span<T>(state.mem.data.data(), 3 * n), ledger);
    sparse_matvec_accum_split(p.wh, rec.dh, std::span<T>(state.mem.data.data(), 2 * n),
                              std::span<T>(state.mem.data.data() + 3 * n, n), ledger);

    if (!all_finite(state.mem)) throw std::runtime_error("delta_gru_forward_step: non-finite state");
    rec.gate_r = activation(Activation::Sigmoid, detail::block(state.mem, 0, n));
    rec.gate_u = activation(Activation::Sigmoid, detail::block(state.mem, 1, n));

    rec.mem_c = Vec<T>(n);
    for (std::size_t i = 0; i < n; ++i)
        rec.mem_c[i] = state.mem[2 * n + i] + rec.gate_r[i] * state.mem[3 * n + i];
    rec.cand = activation(Activation::Tanh, rec.mem_c);

    Vec<T> h(n);
    for (std::size_t i = 0; i < n; ++i)
        h[i] = (T(1) - rec.gate_u[i]) * rec.h_prev[i] + rec.gate_u[i] * rec.cand[i];
    state.h = h;

    rec.mem = state.mem;
    rec.h = std::move(h);
    tape.steps.push_back(std::move(rec));
}

template <class T>
void delta_forward_step(const CellParams<T>& p, DeltaCellState<T>& state, const Vec<T>& x_t,
                        T theta_x, T theta_h, TrainingTape<T>& tape, OpLedger* ledger = nullptr) {
    switch (p.kind) {
        case CellKind::Rnn: delta_rnn_forward_step(p, state, x_t, theta_x, theta_h, tape, ledger); break;
        case CellKind::Lstm: delta_lstm_forward_step(p, state, x_t, theta_x, theta_h, tape, ledger); break;
        case CellKind::Gru: delta_gru_forward_step(p, state, x_t, theta_x, theta_h, tape, ledger); break;
    }
}

template <class T>
struct ForwardRun {
    TrainingTape<T> tape;
    std::vector<Vec<T>> h;  // h_1 .. h_T
    DeltaCellState<T> final_state;
};

template <class T>
ForwardRun<T> delta_forward(const CellParams<T>& p, const std::vector<Vec<T>>& xs, T theta_x,
                            T theta_h, OpLedger* ledger = nullptr) {
    ForwardRun<T> run;
    run.tape.kind = p.kind;
    run.tape.n_in = p.n_in;
    run.tape.n_hidden = p.n_hidden;
    DeltaCellState<T> state = init_delta_state(p);
    run.h.reserve(xs.size());
    for (const Vec<T>& x : xs) {
        delta_forward_step(p, state, x, theta_x, theta_h, run.tape, ledger);
        run.h.push_back(state.h);
    }
    run.final_state = std::move(state);
    return run;
}

// ---------------------------------------------------------------------------
// Dense reference cells (no deltas, no thresholding), in the same
// parameterization as the delta cells.
// ---------------------------------------------------------------------------

template <class T>
std::vector<Vec<T>> dense_reference_forward(const CellParams<T>& p, const std::vector<Vec<T>>& xs) {
    const std::size_t n = p.n_hidden;
    std::vector<Vec<T>> hs;
    hs.reserve(xs.size());
    Vec<T> h(n);
    Vec<T> c(n);
    for (const Vec<T>& x : xs) {
        require(x.size() == p.n_in, "dense_reference_forward: input length mismatch");
        const Vec<T> zx = matvec(p.wx, x);
        const Vec<T> zh = matvec(p.wh, h);
        switch (p.kind) {
            case CellKind::Rnn: {
                Vec<T> hn(n);
                for (std::size_t i = 0; i < n; ++i)
                    hn[i] = std::tanh(zx[i] + zh[i] + p.bias[i]);
                h = std::move(hn);
                break;
            }
            case CellKind::Lstm: {
                Vec<T> hn(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const T gi = sigmoid_scalar(zx[i] + zh[i] + p.bias[i]);
                    const T gf = sigmoid_scalar(zx[n + i] + zh[n + i] + p.bias[n + i]);
                    const T gg = std::tanh(zx[2 * n + i] + zh[2 * n + i] + p.bias[2 * n + i]);
                    const T go = sigmoid_scalar(zx[3 * n + i] + zh[3 * n + i] + p.bias[3 * n + i]);
                    c[i] = gf * c[i] + gi * gg;
                    hn[i] = go * std::tanh(c[i]);
                }
                h = std::move(hn);
                break;
            }
            case CellKind::Gru: {
                // The candidate hidden product is gated by r after the matrix
                // multiply and carries no bias of its own.
                Vec<T> hn(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const T r = sigmoid_scalar(zx[i] + zh[i] + p.bias[i]);
                    const T u = sigmoid_scalar(zx[n + i] + zh[n + i] + p.bias[n + i]);
                    const T cand = std::tanh(zx[2 * n + i] + p.bias[2 * n + i] + r * zh[2 * n + i]);
                    hn[i] = (T(1) - u) * h[i] + u * cand;
                }
                h = std::move(hn);
                break;
            }
        }
        hs.push_back(h);
    }
    return hs;
}

}  // namespace deltanet
