// SPDX-License-Identifier: Apache-2.0
//
// The three column-skipping MxV kernels. Each one walks the NZIL once and
// touches only the weight columns of activated neurons; per-element sums run
// in ascending index order, matching the dense routines in tensor.hpp.

#pragma once

#include <span>

#include "deltanet/delta_codec.hpp"
#include "deltanet/ledger.hpp"
#include "deltanet/tensor.hpp"

namespace deltanet {

// out[i] += sum_{j in NZIL} w(i, j) * nzvl_j   (forward pre-activation update)
template <class T>
void sparse_matvec_accum(const Mat<T>& w, const DeltaVec<T>& d, std::span<T> out,
                         OpLedger* ledger = nullptr) {
    require(w.cols == d.len, "sparse_matvec_accum: weight/delta mismatch");
    require(w.rows == out.size(), "sparse_matvec_accum: weight/output mismatch");
    for (std::size_t k = 0; k < d.nzil.size(); ++k) {
        const std::size_t j = d.nzil[k];
        const T v = d.nzvl[k];
        for (std::size_t i = 0; i < w.rows; ++i) out[i] += w(i, j) * v;
    }
    if (ledger) ledger->on_fp_matvec(w.rows, w.cols, d.nnz());
}

// Same kernel with the output rows [0, split) going to `out_low` and rows
// [split, rows) to `out_high`; used where a concatenated weight matrix feeds
// non-adjacent memory blocks.
template <class T>
void sparse_matvec_accum_split(const Mat<T>& w, const DeltaVec<T>& d, std::span<T> out_low,
                               std::span<T> out_high, OpLedger* ledger = nullptr) {
    require(w.cols == d.len, "sparse_matvec_accum_split: weight/delta mismatch");
    require(w.rows == out_low.size() + out_high.size(),
            "sparse_matvec_accum_split: weight/output mismatch");
    const std::size_t split = out_low.size();
    for (std::size_t k = 0; k < d.nzil.size(); ++k) {
        const std::size_t j = d.nzil[k];
        const T v = d.nzvl[k];
        for (std::size_t i = 0; i < split; ++i) out_low[i] += w(i, j) * v;
        for (std::size_t i = split; i < w.rows; ++i) out_high[i - split] += w(i, j) * v;
    }
    if (ledger) ledger->on_fp_matvec(w.rows, w.cols, d.nnz());
}

// (w^T * dmem) evaluated only at mask-on columns; the result shares the
// mask's index list and the off-mask coordinates are never computed.
template <class T>
DeltaVec<T> sparse_input_grad(const Mat<T>& w, const Vec<T>& dmem, const Mask& mask,
                              OpLedger* ledger = nullptr) {
    require(w.rows == dmem.size(), "sparse_input_grad: weight/adjoint mismatch");
    require(w.cols == mask.size(), "sparse_input_grad: weight/mask mismatch");
    DeltaVec<T> out(w.cols);
    mask.for_each_set([&](std::size_t j) {
        T acc = T(0);
        for (std::size_t i = 0; i < w.rows; ++i) acc += w(i, j) * dmem[i];
        out.nzil.push_back(static_cast<std::uint32_t>(j));
        out.nzvl.push_back(acc);
    });
    if (ledger) ledger->on_bp_input_grad(w.rows, w.cols, out.nnz());
    return out;
}

// grads[:, j] += dmem * nzvl_j for each j in the NZIL; exactly
// occupancy * rows * cols MACs.
template <class T>
void sparse_weight_grad_accum(Mat<T>& grads, const Vec<T>& dmem, const DeltaVec<T>& delta,
                              OpLedger* ledger = nullptr) {
    require(grads.rows == dmem.size(), "sparse_weight_grad_accum: grads/adjoint mismatch");
    require(grads.cols == delta.len, "sparse_weight_grad_accum: grads/delta mismatch");
    for (std::size_t k = 0; k < delta.nzil.size(); ++k) {
        const std::size_t j = delta.nzil[k];
        const T v = delta.nzvl[k];
        for (std::size_t i = 0; i < grads.rows; ++i) grads(i, j) += dmem[i] * v;
    }
    if (ledger) ledger->on_bp_weight_grad(grads.rows, grads.cols, delta.nnz());
}

}  // namespace deltanet
