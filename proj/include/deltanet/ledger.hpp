// SPDX-License-Identifier: Apache-2.0
//
// Exact instrumentation of the three MxV kernels. Every sparse kernel
// reports |NZIL| * rows multiply-accumulates; nothing is estimated.
//
// Weight-memory words follow the batch-1 column-skipping convention: with
// WeightAccess::Sparse each kernel call reads (or writes, for the weight
// gradient) one word per MAC. With batch > 1 the weights are fetched densely
// once per timestep for the whole batch: the first sample of the batch runs
// with WeightAccess::DenseOnce and the remaining samples with
// WeightAccess::Shared, which counts no weight traffic.

#pragma once

#include <cstdint>
#include <vector>

namespace deltanet {

enum class WeightAccess { Sparse, DenseOnce, Shared };

class OpLedger {
public:
    // One entry per stream kernel invocation (an (x, h) pair per timestep).
    struct StepOcc {
        std::uint32_t nnz_x = 0;
        std::uint32_t len_x = 0;
        std::uint32_t nnz_h = 0;
        std::uint32_t len_h = 0;
    };

    std::uint64_t macs_fp = 0;
    std::uint64_t macs_bp_input_grad = 0;
    std::uint64_t macs_bp_weight_grad = 0;
    std::uint64_t weight_words_read = 0;
    std::uint64_t weight_grad_words_written = 0;
    std::uint64_t mask_bits_read = 0;

    WeightAccess weight_access = WeightAccess::Sparse;

    std::vector<StepOcc> fp_trace;
    std::vector<StepOcc> bp_trace;

    void on_fp_matvec(std::uint64_t rows, std::uint64_t cols, std::uint64_t nnz) {
        macs_fp += rows * nnz;
        weight_words_read += weight_words(rows, cols, nnz);
        mask_bits_read += cols;
    }

    void on_bp_input_grad(std::uint64_t rows, std::uint64_t cols, std::uint64_t nnz) {
        macs_bp_input_grad += rows * nnz;
        weight_words_read += weight_words(rows, cols, nnz);
        mask_bits_read += cols;
    }

    void on_bp_weight_grad(std::uint64_t rows, std::uint64_t cols, std::uint64_t nnz) {
        macs_bp_weight_grad += rows * nnz;
        weight_grad_words_written += weight_words(rows, cols, nnz);
        mask_bits_read += cols;
    }

    void record_fp_step(const StepOcc& s) { fp_trace.push_back(s); }

    // Backward walks t = T..1; records land at their forward positions.
    void begin_bp_pass(std::size_t timesteps) {
        bp_base_ = bp_trace.size();
        bp_trace.resize(bp_base_ + timesteps);
    }
    void record_bp_step(std::size_t t_index, const StepOcc& s) { bp_trace[bp_base_ + t_index] = s; }

    std::uint64_t total_macs() const { return macs_fp + macs_bp_input_grad + macs_bp_weight_grad; }
    std::uint64_t total_weight_words() const { return weight_words_read + weight_grad_words_written; }

    std::vector<double> fp_occupancy_x() const { return ratio(fp_trace, true); }
    std::vector<double> fp_occupancy_h() const { return ratio(fp_trace, false); }
    std::vector<double> bp_occupancy_x() const { return ratio(bp_trace, true); }
    std::vector<double> bp_occupancy_h() const { return ratio(bp_trace, false); }

    double mean_occupancy_x() const { return mean(fp_trace, true); }
    double mean_occupancy_h() const { return mean(fp_trace, false); }

    void merge(const OpLedger& other) {
        macs_fp += other.macs_fp;
        macs_bp_input_grad += other.macs_bp_input_grad;
        macs_bp_weight_grad += other.macs_bp_weight_grad;
        weight_words_read += other.weight_words_read;
        weight_grad_words_written += other.weight_grad_words_written;
        mask_bits_read += other.mask_bits_read;
        fp_trace.insert(fp_trace.end(), other.fp_trace.begin(), other.fp_trace.end());
        bp_trace.insert(bp_trace.end(), other.bp_trace.begin(), other.bp_trace.end());
        bp_base_ = bp_trace.size();
    }

    void reset() { *this = OpLedger{}; }

private:
    std::size_t bp_base_ = 0;

    std::uint64_t weight_words(std::uint64_t rows, std::uint64_t cols, std::uint64_t nnz) const {
        switch (weight_access) {
            case WeightAccess::Sparse: return rows * nnz;
            case WeightAccess::DenseOnce: return rows * cols;
            case WeightAccess::Shared: return 0;
        }
        return 0;
    }

    static std::vector<double> ratio(const std::vector<StepOcc>& trace, bool x_stream) {
        std::vector<double> out;
        out.reserve(trace.size());
        for (const StepOcc& s : trace) {
            const double len = x_stream ? s.len_x : s.len_h;
            const double nnz = x_stream ? s.nnz_x : s.nnz_h;
            out.push_back(len > 0 ? nnz / len : 0.0);
        }
        return out;
    }

    static double mean(const std::vector<StepOcc>& trace, bool x_stream) {
        if (trace.empty()) return 0.0;
        std::uint64_t nnz = 0, len = 0;
        for (const StepOcc& s : trace) {
            nnz += x_stream ? s.nnz_x : s.nnz_h;
            len += x_stream ? s.len_x : s.len_h;
        }
        return len > 0 ? static_cast<double>(nnz) / static_cast<double>(len) : 0.0;
    }
};

}  // namespace deltanet
