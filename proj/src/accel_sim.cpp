// SPDX-License-Identifier: Apache-2.0

#include "deltanet/accel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace deltanet {

const char* accel_kernel_name(AccelKernel k) {
    switch (k) {
        case AccelKernel::FpMatvec: return "fp_matvec";
        case AccelKernel::BpInputGrad: return "bp_input_grad";
        case AccelKernel::BpWeightGrad: return "bp_weight_grad";
    }
    return "?";
}

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

KernelTrace simulate_kernel(AccelKernel kind, std::size_t n_rows,
                            std::span<const std::uint32_t> nzil_lengths,
                            const AccelConfig& config) {
    if (config.num_pes < 1 || config.dram_burst_words_per_cycle < 1)
        throw std::invalid_argument("simulate_kernel: invalid config");

    KernelTrace trace;
    trace.kernel = kind;

    const std::uint64_t pes = config.num_pes;
    const std::uint64_t stream_rate = pes * config.dram_burst_words_per_cycle;

    if (kind == AccelKernel::BpWeightGrad) {
        // batched after BPTT: one launch, column bursts pipelined across the
        // whole sequence
        std::uint64_t words = 0;
        for (std::uint32_t len : nzil_lengths) words += static_cast<std::uint64_t>(len) * n_rows;
        trace.macs = words;
        trace.weight_words = words;
        const std::uint64_t compute = ceil_div(words, pes);
        const std::uint64_t stream = ceil_div(words, stream_rate);
        trace.cycles = config.kernel_overhead_cycles + std::max(compute, stream) +
                       (words > 0 ? config.dram_col_latency : 0);
        return trace;
    }

    // per-timestep kernels: overhead and the address stall cannot be hidden
    // because timestep t+1 depends on the result of timestep t
    for (std::uint32_t len : nzil_lengths) {
        const std::uint64_t words = static_cast<std::uint64_t>(len) * n_rows;
        trace.macs += words;
        trace.weight_words += words;
        const std::uint64_t compute = ceil_div(words, pes);
        const std::uint64_t stream = ceil_div(words, stream_rate);
        trace.cycles += config.kernel_overhead_cycles + std::max(compute, stream) +
                        (len > 0 ? config.dram_col_latency : 0);
    }
    return trace;
}

std::uint64_t dense_bound_cycles(std::size_t n_rows, std::size_t n_cols, std::size_t timesteps,
                                 unsigned num_pes) {
    if (num_pes < 1) throw std::invalid_argument("dense_bound_cycles: invalid PE count");
    return ceil_div(static_cast<std::uint64_t>(n_rows) * n_cols * timesteps, num_pes);
}

double speedup(const KernelTrace& trace, std::uint64_t dense_bound) {
    if (trace.cycles == 0) throw std::invalid_argument("speedup: empty trace");
    return static_cast<double>(dense_bound) / static_cast<double>(trace.cycles);
}

std::vector<SweepRow> sweep(std::span<const std::size_t> sizes,
                            std::span<const double> sparsities, const AccelConfig& config) {
    std::vector<SweepRow> rows;
    for (std::size_t n : sizes) {
        for (double s : sparsities) {
            if (s < 0.0 || s > 1.0) throw std::invalid_argument("sweep: sparsity out of range");
            const auto active = static_cast<std::uint32_t>(
                std::llround((1.0 - s) * static_cast<double>(n)));
            std::vector<std::uint32_t> lens(n, active);  // timesteps == size
            const std::uint64_t dense = dense_bound_cycles(n, n, n, config.num_pes);
            for (AccelKernel k :
                 {AccelKernel::FpMatvec, AccelKernel::BpInputGrad, AccelKernel::BpWeightGrad}) {
                const KernelTrace t = simulate_kernel(k, n, lens, config);
                rows.push_back({k, n, s, t.cycles, speedup(t, dense)});
            }
        }
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "kernel,size,sparsity,cycles,speedup\n";
    for (const SweepRow& r : rows) {
        os << accel_kernel_name(r.kernel) << ',' << r.size << ',' << r.sparsity << ',' << r.cycles
           << ',' << r.speedup << '\n';
    }
    return os.str();
}

}  // namespace deltanet
