// SPDX-License-Identifier: Apache-2.0
//
// Cycle-approximate latency model of a P-wide PE array consuming NZIL/NZVL
// streams for the three training kernels. This is not an RTL model: each
// timestep pays a constant kernel overhead plus a DRAM column-address stall,
// and weight streaming is double-buffered against compute at a configurable
// burst rate per PE lane. The forward and input-gradient kernels run
// timestep by timestep (sequential dependence across time); the weight
// gradient kernel is batched at the end of BPTT, so its overhead and address
// stall are paid once per sequence.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deltanet {

enum class AccelKernel { FpMatvec, BpInputGrad, BpWeightGrad };

const char* accel_kernel_name(AccelKernel k);

struct AccelConfig {
    unsigned num_pes = 16;
    std::uint64_t kernel_overhead_cycles = 8;  // per timestep (per sequence for the wg kernel)
    std::uint64_t dram_col_latency = 10;       // address setup of a column burst
    unsigned dram_burst_words_per_cycle = 1;   // per PE lane
};

struct KernelTrace {
    AccelKernel kernel = AccelKernel::FpMatvec;
    std::uint64_t cycles = 0;
    std::uint64_t macs = 0;
    std::uint64_t weight_words = 0;  // words fetched (written, for the wg kernel)
};

KernelTrace simulate_kernel(AccelKernel kind, std::size_t n_rows,
                            std::span<const std::uint32_t> nzil_lengths,
                            const AccelConfig& config);

// Compute-bound dense bound: rows * cols * timesteps / P.
std::uint64_t dense_bound_cycles(std::size_t n_rows, std::size_t n_cols, std::size_t timesteps,
                                 unsigned num_pes);

double speedup(const KernelTrace& trace, std::uint64_t dense_bound);

struct SweepRow {
    AccelKernel kernel;
    std::size_t size = 0;
    double sparsity = 0;
    std::uint64_t cycles = 0;
    double speedup = 0;
};

// Grid of square networks: input size == hidden size == timesteps, with a
// fixed round(occupancy * size) active indices per timestep.
std::vector<SweepRow> sweep(std::span<const std::size_t> sizes,
                            std::span<const double> sparsities, const AccelConfig& config);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace deltanet
