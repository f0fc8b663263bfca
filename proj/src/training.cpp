// SPDX-License-Identifier: Apache-2.0

#include "deltanet/trainer.hpp"

#include <ostream>

namespace deltanet {

void write_metrics_csv(std::ostream& os, const std::vector<EpochMetrics>& rows) {
    os << "epoch,cum_fp_macs,cum_bp_macs,mean_occupancy_x,mean_occupancy_h,eval_metric\n";
    for (const EpochMetrics& m : rows) {
        os << m.epoch << ',' << m.cum_fp_macs << ',' << m.cum_bp_macs << ',' << m.mean_occ_x
           << ',' << m.mean_occ_h << ',' << m.eval_acc << '\n';
    }
}

namespace {

template <class T>
TrainResult run_typed(const TrainConfig& cfg) {
    Trainer<T> trainer(cfg);
    TrainResult result;
    result.metrics = trainer.run();
    result.ledger = trainer.ledger();
    result.checkpoint = trainer.to_checkpoint();
    return result;
}

}  // namespace

TrainResult run_training(const TrainConfig& cfg) {
    validate(cfg);
    if (cfg.precision == "fp32") return run_typed<float>(cfg);
    return run_typed<double>(cfg);
}

}  // namespace deltanet
