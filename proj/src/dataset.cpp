// SPDX-License-Identifier: Apache-2.0

#include "deltanet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deltanet {

const char* task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::TemporalPattern: return "temporal-pattern";
        case TaskKind::DelayedRecall: return "delayed-recall";
    }
    return "?";
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "temporal-pattern") return TaskKind::TemporalPattern;
    if (name == "delayed-recall") return TaskKind::DelayedRecall;
    throw std::invalid_argument("unknown task kind: " + name);
}

void validate(const SyntheticTaskSpec& spec) {
    require(spec.num_classes >= 2, "dataset: need at least two classes");
    require(spec.seq_len >= 4, "dataset: sequence length too short");
    require(spec.input_dim >= 1, "dataset: input dim must be positive");
    require(spec.noise >= 0.0 && std::isfinite(spec.noise), "dataset: bad noise level");
    require(spec.smoothness >= 0.0 && spec.smoothness < 1.0, "dataset: smoothness must be in [0,1)");
    require(spec.train_per_class >= 1 && spec.eval_per_class >= 1, "dataset: empty split");
}

namespace {

constexpr double kTau = 6.283185307179586476925286766559;

// AR(1) step with unit stationary variance scaled by `sigma`
double ar1(double prev, double rho, double sigma, Rng& rng) {
    return rho * prev + sigma * std::sqrt(1.0 - rho * rho) * rng.normal();
}

Sample make_delayed_recall(const SyntheticTaskSpec& spec, const std::vector<Vector>& cues,
                           std::size_t label, Rng& rng) {
    const std::size_t cue_len = 3;
    Sample s;
    s.label = label;
    Vector x(spec.input_dim);
    for (std::size_t t = 0; t < spec.seq_len; ++t) {
        if (t < cue_len) {
            for (std::size_t i = 0; i < spec.input_dim; ++i)
                x[i] = cues[label][i] + spec.noise * rng.normal();
        } else {
            for (std::size_t i = 0; i < spec.input_dim; ++i)
                x[i] = ar1(x[i], spec.smoothness, spec.noise, rng);
        }
        s.xs.push_back(x);
    }
    return s;
}

Sample make_temporal_pattern(const SyntheticTaskSpec& spec, std::size_t label, Rng& rng) {
    Sample s;
    s.label = label;
    // class k oscillates at k+1 cycles per sequence; phases are per-sample
    const double cycles = static_cast<double>(label + 1);
    const double phase = rng.uniform(0.0, kTau);
    Vector drift(spec.input_dim);
    for (std::size_t t = 0; t < spec.seq_len; ++t) {
        Vector x(spec.input_dim);
        for (std::size_t i = 0; i < spec.input_dim; ++i) {
            const double coord_phase = kTau * static_cast<double>(i) / spec.input_dim;
            drift[i] = ar1(drift[i], spec.smoothness, spec.noise, rng);
            x[i] = std::sin(kTau * cycles * static_cast<double>(t) / spec.seq_len + phase +
                            coord_phase) +
                   drift[i];
        }
        s.xs.push_back(std::move(x));
    }
    return s;
}

std::vector<Sample> make_split(const SyntheticTaskSpec& spec, const std::vector<Vector>& cues,
                               std::size_t per_class, Rng& rng) {
    std::vector<Sample> out;
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
        for (std::size_t j = 0; j < per_class; ++j) {
            if (spec.kind == TaskKind::DelayedRecall)
                out.push_back(make_delayed_recall(spec, cues, k, rng));
            else
                out.push_back(make_temporal_pattern(spec, k, rng));
        }
    }
    // deterministic shuffle
    for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.index(i)]);
    return out;
}

}  // namespace

Dataset generate_dataset(const SyntheticTaskSpec& spec, std::uint64_t seed) {
    validate(spec);
    Rng rng(seed);

    // distinct +-1 class cues; the two-class task uses an antipodal pair
    std::vector<Vector> cues;
    for (std::size_t k = 0; k < spec.num_classes; ++k) {
        Vector c(spec.input_dim);
        do {
            for (auto& v : c.data) v = rng.uniform() < 0.5 ? -1.0 : 1.0;
        } while (std::find(cues.begin(), cues.end(), c) != cues.end());
        cues.push_back(std::move(c));
    }
    if (spec.num_classes == 2)
        for (std::size_t i = 0; i < spec.input_dim; ++i) cues[1][i] = -cues[0][i];

    Dataset d;
    d.train = make_split(spec, cues, spec.train_per_class, rng);
    d.eval = make_split(spec, cues, spec.eval_per_class, rng);
    return d;
}

}  // namespace deltanet
