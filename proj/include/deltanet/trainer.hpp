// SPDX-License-Identifier: Apache-2.0
//
// End-to-end training harness: a stack of delta cells followed by a dense
// fully-connected classifier head, softmax cross-entropy read out at the
// final timestep (or summed over all timesteps), Adam/SGD updates, exact
// operation accounting through an OpLedger, and JSON checkpoints.
//
// The classifier head sits outside the delta framework and its MACs are not
// counted in the RNN-layer ledger. Epoch shuffling is derived from
// (seed, epoch) so a restored checkpoint continues bit-exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "deltanet/backward.hpp"
#include "deltanet/cells.hpp"
#include "deltanet/dataset.hpp"
#include "deltanet/oracle.hpp"
#include "deltanet/optim.hpp"
#include "deltanet/train_config.hpp"

namespace deltanet {

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0;
    double train_acc = 0;
    double eval_acc = 0;
    double mean_occ_x = 0;
    double mean_occ_h = 0;
    std::uint64_t cum_fp_macs = 0;
    std::uint64_t cum_bp_macs = 0;
};

void write_metrics_csv(std::ostream& os, const std::vector<EpochMetrics>& rows);

template <class T>
struct Model {
    std::vector<CellParams<T>> layers;
    Mat<T> wc;  // classifier head, num_classes x n_hidden_top
    Vec<T> bc;

    std::vector<std::span<T>> param_spans() {
        std::vector<std::span<T>> out;
        for (auto& l : layers) {
            out.push_back(l.wx.span());
            out.push_back(l.wh.span());
            out.push_back(l.bias.span());
        }
        out.push_back(wc.span());
        out.push_back(bc.span());
        return out;
    }
};

namespace detail {

template <class T>
Vec<T> cast_vec(const Vector& v) {
    Vec<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<T>(v[i]);
    return out;
}

template <class T>
struct SoftmaxResult {
    Vec<T> probs;
    double loss = 0;
    std::size_t argmax = 0;
};

template <class T>
SoftmaxResult<T> softmax_cross_entropy(const Vec<T>& logits, std::size_t label) {
    SoftmaxResult<T> r;
    r.probs = Vec<T>(logits.size());
    T zmax = logits[0];
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > zmax) {
            zmax = logits[i];
            r.argmax = i;
        }
    T denom = T(0);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        r.probs[i] = std::exp(logits[i] - zmax);
        denom += r.probs[i];
    }
    for (auto& p : r.probs.data) p /= denom;
    r.loss = -std::log(static_cast<double>(r.probs[label]));
    return r;
}

}  // namespace detail

template <class T>
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg)
        : cfg_(cfg),
          kind_(parse_cell_kind(cfg.cell_kind)),
          data_(generate_dataset(cfg.dataset, cfg.seed)),
          adam_(AdamConfig<T>{static_cast<T>(cfg.learning_rate), static_cast<T>(cfg.beta1),
                              static_cast<T>(cfg.beta2), static_cast<T>(cfg.adam_eps),
                              static_cast<T>(cfg.weight_decay)}) {
        validate(cfg_);
        Rng rng(cfg_.seed);
        std::size_t in_dim = cfg_.dataset.input_dim;
        for (std::size_t n_h : cfg_.layer_sizes) {
            model_.layers.push_back(init_cell_params<T>(kind_, in_dim, n_h, rng));
            in_dim = n_h;
        }
        model_.wc = uniform_init<T>(cfg_.dataset.num_classes, in_dim, rng);
        model_.bc = Vec<T>(cfg_.dataset.num_classes);
    }

    const TrainConfig& config() const { return cfg_; }
    const Dataset& data() const { return data_; }
    Model<T>& model() { return model_; }
    const Model<T>& model() const { return model_; }
    const OpLedger& ledger() const { return ledger_; }
    std::size_t epochs_done() const { return epoch_; }

    std::vector<EpochMetrics> run() {
        std::vector<EpochMetrics> out;
        while (epoch_ < cfg_.epochs) out.push_back(run_epoch());
        return out;
    }

    EpochMetrics run_epoch() {
        OpLedger epoch_ledger;
        double loss_sum = 0;
        std::size_t correct = 0, seen = 0;

        std::vector<std::size_t> order(data_.train.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(cfg_.seed ^ (0x9e3779b97f4a7c15ull * (epoch_ + 1)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);

        const double lr_scale =
            cfg_.cosine_lr ? cosine_lr_scale(epoch_, cfg_.epochs) : 1.0;

        for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg_.batch_size);
            GradBuffers grads = make_grad_buffers();
            for (std::size_t k = start; k < stop; ++k) {
                epoch_ledger.weight_access =
                    cfg_.batch_size == 1
                        ? WeightAccess::Sparse
                        : (k == start ? WeightAccess::DenseOnce : WeightAccess::Shared);
                const Sample& s = data_.train[order[k]];
                const double loss = process_sample(s, grads, &epoch_ledger, &correct);
                loss_sum += loss;
                ++seen;
            }
            apply_update(grads, stop - start, lr_scale);
        }

        EpochMetrics m;
        m.epoch = epoch_;
        m.train_loss = loss_sum / static_cast<double>(seen);
        m.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
        m.eval_acc = evaluate(data_.eval);
        m.mean_occ_x = epoch_ledger.mean_occupancy_x();
        m.mean_occ_h = epoch_ledger.mean_occupancy_h();
        ledger_.merge(epoch_ledger);
        m.cum_fp_macs = ledger_.macs_fp;
        m.cum_bp_macs = ledger_.macs_bp_input_grad + ledger_.macs_bp_weight_grad;
        ++epoch_;
        return m;
    }

    // A fixed number of batch-1 optimizer steps over the training split in
    // deterministic order; used by the trajectory-equivalence checks.
    void train_steps(std::size_t num_steps) {
        std::size_t idx = 0;
        for (std::size_t s = 0; s < num_steps; ++s) {
            GradBuffers grads = make_grad_buffers();
            const Sample& sample = data_.train[idx];
            idx = (idx + 1) % data_.train.size();
            std::size_t correct = 0;
            (void)process_sample(sample, grads, &ledger_, &correct);
            apply_update(grads, 1, 1.0);
        }
    }

    double evaluate(const std::vector<Sample>& split) {
        std::size_t correct = 0;
        for (const Sample& s : split) {
            const auto logits = forward_logits(s, nullptr);
            const auto sm = detail::softmax_cross_entropy(logits, s.label);
            correct += sm.argmax == s.label ? 1 : 0;
        }
        return split.empty() ? 0.0 : static_cast<double>(correct) / split.size();
    }

    nlohmann::json to_checkpoint() const {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : model_.layers) {
            layers.push_back({{"kind", cell_kind_name(l.kind)},
                              {"n_in", l.n_in},
                              {"n_hidden", l.n_hidden},
                              {"wx", mat_to_json(l.wx)},
                              {"wh", mat_to_json(l.wh)},
                              {"bias", l.bias.data}});
        }
        nlohmann::json opt{{"kind", cfg_.optimizer}, {"step", adam_.step_count()}};
        if (cfg_.optimizer == "adam") {
            opt["m"] = adam_.first_moments();
            opt["v"] = adam_.second_moments();
        }
        return nlohmann::json{{"format_version", 1},
                              {"epoch", epoch_},
                              {"config", config_to_json(cfg_)},
                              {"model",
                               {{"layers", layers},
                                {"classifier_w", mat_to_json(model_.wc)},
                                {"classifier_b", model_.bc.data}}},
                              {"optimizer", opt}};
    }

    void restore_checkpoint(const nlohmann::json& j) {
        require(j.at("format_version").get<int>() == 1, "checkpoint: unsupported format version");
        epoch_ = j.at("epoch").get<std::size_t>();
        const auto& layers = j.at("model").at("layers");
        require(layers.size() == model_.layers.size(), "checkpoint: layer count mismatch");
        for (std::size_t i = 0; i < model_.layers.size(); ++i) {
            auto& l = model_.layers[i];
            mat_from_json(layers[i].at("wx"), l.wx);
            mat_from_json(layers[i].at("wh"), l.wh);
            vec_from_json(layers[i].at("bias"), l.bias);
        }
        mat_from_json(j.at("model").at("classifier_w"), model_.wc);
        vec_from_json(j.at("model").at("classifier_b"), model_.bc);
        const auto& opt = j.at("optimizer");
        if (cfg_.optimizer == "adam" && opt.contains("m")) {
            std::vector<std::vector<T>> m = opt.at("m").get<std::vector<std::vector<T>>>();
            std::vector<std::vector<T>> v = opt.at("v").get<std::vector<std::vector<T>>>();
            adam_.restore(opt.at("step").get<std::uint64_t>(), std::move(m), std::move(v));
        }
    }

private:
    struct GradBuffers {
        std::vector<CellGrads<T>> layers;
        Mat<T> dwc;
        Vec<T> dbc;
    };

    GradBuffers make_grad_buffers() {
        GradBuffers g;
        for (auto& l : model_.layers) g.layers.push_back(detail::make_grads(l));
        g.dwc = Mat<T>(model_.wc.rows, model_.wc.cols);
        g.dbc = Vec<T>(model_.bc.size());
        return g;
    }

    Vec<T> forward_logits(const Sample& s, OpLedger* ledger,
                          std::vector<ForwardRun<T>>* runs = nullptr) {
        std::vector<Vec<T>> stream;
        stream.reserve(s.xs.size());
        for (const Vector& x : s.xs) stream.push_back(detail::cast_vec<T>(x));
        for (auto& layer : model_.layers) {
            ForwardRun<T> run = delta_forward(layer, stream, static_cast<T>(cfg_.theta_x),
                                              static_cast<T>(cfg_.theta_h), ledger);
            stream = run.h;
            if (runs) runs->push_back(std::move(run));
        }
        Vec<T> logits = matvec(model_.wc, stream.back());
        add_inplace(logits, model_.bc);
        return logits;
    }

    double process_sample(const Sample& s, GradBuffers& grads, OpLedger* ledger,
                          std::size_t* correct) {
        std::vector<ForwardRun<T>> runs;
        runs.reserve(model_.layers.size());
        Vec<T> logits = forward_logits(s, ledger, &runs);
        const std::size_t steps = s.xs.size();
        const std::size_t top = model_.layers.size() - 1;

        double loss = 0;
        std::vector<Vec<T>> top_grads(steps, Vec<T>(model_.layers[top].n_hidden));
        {
            const auto sm = detail::softmax_cross_entropy(logits, s.label);
            if (correct) *correct += sm.argmax == s.label ? 1 : 0;
            if (!cfg_.per_timestep_loss) {
                loss = sm.loss;
                Vec<T> dlogits = sm.probs;
                dlogits[s.label] -= T(1);
                outer_accum(grads.dwc, dlogits, runs[top].h.back());
                add_inplace(grads.dbc, dlogits);
                top_grads[steps - 1] = matvec_transposed(model_.wc, dlogits);
            } else {
                for (std::size_t t = 0; t < steps; ++t) {
                    Vec<T> zt = matvec(model_.wc, runs[top].h[t]);
                    add_inplace(zt, model_.bc);
                    const auto smt = detail::softmax_cross_entropy(zt, s.label);
                    loss += smt.loss;
                    Vec<T> dlogits = smt.probs;
                    dlogits[s.label] -= T(1);
                    outer_accum(grads.dwc, dlogits, runs[top].h[t]);
                    add_inplace(grads.dbc, dlogits);
                    top_grads[t] = matvec_transposed(model_.wc, dlogits);
                }
            }
        }
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch_));

        std::vector<Vec<T>> lg = std::move(top_grads);
        for (std::size_t li = model_.layers.size(); li-- > 0;) {
            BackwardOptions opts;
            opts.want_input_grads = li > 0;
            CellGrads<T> g;
            if (cfg_.dense_oracle_grads)
                g = dense_masked_backward(model_.layers[li], runs[li].tape, lg,
                                          opts.want_input_grads);
            else
                g = delta_backward(model_.layers[li], runs[li].tape, lg, ledger, opts);
            grads.layers[li].accumulate(g);
            if (li > 0) lg = std::move(g.dx);
        }
        return loss;
    }

    void apply_update(GradBuffers& grads, std::size_t batch_count, double lr_scale) {
        const T inv = T(1) / static_cast<T>(batch_count);
        for (auto& g : grads.layers) g.scale(inv);
        for (auto& v : grads.dwc.data) v *= inv;
        for (auto& v : grads.dbc.data) v *= inv;

        if (cfg_.max_grad_norm > 0.0) clip_grads(grads);

        std::vector<std::span<T>> params = model_.param_spans();
        std::vector<std::span<const T>> gspans;
        for (std::size_t i = 0; i < grads.layers.size(); ++i) {
            gspans.push_back(grads.layers[i].dwx.span());
            gspans.push_back(grads.layers[i].dwh.span());
            gspans.push_back(grads.layers[i].dbias.span());
        }
        gspans.push_back(grads.dwc.span());
        gspans.push_back(grads.dbc.span());

        if (cfg_.optimizer == "adam") {
            adam_.step(params, gspans, static_cast<T>(lr_scale));
        } else {
            const T lr = static_cast<T>(cfg_.learning_rate * lr_scale);
            for (std::size_t i = 0; i < params.size(); ++i)
                sgd_step<T>(params[i], gspans[i], lr, static_cast<T>(cfg_.weight_decay));
        }
    }

    void clip_grads(GradBuffers& grads) {
        double sq = 0;
        auto acc = [&sq](const auto& container) {
            for (const auto& v : container.data) sq += static_cast<double>(v) * v;
        };
        for (auto& g : grads.layers) {
            acc(g.dwx);
            acc(g.dwh);
            acc(g.dbias);
        }
        acc(grads.dwc);
        acc(grads.dbc);
        const double norm = std::sqrt(sq);
        if (norm <= cfg_.max_grad_norm) return;
        const T scale = static_cast<T>(cfg_.max_grad_norm / norm);
        for (auto& g : grads.layers) g.scale(scale);
        for (auto& v : grads.dwc.data) v *= scale;
        for (auto& v : grads.dbc.data) v *= scale;
    }

    static nlohmann::json mat_to_json(const Mat<T>& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < m.rows; ++r)
            rows.push_back(std::vector<T>(m.row(r), m.row(r) + m.cols));
        return rows;
    }

    static void mat_from_json(const nlohmann::json& j, Mat<T>& m) {
        require(j.size() == m.rows, "checkpoint: matrix row mismatch");
        for (std::size_t r = 0; r < m.rows; ++r) {
            const auto row = j[r].get<std::vector<T>>();
            require(row.size() == m.cols, "checkpoint: matrix column mismatch");
            std::copy(row.begin(), row.end(), m.row(r));
        }
    }

    static void vec_from_json(const nlohmann::json& j, Vec<T>& v) {
        auto vals = j.get<std::vector<T>>();
        require(vals.size() == v.size(), "checkpoint: vector length mismatch");
        v.data = std::move(vals);
    }

    TrainConfig cfg_;
    CellKind kind_;
    Dataset data_;
    Model<T> model_;
    AdamOptimizer<T> adam_;
    OpLedger ledger_;
    std::size_t epoch_ = 0;
};

struct TrainResult {
    std::vector<EpochMetrics> metrics;
    OpLedger ledger;
    nlohmann::json checkpoint;
};

// Dispatches on cfg.precision ("fp64" or "fp32").
TrainResult run_training(const TrainConfig& cfg);

}  // namespace deltanet
