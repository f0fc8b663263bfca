// SPDX-License-Identifier: Apache-2.0

#include "deltanet/train_config.hpp"

#include <cmath>
#include <fstream>

namespace deltanet {

CellKind parse_cell_kind(const std::string& name) {
    if (name == "rnn") return CellKind::Rnn;
    if (name == "lstm") return CellKind::Lstm;
    if (name == "gru") return CellKind::Gru;
    throw std::invalid_argument("unknown cell kind: " + name);
}

void validate(const TrainConfig& cfg) {
    (void)parse_cell_kind(cfg.cell_kind);
    require(!cfg.layer_sizes.empty(), "config: layer_sizes must not be empty");
    for (std::size_t n : cfg.layer_sizes) require(n >= 1, "config: layer size must be positive");
    require(cfg.theta_x >= 0.0 && std::isfinite(cfg.theta_x), "config: bad theta_x");
    require(cfg.theta_h >= 0.0 && std::isfinite(cfg.theta_h), "config: bad theta_h");
    require(cfg.epochs >= 1, "config: epochs must be positive");
    require(cfg.batch_size >= 1, "config: batch_size must be positive");
    require(cfg.learning_rate > 0.0 && std::isfinite(cfg.learning_rate),
            "config: bad learning_rate");
    require(cfg.optimizer == "adam" || cfg.optimizer == "sgd", "config: unknown optimizer");
    require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0, "config: beta1 out of range");
    require(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0, "config: beta2 out of range");
    require(cfg.adam_eps > 0.0, "config: adam_eps must be positive");
    require(cfg.weight_decay >= 0.0 && std::isfinite(cfg.weight_decay),
            "config: bad weight_decay");
    require(cfg.max_grad_norm >= 0.0 && std::isfinite(cfg.max_grad_norm),
            "config: bad max_grad_norm");
    require(cfg.precision == "fp64" || cfg.precision == "fp32", "config: unknown precision");
    validate(cfg.dataset);
}

nlohmann::json config_to_json(const TrainConfig& c) {
    return nlohmann::json{
        {"cell_kind", c.cell_kind},
        {"layer_sizes", c.layer_sizes},
        {"theta_x", c.theta_x},
        {"theta_h", c.theta_h},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"learning_rate", c.learning_rate},
        {"optimizer", c.optimizer},
        {"beta1", c.beta1},
        {"beta2", c.beta2},
        {"adam_eps", c.adam_eps},
        {"weight_decay", c.weight_decay},
        {"max_grad_norm", c.max_grad_norm},
        {"cosine_lr", c.cosine_lr},
        {"per_timestep_loss", c.per_timestep_loss},
        {"seed", c.seed},
        {"precision", c.precision},
        {"dense_oracle_grads", c.dense_oracle_grads},
        {"dataset",
         {{"task", task_kind_name(c.dataset.kind)},
          {"num_classes", c.dataset.num_classes},
          {"seq_len", c.dataset.seq_len},
          {"input_dim", c.dataset.input_dim},
          {"noise", c.dataset.noise},
          {"smoothness", c.dataset.smoothness},
          {"train_per_class", c.dataset.train_per_class},
          {"eval_per_class", c.dataset.eval_per_class}}},
    };
}

namespace {

template <class T>
void get_if_present(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    get_if_present(j, "cell_kind", c.cell_kind);
    get_if_present(j, "layer_sizes", c.layer_sizes);
    get_if_present(j, "theta_x", c.theta_x);
    get_if_present(j, "theta_h", c.theta_h);
    get_if_present(j, "epochs", c.epochs);
    get_if_present(j, "batch_size", c.batch_size);
    get_if_present(j, "learning_rate", c.learning_rate);
    get_if_present(j, "optimizer", c.optimizer);
    get_if_present(j, "beta1", c.beta1);
    get_if_present(j, "beta2", c.beta2);
    get_if_present(j, "adam_eps", c.adam_eps);
    get_if_present(j, "weight_decay", c.weight_decay);
    get_if_present(j, "max_grad_norm", c.max_grad_norm);
    get_if_present(j, "cosine_lr", c.cosine_lr);
    get_if_present(j, "per_timestep_loss", c.per_timestep_loss);
    get_if_present(j, "seed", c.seed);
    get_if_present(j, "precision", c.precision);
    get_if_present(j, "dense_oracle_grads", c.dense_oracle_grads);
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        std::string task = task_kind_name(c.dataset.kind);
        get_if_present(d, "task", task);
        c.dataset.kind = task_kind_from_name(task);
        get_if_present(d, "num_classes", c.dataset.num_classes);
        get_if_present(d, "seq_len", c.dataset.seq_len);
        get_if_present(d, "input_dim", c.dataset.input_dim);
        get_if_present(d, "noise", c.dataset.noise);
        get_if_present(d, "smoothness", c.dataset.smoothness);
        get_if_present(d, "train_per_class", c.dataset.train_per_class);
        get_if_present(d, "eval_per_class", c.dataset.eval_per_class);
    }
    return c;
}

TrainConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

}  // namespace deltanet
