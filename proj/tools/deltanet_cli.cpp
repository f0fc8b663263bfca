// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: train, verify-gradients, count-ops, simulate-accel,
// encode-demo, sweep-theta. Exit codes: 0 success, 1 validation error,
// 2 numeric failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "deltanet/accel_sim.hpp"
#include "deltanet/cost_model.hpp"
#include "deltanet/oracle.hpp"
#include "deltanet/trainer.hpp"
#include "deltanet/verify.hpp"

namespace {

using deltanet::Vector;
using nlohmann::json;

Vector parse_vector(const std::string& csv) {
    Vector out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.data.push_back(std::stod(item));
    return out;
}

std::vector<double> parse_doubles(const std::string& csv) {
    return parse_vector(csv).data;
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-" || path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write to " + path);
    out << text;
}

// ---------------------------------------------------------------------------

int cmd_train(const deltanet::TrainConfig& cfg, const std::string& metrics_path,
              const std::string& summary_path, const std::string& checkpoint_path) {
    deltanet::validate(cfg);
    deltanet::TrainResult result = deltanet::run_training(cfg);

    if (!metrics_path.empty()) {
        std::ostringstream os;
        deltanet::write_metrics_csv(os, result.metrics);
        write_text(metrics_path, os.str());
    }
    if (!checkpoint_path.empty()) write_text(checkpoint_path, result.checkpoint.dump(2) + "\n");

    const auto& last = result.metrics.back();
    json summary{{"epochs", result.metrics.size()},
                 {"final_train_loss", last.train_loss},
                 {"final_train_acc", last.train_acc},
                 {"final_eval_acc", last.eval_acc},
                 {"mean_occupancy_x", result.ledger.mean_occupancy_x()},
                 {"mean_occupancy_h", result.ledger.mean_occupancy_h()},
                 {"fp_macs", result.ledger.macs_fp},
                 {"bp_macs", result.ledger.macs_bp_input_grad + result.ledger.macs_bp_weight_grad},
                 {"weight_words", result.ledger.total_weight_words()},
                 {"config", deltanet::config_to_json(cfg)}};
    write_text(summary_path.empty() ? "-" : summary_path, summary.dump(2) + "\n");
    return 0;
}

int cmd_verify(std::size_t cases, bool with_fd, const std::string& json_path) {
    auto grid = deltanet::default_equivalence_grid(cases);
    double worst = 0;
    bool sparsity_ok = true;
    json case_rows = json::array();
    for (const auto& c : grid) {
        auto r = deltanet::run_equivalence_case(c);
        worst = std::max(worst, r.max_rel_discrepancy);
        sparsity_ok = sparsity_ok && r.sparsity_identity;
        case_rows.push_back({{"cell", deltanet::cell_kind_name(c.kind)},
                             {"n_in", c.n_in},
                             {"n_hidden", c.n_hidden},
                             {"timesteps", c.steps},
                             {"theta", c.theta},
                             {"seed", c.seed},
                             {"max_rel_discrepancy", r.max_rel_discrepancy},
                             {"sparsity_identity", r.sparsity_identity},
                             {"occupancy_x", r.mean_occupancy_x},
                             {"occupancy_h", r.mean_occupancy_h}});
    }

    json fd_rows = json::array();
    std::size_t fd_tested = 0, fd_passed = 0, fd_skipped = 0;
    if (with_fd) {
        for (deltanet::CellKind kind :
             {deltanet::CellKind::Rnn, deltanet::CellKind::Lstm, deltanet::CellKind::Gru}) {
            for (double theta : {0.05, 0.1}) {
                deltanet::VerifyCase c;
                c.kind = kind;
                c.n_in = 3;
                c.n_hidden = 4;
                c.steps = 6;
                c.theta = theta;
                c.seed = 17;
                auto r = deltanet::run_fd_check(c);
                fd_tested += r.tested;
                fd_passed += r.passed;
                fd_skipped += r.skipped;
                fd_rows.push_back({{"cell", deltanet::cell_kind_name(kind)},
                                   {"theta", theta},
                                   {"tested", r.tested},
                                   {"passed", r.passed},
                                   {"skipped", r.skipped},
                                   {"max_rel_err", r.max_rel_err}});
            }
        }
    }

    const bool equiv_ok = worst <= 1e-9 && sparsity_ok;
    const bool fd_ok = !with_fd || fd_passed * 100 >= fd_tested * 95;
    json report{{"cases", grid.size()},
                {"max_rel_discrepancy", worst},
                {"sparsity_identity", sparsity_ok},
                {"equivalence_pass", equiv_ok},
                {"per_case", case_rows}};
    if (with_fd) {
        report["finite_difference"] = {{"tested", fd_tested},
                                       {"passed", fd_passed},
                                       {"skipped", fd_skipped},
                                       {"pass", fd_ok},
                                       {"per_case", fd_rows}};
    }
    write_text(json_path.empty() ? "-" : json_path, report.dump(2) + "\n");
    return (equiv_ok && fd_ok) ? 0 : 2;
}

int cmd_count_ops(const std::string& cell, std::size_t n_in, std::size_t n_hidden,
                  std::size_t timesteps, double theta, std::uint64_t seed) {
    using namespace deltanet;
    const CellKind kind = parse_cell_kind(cell);
    Rng rng(seed);
    auto params = init_cell_params<double>(kind, n_in, n_hidden, rng);
    auto xs = make_test_stream(timesteps, n_in, rng);
    auto lg = make_loss_grads(timesteps, n_hidden, rng);

    OpLedger ledger;
    auto run = delta_forward(params, xs, theta, theta, &ledger);
    BackwardOptions opts;
    opts.want_input_grads = true;
    (void)delta_backward(params, run.tape, lg, &ledger, opts);

    const CellShape shape = CellShape::of(kind, n_in, n_hidden);
    const auto report = reconcile(ledger, shape, true);
    const double occ_x = ledger.mean_occupancy_x();
    const double occ_h = ledger.mean_occupancy_h();
    const auto fp = predict_fp_cost(n_in, n_hidden, shape.gates,
                                    (occ_x * n_in + occ_h * n_hidden) / (n_in + n_hidden));

    json out{{"cell", cell},
             {"n_in", n_in},
             {"n_hidden", n_hidden},
             {"timesteps", timesteps},
             {"theta", theta},
             {"mean_occupancy_x", occ_x},
             {"mean_occupancy_h", occ_h},
             {"dense_fp_macs_per_step", fp.dense_macs},
             {"measured", {{"fp_macs", ledger.macs_fp},
                           {"bp_input_grad_macs", ledger.macs_bp_input_grad},
                           {"bp_weight_grad_macs", ledger.macs_bp_weight_grad},
                           {"weight_words_read", ledger.weight_words_read},
                           {"weight_grad_words_written", ledger.weight_grad_words_written}}},
             {"reconcile", {{"exact_match", report.exact_match}, {"detail", report.detail}}}};
    std::cout << out.dump(2) << "\n";
    return report.exact_match ? 0 : 2;
}

int cmd_simulate(std::size_t size, double sparsity, const deltanet::AccelConfig& cfg,
                 bool do_sweep, const std::string& out_path) {
    using namespace deltanet;
    if (do_sweep) {
        const std::size_t sizes[] = {64, 128, 256};
        const double sparsities[] = {0.5, 0.8, 0.9};
        write_text(out_path, sweep_to_csv(sweep(sizes, sparsities, cfg)));
        return 0;
    }
    const std::size_t sizes[] = {size};
    const double sparsities[] = {sparsity};
    write_text(out_path, sweep_to_csv(sweep(sizes, sparsities, cfg)));
    return 0;
}

int cmd_encode_demo(const std::string& current_csv, const std::string& retained_csv,
                    double theta) {
    using namespace deltanet;
    Vector current = parse_vector(current_csv);
    Vector retained = retained_csv.empty() ? Vector(current.size()) : parse_vector(retained_csv);
    Vector retained_before = retained;
    auto enc = delta_encode(current, retained, theta);

    json out{{"theta", theta},
             {"current", current.data},
             {"retained", retained_before.data},
             {"mask", json::array()},
             {"nzil", enc.delta.nzil},
             {"nzvl", enc.delta.nzvl},
             {"occupancy", current.size() ? occupancy(enc.mask) : 0.0},
             {"retained_updated", retained.data}};
    for (std::size_t i = 0; i < enc.mask.size(); ++i) out["mask"].push_back(enc.mask.test(i) ? 1 : 0);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_sweep_theta(deltanet::TrainConfig base, const std::vector<double>& thetas,
                    const std::string& out_path) {
    std::ostringstream os;
    os << "theta,epoch,cum_fp_macs,cum_bp_macs,mean_occupancy_x,mean_occupancy_h,eval_metric\n";
    json summary = json::array();
    for (double theta : thetas) {
        deltanet::TrainConfig cfg = base;
        cfg.theta_x = theta;
        cfg.theta_h = theta;
        deltanet::validate(cfg);
        auto result = deltanet::run_training(cfg);
        for (const auto& m : result.metrics) {
            os << theta << ',' << m.epoch << ',' << m.cum_fp_macs << ',' << m.cum_bp_macs << ','
               << m.mean_occ_x << ',' << m.mean_occ_h << ',' << m.eval_acc << '\n';
        }
        const auto& last = result.metrics.back();
        summary.push_back({{"theta", theta},
                           {"train_acc", last.train_acc},
                           {"eval_acc", last.eval_acc},
                           {"total_macs", last.cum_fp_macs + last.cum_bp_macs}});
    }
    write_text(out_path, os.str());
    std::cerr << summary.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delta network training engine"};
    app.require_subcommand(1);

    // ---- train (flags mirror the TrainConfig field names) ----
    auto* train = app.add_subcommand("train", "train a delta network on a synthetic task");
    std::string config_path, metrics_path, summary_path, checkpoint_path;
    deltanet::TrainConfig cfg;
    std::string layer_sizes_csv, task_name;
    train->add_option("--config", config_path, "json config file");
    train->add_option("--metrics-csv", metrics_path, "per-epoch metrics csv path");
    train->add_option("--summary", summary_path, "json summary path (default stdout)");
    train->add_option("--checkpoint-out", checkpoint_path, "checkpoint json path");
    auto* o_cell = train->add_option("--cell_kind", cfg.cell_kind, "rnn | lstm | gru");
    auto* o_layers = train->add_option("--layer_sizes", layer_sizes_csv, "comma list, e.g. 64,64");
    auto* o_tx = train->add_option("--theta_x", cfg.theta_x);
    auto* o_th = train->add_option("--theta_h", cfg.theta_h);
    auto* o_epochs = train->add_option("--epochs", cfg.epochs);
    auto* o_batch = train->add_option("--batch_size", cfg.batch_size);
    auto* o_lr = train->add_option("--learning_rate", cfg.learning_rate);
    auto* o_opt = train->add_option("--optimizer", cfg.optimizer, "adam | sgd");
    auto* o_b1 = train->add_option("--beta1", cfg.beta1);
    auto* o_b2 = train->add_option("--beta2", cfg.beta2);
    auto* o_eps = train->add_option("--adam_eps", cfg.adam_eps);
    auto* o_wd = train->add_option("--weight_decay", cfg.weight_decay);
    auto* o_clip = train->add_option("--max_grad_norm", cfg.max_grad_norm);
    auto* o_cos = train->add_flag("--cosine_lr", cfg.cosine_lr);
    auto* o_ptl = train->add_flag("--per_timestep_loss", cfg.per_timestep_loss);
    auto* o_seed = train->add_option("--seed", cfg.seed);
    auto* o_prec = train->add_option("--precision", cfg.precision, "fp64 | fp32");
    auto* o_oracle = train->add_flag("--dense_oracle_grads", cfg.dense_oracle_grads);
    auto* o_task = train->add_option("--task", task_name, "delayed-recall | temporal-pattern");
    auto* o_nc = train->add_option("--num_classes", cfg.dataset.num_classes);
    auto* o_sl = train->add_option("--seq_len", cfg.dataset.seq_len);
    auto* o_id = train->add_option("--input_dim", cfg.dataset.input_dim);
    auto* o_noise = train->add_option("--noise", cfg.dataset.noise);
    auto* o_smooth = train->add_option("--smoothness", cfg.dataset.smoothness);
    auto* o_tpc = train->add_option("--train_per_class", cfg.dataset.train_per_class);
    auto* o_epc = train->add_option("--eval_per_class", cfg.dataset.eval_per_class);

    // ---- verify-gradients ----
    auto* verify = app.add_subcommand("verify-gradients",
                                      "sparse vs dense-masked equivalence and finite differences");
    std::size_t verify_cases = 200;
    bool no_fd = false;
    std::string verify_json;
    verify->add_option("--cases", verify_cases, "number of random configurations");
    verify->add_flag("--no-fd", no_fd, "skip the finite-difference suite");
    verify->add_option("--json", verify_json, "report path (default stdout)");

    // ---- count-ops ----
    auto* count = app.add_subcommand("count-ops", "instrumented MAC/memory accounting for one run");
    std::string count_cell = "lstm";
    std::size_t count_nin = 16, count_nh = 128, count_steps = 64;
    double count_theta = 0.1;
    std::uint64_t count_seed = 1;
    count->add_option("--cell", count_cell, "rnn | lstm | gru");
    count->add_option("--n-in", count_nin);
    count->add_option("--n-hidden", count_nh);
    count->add_option("--timesteps", count_steps);
    count->add_option("--theta", count_theta);
    count->add_option("--seed", count_seed);

    // ---- simulate-accel ----
    auto* sim = app.add_subcommand("simulate-accel", "cycle-approximate accelerator model");
    deltanet::AccelConfig accel;
    std::size_t sim_size = 256;
    double sim_sparsity = 0.9;
    bool sim_sweep = false;
    std::string sim_out;
    sim->add_option("--size", sim_size, "network size (input = hidden = timesteps)");
    sim->add_option("--sparsity", sim_sparsity);
    sim->add_option("--pes", accel.num_pes);
    sim->add_option("--overhead-cycles", accel.kernel_overhead_cycles);
    sim->add_option("--dram-latency", accel.dram_col_latency);
    sim->add_option("--burst-words", accel.dram_burst_words_per_cycle);
    sim->add_flag("--sweep", sim_sweep, "run the full size x sparsity grid");
    sim->add_option("--out", sim_out, "csv path (default stdout)");

    // ---- encode-demo ----
    auto* demo = app.add_subcommand("encode-demo", "show mask/NZIL/NZVL for one encode step");
    std::string demo_current, demo_retained;
    double demo_theta = 0.1;
    demo->add_option("--current", demo_current, "comma-separated values")->required();
    demo->add_option("--retained", demo_retained, "comma-separated values (default zeros)");
    demo->add_option("--theta", demo_theta);

    // ---- sweep-theta ----
    auto* sweep_cmd = app.add_subcommand("sweep-theta", "train across a threshold sweep");
    std::string sweep_thetas = "0,0.05,0.1,0.2";
    std::string sweep_config, sweep_out;
    sweep_cmd->add_option("--thetas", sweep_thetas, "comma-separated threshold list");
    sweep_cmd->add_option("--config", sweep_config, "json config file");
    sweep_cmd->add_option("--out", sweep_out, "csv path (default stdout)");
    auto* s_epochs = sweep_cmd->add_option("--epochs", cfg.epochs);
    auto* s_seed = sweep_cmd->add_option("--seed", cfg.seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            deltanet::TrainConfig file_cfg =
                config_path.empty() ? deltanet::TrainConfig{} : deltanet::config_from_json_file(config_path);
            // CLI flags override the file
            if (!o_cell->count()) cfg.cell_kind = file_cfg.cell_kind;
            if (o_layers->count()) {
                cfg.layer_sizes.clear();
                for (double v : parse_doubles(layer_sizes_csv))
                    cfg.layer_sizes.push_back(static_cast<std::size_t>(v));
            } else {
                cfg.layer_sizes = file_cfg.layer_sizes;
            }
            if (!o_tx->count()) cfg.theta_x = file_cfg.theta_x;
            if (!o_th->count()) cfg.theta_h = file_cfg.theta_h;
            if (!o_epochs->count()) cfg.epochs = file_cfg.epochs;
            if (!o_batch->count()) cfg.batch_size = file_cfg.batch_size;
            if (!o_lr->count()) cfg.learning_rate = file_cfg.learning_rate;
            if (!o_opt->count()) cfg.optimizer = file_cfg.optimizer;
            if (!o_b1->count()) cfg.beta1 = file_cfg.beta1;
            if (!o_b2->count()) cfg.beta2 = file_cfg.beta2;
            if (!o_eps->count()) cfg.adam_eps = file_cfg.adam_eps;
            if (!o_wd->count()) cfg.weight_decay = file_cfg.weight_decay;
            if (!o_clip->count()) cfg.max_grad_norm = file_cfg.max_grad_norm;
            if (!o_cos->count()) cfg.cosine_lr = file_cfg.cosine_lr;
            if (!o_ptl->count()) cfg.per_timestep_loss = file_cfg.per_timestep_loss;
            if (!o_seed->count()) cfg.seed = file_cfg.seed;
            if (!o_prec->count()) cfg.precision = file_cfg.precision;
            if (!o_oracle->count()) cfg.dense_oracle_grads = file_cfg.dense_oracle_grads;
            if (o_task->count())
                cfg.dataset.kind = deltanet::task_kind_from_name(task_name);
            else
                cfg.dataset.kind = file_cfg.dataset.kind;
            if (!o_nc->count()) cfg.dataset.num_classes = file_cfg.dataset.num_classes;
            if (!o_sl->count()) cfg.dataset.seq_len = file_cfg.dataset.seq_len;
            if (!o_id->count()) cfg.dataset.input_dim = file_cfg.dataset.input_dim;
            if (!o_noise->count()) cfg.dataset.noise = file_cfg.dataset.noise;
            if (!o_smooth->count()) cfg.dataset.smoothness = file_cfg.dataset.smoothness;
            if (!o_tpc->count()) cfg.dataset.train_per_class = file_cfg.dataset.train_per_class;
            if (!o_epc->count()) cfg.dataset.eval_per_class = file_cfg.dataset.eval_per_class;
            return cmd_train(cfg, metrics_path, summary_path, checkpoint_path);
        }
        if (verify->parsed()) return cmd_verify(verify_cases, !no_fd, verify_json);
        if (count->parsed())
            return cmd_count_ops(count_cell, count_nin, count_nh, count_steps, count_theta,
                                 count_seed);
        if (sim->parsed()) return cmd_simulate(sim_size, sim_sparsity, accel, sim_sweep, sim_out);
        if (demo->parsed()) return cmd_encode_demo(demo_current, demo_retained, demo_theta);
        if (sweep_cmd->parsed()) {
            deltanet::TrainConfig base = sweep_config.empty()
                                             ? deltanet::TrainConfig{}
                                             : deltanet::config_from_json_file(sweep_config);
            if (s_epochs->count()) base.epochs = cfg.epochs;
            if (s_seed->count()) base.seed = cfg.seed;
            return cmd_sweep_theta(base, parse_doubles(sweep_thetas), sweep_out);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
