#include "pinn/cli.hpp"

#include "pinn/errors.hpp"
#include "pinn/model_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace pinn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Known FD001 training-file figures.
constexpr std::size_t kFd001Rows = 20631;
constexpr std::size_t kFd001Augmented = 593061;

// Raised for anything that maps to exit code 2.
class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

template <typename T>
void read_opt(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw usage_error("config: unknown key '" + k + "' in " + where);
    }
}

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw usage_error("cannot write " + path.string());
    out << text;
}

std::string read_required(const fs::path& path) {
    if (!fs::exists(path)) throw usage_error("missing file: " + path.string());
    return data::read_file(path.string());
}

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::string tok;
    auto flush = [&] {
        if (tok.empty()) return;
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size() || !std::isfinite(v)) throw usage_error("bad number '" + tok + "'");
        out.push_back(v);
        tok.clear();
    };
    for (char ch : text) {
        if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
            flush();
        } else {
            tok.push_back(ch);
        }
    }
    flush();
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
    if (epochs < 0) throw usage_error("config: epochs must be >= 0");
    if (dataset == Dataset::synthetic && synth_test_engines < 1) {
        throw usage_error("config: synthetic test_engines must be >= 1");
    }
    if (batch_size < 1) throw usage_error("config: batch_size must be >= 1");
    if (horizon < 0) throw usage_error("config: horizon must be >= 0");
    try {
        optimizer.validate();
        if (dataset == Dataset::synthetic) synth.validate();
        pinn_config(1).validate();
    } catch (const contract_error& e) {
        throw usage_error(std::string("config: ") + e.what());
    }
    if (dataset == Dataset::fd001 && !fs::is_directory(data_dir)) {
        throw usage_error("config: data_dir does not exist: " + data_dir);
    }
}

model::PinnConfig RunConfig::pinn_config(int d_oc) const {
    model::PinnConfig c;
    c.d_oc = d_oc;
    c.x_spec = {widths(d_oc + 1, model.x_hidden, 1), model.x_activation, net::Activation::linear};
    c.rul_spec = {widths(2, model.rul_hidden, 1), model.rul_activation, net::Activation::linear};
    c.dyn_spec = {widths(2, model.dyn_hidden, 1), model.dyn_activation, net::Activation::linear};
    c.lambda = model.lambda;
    c.t_scale = model.t_scale;
    return c;
}

RunConfig parse_config(const json& j) {
    RunConfig c;
    try {
        reject_unknown(j,
                       {"dataset", "data_dir", "synthetic", "model", "optimizer", "horizon", "epochs",
                        "batch_size", "split_seed", "init_seed", "output_dir"},
                       "top level");
        if (j.contains("dataset")) {
            const auto name = j.at("dataset").get<std::string>();
            if (name == "fd001") {
                c.dataset = Dataset::fd001;
            } else if (name == "synthetic") {
                c.dataset = Dataset::synthetic;
            } else {
                throw usage_error("config: dataset must be 'fd001' or 'synthetic'");
            }
        }
        read_opt(j, "data_dir", c.data_dir);
        if (j.contains("synthetic")) {
            const auto& s = j.at("synthetic");
            reject_unknown(s, {"n_engines", "min_life", "max_life", "n_sensors", "noise_std", "seed", "test_engines",
                                "test_seed"},
                           "synthetic");
            read_opt(s, "n_engines", c.synth.n_engines);
            read_opt(s, "min_life", c.synth.min_life);
            read_opt(s, "max_life", c.synth.max_life);
            read_opt(s, "n_sensors", c.synth.n_sensors);
            read_opt(s, "noise_std", c.synth.noise_std);
            read_opt(s, "seed", c.synth.seed);
            c.synth_test_seed = c.synth.seed + 1;
            read_opt(s, "test_seed", c.synth_test_seed);
            c.synth_test_engines = c.synth.n_engines;
            read_opt(s, "test_engines", c.synth_test_engines);
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            reject_unknown(m,
                           {"lambda", "t_scale", "init", "x_hidden", "rul_hidden", "dyn_hidden", "x_activation",
                            "rul_activation", "dyn_activation"},
                           "model");
            read_opt(m, "lambda", c.model.lambda);
            read_opt(m, "t_scale", c.model.t_scale);
            if (m.contains("init")) c.model.init = net::parse_init_scheme(m.at("init").get<std::string>());
            read_opt(m, "x_hidden", c.model.x_hidden);
            read_opt(m, "rul_hidden", c.model.rul_hidden);
            read_opt(m, "dyn_hidden", c.model.dyn_hidden);
            if (m.contains("x_activation")) {
                c.model.x_activation = net::parse_activation(m.at("x_activation").get<std::string>());
            }
            if (m.contains("rul_activation")) {
                c.model.rul_activation = net::parse_activation(m.at("rul_activation").get<std::string>());
            }
            if (m.contains("dyn_activation")) {
                c.model.dyn_activation = net::parse_activation(m.at("dyn_activation").get<std::string>());
            }
        }
        if (j.contains("optimizer")) {
            const auto& o = j.at("optimizer");
            reject_unknown(o, {"lr", "beta1", "beta2", "eps"}, "optimizer");
            read_opt(o, "lr", c.optimizer.lr);
            read_opt(o, "beta1", c.optimizer.beta1);
            read_opt(o, "beta2", c.optimizer.beta2);
            read_opt(o, "eps", c.optimizer.eps);
        }
        read_opt(j, "horizon", c.horizon);
        read_opt(j, "epochs", c.epochs);
        read_opt(j, "batch_size", c.batch_size);
        read_opt(j, "split_seed", c.split_seed);
        read_opt(j, "init_seed", c.init_seed);
        read_opt(j, "output_dir", c.output_dir);
    } catch (const json::exception& e) {
        throw usage_error(std::string("config: ") + e.what());
    } catch (const contract_error& e) {
        throw usage_error(std::string("config: ") + e.what());
    }
    return c;
}

json to_json(const RunConfig& c) {
    json j;
    j["dataset"] = c.dataset == Dataset::fd001 ? "fd001" : "synthetic";
    j["data_dir"] = c.data_dir;
    j["synthetic"] = {{"n_engines", c.synth.n_engines}, {"min_life", c.synth.min_life},
                      {"max_life", c.synth.max_life},   {"n_sensors", c.synth.n_sensors},
                      {"noise_std", c.synth.noise_std}, {"seed", c.synth.seed},
                      {"test_engines", c.synth_test_engines}, {"test_seed", c.synth_test_seed}};
    j["model"] = {{"lambda", c.model.lambda},
                  {"t_scale", c.model.t_scale},
                  {"init", net::to_string(c.model.init)},
                  {"x_hidden", c.model.x_hidden},
                  {"rul_hidden", c.model.rul_hidden},
                  {"dyn_hidden", c.model.dyn_hidden},
                  {"x_activation", net::to_string(c.model.x_activation)},
                  {"rul_activation", net::to_string(c.model.rul_activation)},
                  {"dyn_activation", net::to_string(c.model.dyn_activation)}};
    j["optimizer"] = {{"lr", c.optimizer.lr},
                      {"beta1", c.optimizer.beta1},
                      {"beta2", c.optimizer.beta2},
                      {"eps", c.optimizer.eps}};
    j["horizon"] = c.horizon;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["split_seed"] = c.split_seed;
    j["init_seed"] = c.init_seed;
    j["output_dir"] = c.output_dir;
    return j;
}

LoadedData load_data(const RunConfig& config) {
    LoadedData d;
    if (config.dataset == Dataset::fd001) {
        const fs::path dir(config.data_dir);
        d.train = data::parse_cmapss(read_required(dir / "train_FD001.txt"));
        d.test = data::parse_cmapss(read_required(dir / "test_FD001.txt"));
        d.test_truth = data::parse_rul_truth(read_required(dir / "RUL_FD001.txt"));
    } else {
        // One population: the first n_engines are training engines, the rest are held out.
        auto spec = config.synth;
        spec.n_engines += config.synth_test_engines;
        auto all = data::synth_generate(spec).trajectories;
        std::vector<data::EngineTrajectory> held_out(all.begin() + config.synth.n_engines, all.end());
        all.resize(static_cast<std::size_t>(config.synth.n_engines));
        d.train = std::move(all);
        auto [test, truth] = data::truncate_for_test(held_out, config.synth_test_seed);
        d.test = std::move(test);
        d.test_truth = std::move(truth);
    }
    return d;
}

TrainedRun train_run(const RunConfig& c, const LoadedData& d) {
    const auto columns = data::select_features(d.train);
    const auto samples = data::augment(d.train, columns, c.horizon);
    if (static_cast<std::size_t>(c.batch_size) > samples.size()) {
        throw usage_error("batch_size exceeds dataset size " + std::to_string(samples.size()));
    }
    const auto norm = data::fit_norm(samples, columns);
    const auto pinn = c.pinn_config(static_cast<int>(columns.size()));
    auto start = model::PinnModel::create(pinn, norm, c.model.init, c.init_seed);

    optim::TrainOptions opts;
    opts.split_seed = c.split_seed;
    opts.epochs = c.epochs;
    opts.batch_size = c.batch_size;
    opts.nadam = c.optimizer;
    TrainedRun run;
    auto trained = optim::train(std::move(start), samples, opts, c.init_seed, run.report);
    run.file = {std::move(trained), c.model.init, c.init_seed, c.split_seed};
    return run;
}

json report_to_json(const optim::TrainingReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"train_total", e.train_total},
                          {"train_mse", e.train_mse},
                          {"train_pde", e.train_pde},
                          {"val_total", e.val_total},
                          {"val_mse", e.val_mse},
                          {"val_pde", e.val_pde}});
    }
    return {{"epochs", epochs},
            {"final_rmse_val", r.final_rmse_val},
            {"split_seed", r.split_seed},
            {"init_seed", r.init_seed},
            {"epoch_count", r.epoch_count},
            {"batch_size", r.batch_size},
            {"train_size", r.train_size},
            {"val_size", r.val_size},
            {"wall_time", r.wall_time}};
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Options {
    std::string config_path;
    std::string model_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_init;
    std::optional<std::uint64_t> seed_split;
    std::optional<int> epochs;
    std::optional<int> batch;
    bool csv = false;
    std::string which = "test";
    std::string oc;
    std::string oc_file;
    std::string t_list = "0";
};

RunConfig load_config(const Options& o) {
    if (o.config_path.empty()) throw usage_error("--config is required");
    json j;
    try {
        j = json::parse(read_required(o.config_path));
    } catch (const json::parse_error& e) {
        throw usage_error("config " + o.config_path + ": " + e.what());
    }
    RunConfig c = parse_config(j);
    if (o.seed_init) c.init_seed = *o.seed_init;
    if (o.seed_split) c.split_seed = *o.seed_split;
    if (o.epochs) c.epochs = *o.epochs;
    if (o.batch) c.batch_size = *o.batch;
    if (!o.out_dir.empty()) c.output_dir = o.out_dir;
    c.validate();
    return c;
}

fs::path ensure_out_dir(const RunConfig& c) {
    fs::path dir(c.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw usage_error("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::string model_path(const Options& o, const RunConfig* c) {
    if (!o.model_path.empty()) return o.model_path;
    if (c != nullptr) return (fs::path(c->output_dir) / "model.bin").string();
    throw usage_error("--model is required");
}

io::ModelFile load_model_checked(const std::string& path) {
    if (!fs::exists(path)) throw usage_error("missing model file: " + path);
    return io::load_model(path);
}

void check_model_matches(const io::ModelFile& mf, const RunConfig& c) {
    const auto expected = c.pinn_config(mf.model.config.d_oc);
    if (!(expected == mf.model.config)) {
        throw usage_error("model file network specs do not match the config's model section");
    }
}

int cmd_check_data(const Options& o, std::ostream& out) {
    const RunConfig c = load_config(o);
    const LoadedData d = load_data(c);
    const auto columns = data::select_features(d.train);
    const std::size_t rows = data::row_count(d.train);
    const std::size_t augmented = data::augment(d.train, columns, c.horizon).size();
    const std::size_t closed_form = data::augmented_count(d.train, c.horizon);

    out << d.train.size() << " engines, " << rows << " rows, " << augmented << " augmented\n";
    out << "test: " << d.test.size() << " engines, " << data::row_count(d.test) << " rows, " << d.test_truth.size()
        << " truth values\n";
    out << "selected features (" << columns.size() << "):";
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i == 0 ? " " : ",") << data::column_name(columns[i]);
    out << '\n';

    bool ok = augmented == closed_form;
    if (!ok) out << "MISMATCH augmented " << augmented << " != closed form " << closed_form << '\n';
    if (d.test_truth.size() != d.test.size()) {
        out << "MISMATCH truth values " << d.test_truth.size() << " != test engines " << d.test.size() << '\n';
        ok = false;
    }
    if (c.dataset == Dataset::fd001 && c.horizon == data::kDefaultHorizon) {
        if (rows != kFd001Rows) {
            out << "MISMATCH raw rows: expected " << kFd001Rows << ", got " << rows << '\n';
            ok = false;
        }
        if (augmented != kFd001Augmented) {
            out << "MISMATCH augmented: expected " << kFd001Augmented << ", got " << augmented << '\n';
            ok = false;
        }
    }
    return ok ? kOk : kAssertFailed;
}

int cmd_train(const Options& o, std::ostream& out) {
    const RunConfig c = load_config(o);
    const auto [file, report] = train_run(c, load_data(c));
    const fs::path dir = ensure_out_dir(c);
    io::save_model((dir / "model.bin").string(), file);
    json rep = report_to_json(report);
    rep["config"] = to_json(c);
    write_text(dir / "training_report.json", rep.dump(2) + "\n");

    out << "trained on " << report.train_size << " samples, validated on " << report.val_size << '\n';
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        const auto& l = report.epochs[e];
        out << "epoch " << e + 1 << ": train " << fmt9(l.train_total) << " (mse " << fmt9(l.train_mse) << ", pde "
            << fmt9(l.train_pde) << "), val " << fmt9(l.val_total) << '\n';
    }
    out << "validation RMSE " << fmt9(report.final_rmse_val) << " cycles, " << fmt9(report.wall_time) << " s\n";
    out << "wrote " << (dir / "model.bin").string() << '\n';
    return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    const RunConfig c = load_config(o);
    const auto path = model_path(o, &c);
    const auto mf = load_model_checked(path);
    check_model_matches(mf, c);
    const LoadedData d = load_data(c);
    if (d.test_truth.size() != d.test.size()) {
        throw usage_error("truth count " + std::to_string(d.test_truth.size()) + " != test engine count " +
                          std::to_string(d.test.size()));
    }
    const auto res = model::rmse_eval(mf.model, d.test, d.test_truth);

    json report;
    report["rmse_test"] = res.rmse;
    report["engines"] = res.engines.size();
    report["split_seed"] = mf.split_seed;
    report["init_seed"] = mf.init_seed;
    report["config"] = to_json(c);
    const fs::path training_report = fs::path(path).parent_path() / "training_report.json";
    if (fs::exists(training_report)) {
        const auto tr = json::parse(data::read_file(training_report.string()));
        report["rmse_val"] = tr.value("final_rmse_val", 0.0);
        report["epochs"] = tr.value("epochs", json::array());
    } else {
        report["rmse_val"] = nullptr;
        report["epochs"] = json::array();
    }
    report["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path dir = ensure_out_dir(c);
    write_text(dir / "eval.json", report.dump(2) + "\n");
    write_text(dir / "pred_vs_true.csv", model::predictions_csv(res.engines));
    out << "test RMSE " << fmt9(res.rmse) << " cycles over " << res.engines.size() << " engines\n";
    return kOk;
}

int cmd_map(const Options& o, std::ostream& out) {
    const RunConfig c = load_config(o);
    const auto mf = load_model_checked(model_path(o, &c));
    check_model_matches(mf, c);
    const LoadedData d = load_data(c);
    const auto& columns = mf.model.norm.columns;

    std::vector<data::AugmentedSample> samples;
    if (o.which == "train") {
        samples = data::augment(d.train, columns, c.horizon);
    } else if (o.which == "test") {
        if (d.test_truth.size() != d.test.size()) throw usage_error("truth count does not match test engines");
        // Every recorded test cycle at t = 0; truth extends back from the last cycle.
        for (std::size_t i = 0; i < d.test.size(); ++i) {
            const auto& traj = d.test[i];
            for (const auto& row : traj.rows) {
                data::AugmentedSample s;
                for (int col : columns) s.oc.push_back(row.values.at(col));
                s.t = 0;
                s.rul = static_cast<int>(std::lround(d.test_truth[i])) + traj.length() - row.cycle;
                s.unit = traj.unit;
                s.cycle = row.cycle;
                samples.push_back(std::move(s));
            }
        }
    } else {
        throw usage_error("--which must be 'train' or 'test'");
    }

    const auto points = model::latent_map(mf.model, samples);
    const fs::path dir = ensure_out_dir(c);
    const fs::path file = dir / ("latent_map_" + o.which + ".csv");
    write_text(file, model::latent_map_csv(points));
    out << "wrote " << points.size() << " rows to " << file.string() << '\n';
    return kOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
    if (o.model_path.empty()) throw usage_error("--model is required");
    const auto mf = load_model_checked(o.model_path);
    std::vector<double> oc;
    if (!o.oc_file.empty()) {
        oc = parse_number_list(read_required(o.oc_file));
    } else if (!o.oc.empty()) {
        oc = parse_number_list(o.oc);
    } else {
        throw usage_error("one of --oc or --oc-file is required");
    }
    const int d_oc = mf.model.config.d_oc;
    if (oc.size() != static_cast<std::size_t>(d_oc)) {
        throw usage_error("expected " + std::to_string(d_oc) + " OC values (d_oc), got " + std::to_string(oc.size()));
    }
    const auto ts = parse_number_list(o.t_list);
    if (ts.empty()) throw usage_error("--t needs at least one time offset");
    for (double t : ts) {
        if (t < 0.0) throw usage_error("time offsets must be >= 0");
    }
    const auto sweep = model::horizon_sweep(mf.model, oc, ts);
    if (o.csv) {
        out << "t,x,dx_dt,rul_pred\n";
        for (const auto& p : sweep) {
            out << fmt9(p.t) << ',' << fmt9(p.x) << ',' << fmt9(p.dx_dt) << ',' << fmt9(p.rul_pred) << '\n';
        }
    } else {
        char line[160];
        std::snprintf(line, sizeof line, "%8s %14s %14s %14s\n", "t", "x", "dx_dt", "rul_pred");
        out << line;
        for (const auto& p : sweep) {
            std::snprintf(line, sizeof line, "%8g %14.6g %14.6g %14.6g\n", p.t, p.x, p.dx_dt, p.rul_pred);
            out << line;
        }
    }
    return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Latent-variable RUL prognosis with a learned dynamics penalty", "pinn_rul"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "Run configuration (JSON)");
        sub->add_option("--out", o.out_dir, "Output directory (overrides config)");
    };
    auto add_training = [&](CLI::App* sub) {
        sub->add_option("--seed-init", o.seed_init, "Weight initialization seed");
        sub->add_option("--seed-split", o.seed_split, "Split and batch-order seed");
        sub->add_option("--epochs", o.epochs, "Epoch count");
        sub->add_option("--batch", o.batch, "Minibatch size");
    };

    auto* check = app.add_subcommand("check-data", "Parse the data files and report counts");
    add_common(check);
    auto* train = app.add_subcommand("train", "Train a model and write model.bin");
    add_common(train);
    add_training(train);
    auto* eval = app.add_subcommand("eval", "Test-set RMSE at each engine's last cycle");
    add_common(eval);
    eval->add_option("--model", o.model_path, "Model file (default <out>/model.bin)");
    auto* map = app.add_subcommand("map", "Export the latent map CSV");
    add_common(map);
    map->add_option("--model", o.model_path, "Model file (default <out>/model.bin)");
    map->add_option("--which", o.which, "train or test")->check(CLI::IsMember({"train", "test"}));
    auto* predict = app.add_subcommand("predict", "RUL at several time horizons from one OC snapshot");
    predict->add_option("--model", o.model_path, "Model file")->required();
    predict->add_option("--oc", o.oc, "Comma-separated raw OC values");
    predict->add_option("--oc-file", o.oc_file, "File with raw OC values");
    predict->add_option("--t", o.t_list, "Comma-separated time offsets in cycles");
    predict->add_flag("--csv", o.csv, "Machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (check->parsed()) return cmd_check_data(o, out);
        if (train->parsed()) return cmd_train(o, out);
        if (eval->parsed()) return cmd_eval(o, out);
        if (map->parsed()) return cmd_map(o, out);
        if (predict->parsed()) return cmd_predict(o, out);
    } catch (const optim::training_error& e) {
        err << "error: " << e.what() << " (epoch " << e.epoch() << ", batch " << e.batch() << ")\n";
        return kNumeric;
    } catch (const numeric_error& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    } catch (const usage_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const parse_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const contract_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace pinn::cli
