#include "pinn/cli.hpp"
#include "pinn/data.hpp"
#include "pinn/errors.hpp"
#include "pinn/model_io.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pinn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "pinn_rul");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pinn_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

std::string slurp(const fs::path& p) { return data::read_file(p.string()); }

// Small synthetic run: narrow networks, few epochs.
json synth_config(const fs::path& out, int engines = 3) {
    return {{"dataset", "synthetic"},
            {"synthetic", {{"n_engines", engines}, {"seed", 5}, {"test_engines", 4}}},
            {"model", {{"x_hidden", {3, 3}}, {"rul_hidden", {5, 5}}, {"dyn_hidden", {5, 5}}, {"init", "xavier"}}},
            {"epochs", 2},
            {"batch_size", 64},
            {"split_seed", 3},
            {"init_seed", 4},
            {"output_dir", out.string()}};
}

fs::path write_config(const fs::path& dir, const json& j) {
    const auto p = dir / "config.json";
    write(p, j.dump(2));
    return p;
}

std::string cmapss_rows(int units, int length) {
    std::ostringstream os;
    for (int u = 1; u <= units; ++u) {
        for (int c = 1; c <= length; ++c) {
            os << u << ' ' << c;
            for (int k = 0; k < data::kFeatureColumns; ++k) os << ' ' << (k == 5 ? 0.01 * c * u : 1.0 + k);
            os << '\n';
        }
    }
    return os.str();
}

}  // namespace

TEST_CASE("parse_config: defaults, overrides and unknown keys") {
    const auto c = cli::parse_config(json::object());
    CHECK(c.dataset == cli::Dataset::fd001);
    CHECK(c.epochs == 30);
    CHECK(c.batch_size == 512);
    CHECK(c.model.init == net::InitScheme::standard_normal);

    const auto s = cli::parse_config(synth_config("x"));
    CHECK(s.dataset == cli::Dataset::synthetic);
    CHECK(s.synth.n_engines == 3);
    CHECK(s.synth_test_engines == 4);
    CHECK(s.synth_test_seed == 6);
    CHECK(s.model.x_hidden == std::vector<int>{3, 3});

    // The config echo round-trips.
    CHECK(cli::to_json(cli::parse_config(cli::to_json(s))) == cli::to_json(s));

    CHECK_THROWS(cli::parse_config(json{{"epoch", 3}}));
    CHECK_THROWS(cli::parse_config(json{{"model", {{"lamda", 1.0}}}}));
    CHECK_THROWS(cli::parse_config(json{{"dataset", "fd002"}}));
}

TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"frobnicate"}).code == cli::kUsage);
    CHECK(run({"train"}).code == cli::kUsage);
    CHECK(run({"train", "--config", "/nonexistent/config.json"}).code == cli::kUsage);

    const auto dir = scratch("usage");
    auto j = synth_config(dir / "out");
    j["batch_size"] = 0;
    const auto r = run({"train", "--config", write_config(dir, j).string()});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("batch_size") != std::string::npos);

    write(dir / "broken.json", "{ not json");
    CHECK(run({"check-data", "--config", (dir / "broken.json").string()}).code == cli::kUsage);
}

TEST_CASE("check-data: synthetic counts follow the closed form") {
    const auto dir = scratch("check_synth");
    const auto r = run({"check-data", "--config", write_config(dir, synth_config(dir / "out")).string()});
    CHECK(r.code == cli::kOk);

    data::SynthSpec spec;
    spec.n_engines = 7;
    spec.seed = 5;
    auto all = data::synth_generate(spec).trajectories;
    all.resize(3);
    std::ostringstream expected;
    expected << "3 engines, " << data::row_count(all) << " rows, " << data::augmented_count(all) << " augmented";
    CHECK(r.out.find(expected.str()) != std::string::npos);
    CHECK(r.out.find("selected features (4)") != std::string::npos);
}

TEST_CASE("check-data: fd001 layout") {
    const auto dir = scratch("check_fd");
    json j{{"dataset", "fd001"}, {"data_dir", dir.string()}};
    const auto cfg = write_config(dir, j).string();

    // Missing train file.
    auto r = run({"check-data", "--config", cfg});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("train_FD001.txt") != std::string::npos);

    // Parsable files whose counts differ from the reference set.
    write(dir / "train_FD001.txt", cmapss_rows(2, 40));
    write(dir / "test_FD001.txt", cmapss_rows(2, 10));
    write(dir / "RUL_FD001.txt", "5\n7\n");
    r = run({"check-data", "--config", cfg});
    CHECK(r.code == cli::kAssertFailed);
    CHECK(r.out.find("2 engines, 80 rows") != std::string::npos);
    CHECK(r.out.find("MISMATCH raw rows") != std::string::npos);

    write(dir / "train_FD001.txt", cmapss_rows(2, 40) + "1 41 2 3\n");
    r = run({"check-data", "--config", cfg});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("line 81") != std::string::npos);
}

TEST_CASE("train, eval, map, predict on a synthetic config") {
    const auto dir = scratch("pipeline");
    const auto out = dir / "out";
    const auto cfg = write_config(dir, synth_config(out)).string();

    auto r = run({"train", "--config", cfg});
    REQUIRE_MESSAGE(r.code == cli::kOk, r.err);
    REQUIRE(fs::exists(out / "model.bin"));
    const auto report = json::parse(slurp(out / "training_report.json"));
    CHECK(report.at("epochs").size() == 2);
    CHECK(report.at("init_seed") == 4);
    CHECK(report.at("split_seed") == 3);
    CHECK(report.contains("config"));

    // Same config twice: byte-identical model file.
    const auto first = slurp(out / "model.bin");
    REQUIRE(run({"train", "--config", cfg}).code == cli::kOk);
    CHECK(slurp(out / "model.bin") == first);

    // Seed flags override the config.
    REQUIRE(run({"train", "--config", cfg, "--out", (dir / "other").string(), "--seed-init", "5"}).code == cli::kOk);
    CHECK(slurp(dir / "other" / "model.bin") != first);
    CHECK(io::load_model((dir / "other" / "model.bin").string()).init_seed == 5);

    // save -> load -> save round trip.
    const auto mf = io::decode_model(first);
    CHECK(io::encode_model(mf) == first);
    CHECK(mf.init_seed == 4);
    CHECK(mf.split_seed == 3);

    r = run({"eval", "--config", cfg});
    REQUIRE_MESSAGE(r.code == cli::kOk, r.err);
    CHECK(r.out.find("test RMSE") != std::string::npos);
    const auto ev = json::parse(slurp(out / "eval.json"));
    CHECK(ev.at("rmse_test").is_number());
    CHECK(ev.at("rmse_val").is_number());
    CHECK(ev.at("epochs").size() == 2);
    const auto csv = slurp(out / "pred_vs_true.csv");
    CHECK(csv.rfind("engine,rul_true,rul_pred\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

    r = run({"map", "--config", cfg, "--which", "train"});
    REQUIRE(r.code == cli::kOk);
    const auto cfg_parsed = cli::parse_config(synth_config(out));
    const auto loaded = cli::load_data(cfg_parsed);
    const auto train_map = slurp(out / "latent_map_train.csv");
    CHECK(static_cast<std::size_t>(std::count(train_map.begin(), train_map.end(), '\n')) ==
          data::augmented_count(loaded.train) + 1);
    REQUIRE(run({"map", "--config", cfg}).code == cli::kOk);
    const auto test_map = slurp(out / "latent_map_test.csv");
    CHECK(static_cast<std::size_t>(std::count(test_map.begin(), test_map.end(), '\n')) ==
          data::row_count(loaded.test) + 1);
    CHECK(run({"map", "--config", cfg, "--which", "both"}).code == cli::kUsage);

    const auto model = (out / "model.bin").string();
    r = run({"predict", "--model", model, "--oc", "0.1,0.2,0.3,0.4", "--t", "0,1,2", "--csv"});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.rfind("t,x,dx_dt,rul_pred\n0,", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 4);

    r = run({"predict", "--model", model, "--oc", "0.1,0.2,0.3,0.4"});
    REQUIRE(r.code == cli::kOk);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 2);

    r = run({"predict", "--model", model, "--oc", "0.1,0.2", "--t", "0"});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("expected 4") != std::string::npos);
    CHECK(run({"predict", "--oc", "1,2,3,4"}).code == cli::kUsage);

    // A config whose model section disagrees with the file.
    auto other = synth_config(out);
    other["model"]["x_hidden"] = {4};
    const auto bad_cfg = dir / "bad.json";
    write(bad_cfg, other.dump());
    CHECK(run({"eval", "--config", bad_cfg.string()}).code == cli::kUsage);
}

TEST_CASE("eval: fresh-init model, truth mismatch and empty map") {
    const auto dir = scratch("fd_eval");
    write(dir / "train_FD001.txt", cmapss_rows(2, 40));
    write(dir / "test_FD001.txt", "");
    write(dir / "RUL_FD001.txt", "");
    json j{{"dataset", "fd001"},
           {"data_dir", dir.string()},
           {"epochs", 0},
           {"batch_size", 16},
           {"output_dir", (dir / "out").string()}};
    const auto cfg = write_config(dir, j).string();
    auto r = run({"train", "--config", cfg});
    REQUIRE_MESSAGE(r.code == cli::kOk, r.err);

    r = run({"map", "--config", cfg, "--which", "test"});
    REQUIRE(r.code == cli::kOk);
    CHECK(slurp(dir / "out" / "latent_map_test.csv") == "x,dx_dt,rul_pred,rul_true\n");

    write(dir / "test_FD001.txt", cmapss_rows(2, 10));
    write(dir / "RUL_FD001.txt", "5\n7\n");
    r = run({"eval", "--config", cfg});
    CHECK(r.code == cli::kOk);

    write(dir / "RUL_FD001.txt", "5\n");
    CHECK(run({"eval", "--config", cfg}).code == cli::kUsage);
}

TEST_CASE("train: non-finite cost exits 3") {
    const auto dir = scratch("numeric");
    auto j = synth_config(dir / "out");
    j["optimizer"] = {{"lr", 1e300}};
    const auto r = run({"train", "--config", write_config(dir, j).string()});
    CHECK(r.code == cli::kNumeric);
    CHECK(r.err.find("epoch") != std::string::npos);
}

TEST_CASE("model file: malformed input") {
    const auto dir = scratch("modelfile");
    write(dir / "bad.bin", "PINN-RUL-MODEL\nformat-version 9\n");
    const auto r = run({"predict", "--model", (dir / "bad.bin").string(), "--oc", "1"});
    CHECK(r.code == cli::kUsage);
    CHECK_THROWS_AS(io::decode_model("garbage"), parse_error);
}
