// cli.hpp - run configuration and the subcommands of the pinn_rul tool.
//
// Exit codes: 0 success, 1 assertion/count failure, 2 usage/config/data
// error, 3 numeric failure.
#pragma once

#include "pinn/data.hpp"
#include "pinn/model.hpp"
#include "pinn/model_io.hpp"
#include "pinn/net.hpp"
#include "pinn/optim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pinn::cli {

enum ExitCode : int { kOk = 0, kAssertFailed = 1, kUsage = 2, kNumeric = 3 };

enum class Dataset { fd001, synthetic };

struct ModelSection {
    double lambda = 1.0;
    double t_scale = 30.0;
    net::InitScheme init = net::InitScheme::standard_normal;
    std::vector<int> x_hidden{3, 3, 3, 3, 3};
    std::vector<int> rul_hidden{10, 10, 10, 10, 10};
    std::vector<int> dyn_hidden{10, 10, 10, 10, 10};
    net::Activation x_activation = net::Activation::tanh;
    net::Activation rul_activation = net::Activation::tanh;
    net::Activation dyn_activation = net::Activation::relu;
};

struct RunConfig {
    Dataset dataset = Dataset::fd001;
    std::string data_dir = ".";
    data::SynthSpec synth;
    int synth_test_engines = 20;        // held-out engines, drawn after the training ones
    std::uint64_t synth_test_seed = 2;  // cut points of the held-out engines
    ModelSection model;
    optim::NadamConfig optimizer;
    int horizon = data::kDefaultHorizon;
    int epochs = 30;
    int batch_size = 512;
    std::uint64_t split_seed = 0;
    std::uint64_t init_seed = 0;
    std::string output_dir = "out";

    void validate() const;
    model::PinnConfig pinn_config(int d_oc) const;
};

RunConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

struct LoadedData {
    std::vector<data::EngineTrajectory> train;
    std::vector<data::EngineTrajectory> test;
    std::vector<double> test_truth;
};

// Reads train/test/truth files (fd001) or generates them (synthetic).
LoadedData load_data(const RunConfig& config);

struct TrainedRun {
    io::ModelFile file;
    optim::TrainingReport report;
};

// Feature selection, augmentation, normalization and training on `data.train`.
TrainedRun train_run(const RunConfig& config, const LoadedData& data);

nlohmann::json report_to_json(const optim::TrainingReport& report);

// Entry point; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pinn::cli
