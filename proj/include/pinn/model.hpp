// model.hpp - latent-variable RUL model with a learned degradation dynamics
// penalty.
//
// Three networks are chained:
//   x    = LatentNet(normalize(oc), tau)          tau = t / t_scale
//   rul  = RulNet(x, tau)                         normalized by rul_max
//   dyn  = DynamicsNet(dx/dtau, drul/dx)
// and tied together by the residual
//   f = drul/dtau - dyn,  drul/dtau = drul/dx * dx/dtau + d(RulNet)/dtau
// whose mean square is added to the label MSE.
#pragma once

#include "pinn/data.hpp"
#include "pinn/graph.hpp"
#include "pinn/net.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pinn::model {

struct PinnConfig {
    int d_oc = 1;
    net::MlpSpec x_spec;
    net::MlpSpec rul_spec;
    net::MlpSpec dyn_spec;
    double lambda = 1.0;
    double t_scale = 30.0;

    // Latent net [d_oc+1, 3x5, 1] tanh; RUL net [2, 10x5, 1] tanh;
    // dynamics net [2, 10x5, 1] relu; all with linear outputs.
    static PinnConfig defaults(int d_oc);
    void validate() const;

    bool operator==(const PinnConfig&) const = default;
};

struct PinnModel {
    PinnConfig config;
    net::MlpParams x_params;
    net::MlpParams rul_params;
    net::MlpParams dyn_params;
    data::NormStats norm;

    // Draws the three parameter sets from one seed.
    static PinnModel create(const PinnConfig& config, const data::NormStats& norm, net::InitScheme scheme,
                            std::uint64_t seed);
    void validate() const;
};

// Parameter-shaped gradient buffers for the three networks.
struct ModelGrads {
    net::MlpParams x;
    net::MlpParams rul;
    net::MlpParams dyn;
};

struct CostBreakdown {
    double mse = 0.0;
    double pde = 0.0;
    double total = 0.0;
    ModelGrads grads;
};

struct ResidualInputs {
    double x = 0.0;
    double dx_dt = 0.0;
    double drul_dx = 0.0;
    double drul_dt = 0.0;
};

struct LatentMapPoint {
    double x = 0.0;
    double dx_dt = 0.0;
    double rul_pred = 0.0;
    std::optional<double> rul_true;
};

struct HorizonPoint {
    double t = 0.0;
    double x = 0.0;
    double dx_dt = 0.0;
    double rul_pred = 0.0;
};

struct EnginePrediction {
    int engine = 0;
    double rul_true = 0.0;
    double rul_pred = 0.0;
};

struct RmseResult {
    double rmse = 0.0;
    std::vector<EnginePrediction> engines;
};

// A raw (unnormalized) query point: OC features and time offset in cycles.
struct Query {
    std::vector<double> oc;
    double t = 0.0;
};

// Node handles of one batch graph; exposed so a test can substitute the
// dynamics term.
struct ResidualNodes {
    graph::NodeId x;
    graph::NodeId dx_dt;
    graph::NodeId rul;
    graph::NodeId drul_dx;
    graph::NodeId drul_dt;
};

// Returns the node standing in for the dynamics network output (1 x N).
using DynamicsOverride = std::function<graph::NodeId(graph::Graph&, const ResidualNodes&)>;

// Per-point outputs of a batch, normalized units except where noted.
struct PointOutputs {
    Eigen::RowVectorXd x;
    Eigen::RowVectorXd dx_dt;
    Eigen::RowVectorXd rul;  // normalized
    Eigen::RowVectorXd drul_dx;
    Eigen::RowVectorXd drul_dt;
    Eigen::RowVectorXd dynamics;
    Eigen::RowVectorXd residual;
};

// The full cost graph for a fixed batch width.
class BatchGraph {
public:
    BatchGraph(const PinnConfig& config, Eigen::Index batch, DynamicsOverride dynamics = {});

    Eigen::Index batch() const { return batch_; }
    const PinnConfig& config() const { return config_; }

    void bind(const PinnModel& model);
    // oc: d_oc x N normalized, tau: 1 x N, labels: 1 x N normalized.
    void eval(const Eigen::MatrixXd& oc, const Eigen::RowVectorXd& tau, const Eigen::RowVectorXd& labels);
    ModelGrads grad();

    double mse() const { return graph_.scalar(mse_); }
    double pde() const { return graph_.scalar(pde_); }
    double total() const { return graph_.scalar(total_); }
    PointOutputs outputs() const;

    graph::Graph& graph() { return graph_; }

private:
    PinnConfig config_;
    Eigen::Index batch_;
    graph::Graph graph_;
    net::MlpNodes x_nodes_, rul_nodes_, dyn_nodes_;
    graph::NodeId oc_in_, tau_in_, label_in_;
    ResidualNodes res_;
    graph::NodeId dyn_, residual_, mse_, pde_, total_;
};

// Caches one BatchGraph per batch width. Not thread-safe; use one per thread.
class Evaluator {
public:
    explicit Evaluator(DynamicsOverride dynamics = {}) : dynamics_(std::move(dynamics)) {}

    CostBreakdown cost(const PinnModel& model, std::span<const data::AugmentedSample> batch,
                       bool with_grads = true);
    // Loss terms over an arbitrarily large sample set, evaluated in chunks.
    CostBreakdown loss(const PinnModel& model, std::span<const data::AugmentedSample> samples);
    PointOutputs points(const PinnModel& model, std::span<const Query> queries);

    static constexpr Eigen::Index kChunk = 4096;

private:
    BatchGraph& graph_for(const PinnConfig& config, Eigen::Index batch);
    void load(const PinnModel& model, BatchGraph& g, std::span<const data::AugmentedSample> batch);

    DynamicsOverride dynamics_;
    std::map<Eigen::Index, std::unique_ptr<BatchGraph>> cache_;
};

double latent(const PinnModel& model, const std::vector<double>& oc, double t);
double predict_rul(const PinnModel& model, const std::vector<double>& oc, double t);
// Residual f in normalized units; `inputs` (if given) receives the dynamics
// network inputs and the RUL time derivative.
double residual(const PinnModel& model, const std::vector<double>& oc, double t,
                ResidualInputs* inputs = nullptr);

CostBreakdown cost(const PinnModel& model, std::span<const data::AugmentedSample> batch);

std::vector<LatentMapPoint> latent_map(const PinnModel& model, std::span<const data::AugmentedSample> samples);

std::vector<HorizonPoint> horizon_sweep(const PinnModel& model, const std::vector<double>& oc,
                                        std::span<const double> t_list);

// Snapshots (t_i, oc_i) in ascending t_i; entry i estimates RUL at t_star
// from snapshot i alone.
std::vector<double> multi_estimate(const PinnModel& model,
                                   std::span<const std::pair<double, std::vector<double>>> series,
                                   double t_star, int horizon = data::kDefaultHorizon);

// Predicts at every engine's last recorded cycle with t = 0.
RmseResult rmse_eval(const PinnModel& model, const std::vector<data::EngineTrajectory>& test,
                     const std::vector<double>& truth);

// Root mean square of (truth - prediction).
double rmse(std::span<const double> truth, std::span<const double> predicted);

// CSV exports: 9 significant digits.
std::string latent_map_csv(std::span<const LatentMapPoint> points);
std::string predictions_csv(std::span<const EnginePrediction> engines);

}  // namespace pinn::model
