#include "pinn/model.hpp"

#include "pinn/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace pinn::model {

using graph::NodeId;

PinnConfig PinnConfig::defaults(int d_oc) {
    PinnConfig c;
    c.d_oc = d_oc;
    c.x_spec = {{d_oc + 1, 3, 3, 3, 3, 3, 1}, net::Activation::tanh, net::Activation::linear};
    c.rul_spec = {{2, 10, 10, 10, 10, 10, 1}, net::Activation::tanh, net::Activation::linear};
    c.dyn_spec = {{2, 10, 10, 10, 10, 10, 1}, net::Activation::relu, net::Activation::linear};
    return c;
}

void PinnConfig::validate() const {
    if (d_oc < 1) throw contract_error("d_oc must be >= 1");
    x_spec.validate();
    rul_spec.validate();
    dyn_spec.validate();
    if (x_spec.input_dim() != d_oc + 1) {
        throw contract_error("latent net input must be d_oc + 1 = " + std::to_string(d_oc + 1));
    }
    if (rul_spec.input_dim() != 2 || dyn_spec.input_dim() != 2) {
        throw contract_error("RUL and dynamics nets take exactly 2 inputs");
    }
    if (x_spec.output_dim() != 1 || rul_spec.output_dim() != 1 || dyn_spec.output_dim() != 1) {
        throw contract_error("all three networks have a single output");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw contract_error("lambda must be finite and >= 0");
    if (!(t_scale > 0.0) || !std::isfinite(t_scale)) throw contract_error("t_scale must be positive");
}

PinnModel PinnModel::create(const PinnConfig& config, const data::NormStats& norm, net::InitScheme scheme,
                            std::uint64_t seed) {
    config.validate();
    std::mt19937_64 seeder(seed);
    const std::uint64_t x_seed = seeder();
    const std::uint64_t rul_seed = seeder();
    const std::uint64_t dyn_seed = seeder();
    PinnModel m{config, net::init(config.x_spec, scheme, x_seed), net::init(config.rul_spec, scheme, rul_seed),
                net::init(config.dyn_spec, scheme, dyn_seed), norm};
    m.validate();
    return m;
}

void PinnModel::validate() const {
    config.validate();
    if (!x_params.matches(config.x_spec) || !rul_params.matches(config.rul_spec) ||
        !dyn_params.matches(config.dyn_spec)) {
        throw contract_error("model parameters do not match the configured network specs");
    }
    if (norm.means.size() != static_cast<std::size_t>(config.d_oc) ||
        norm.stds.size() != static_cast<std::size_t>(config.d_oc)) {
        throw contract_error("normalization statistics are not fitted for d_oc = " + std::to_string(config.d_oc));
    }
    if (!(norm.rul_max >= 1.0)) throw contract_error("rul_max must be >= 1");
}

// ---------------------------------------------------------------------------
// BatchGraph

BatchGraph::BatchGraph(const PinnConfig& config, Eigen::Index batch, DynamicsOverride dynamics)
    : config_(config), batch_(batch) {
    config_.validate();
    if (batch < 1) throw contract_error("batch must be nonempty");
    auto& g = graph_;

    x_nodes_ = net::declare(g, config_.x_spec, "x");
    rul_nodes_ = net::declare(g, config_.rul_spec, "rul");
    dyn_nodes_ = net::declare(g, config_.dyn_spec, "dyn");

    oc_in_ = g.input({config_.d_oc, batch}, "oc");
    tau_in_ = g.input({1, batch}, "tau");
    label_in_ = g.input({1, batch}, "label");

    // Latent variable and its rate along the (scaled) time coordinate.
    const NodeId z = g.concat({oc_in_, tau_in_});
    const NodeId time_seed = net::coordinate_seed(g, config_.d_oc + 1, batch, config_.d_oc);
    const auto latent = net::forward_tangents(g, x_nodes_, z, std::span<const NodeId>(&time_seed, 1));
    res_.x = latent.output;
    res_.dx_dt = latent.tangents[0];

    // RUL and its partials along x and along explicit time.
    const NodeId r_in = g.concat({res_.x, tau_in_});
    const std::array<NodeId, 2> seeds{net::coordinate_seed(g, 2, batch, 0), net::coordinate_seed(g, 2, batch, 1)};
    const auto rul = net::forward_tangents(g, rul_nodes_, r_in, seeds);
    res_.rul = rul.output;
    res_.drul_dx = rul.tangents[0];
    // Total time derivative through both the x path and the explicit t path.
    res_.drul_dt = g.add(g.multiply(res_.drul_dx, res_.dx_dt), rul.tangents[1]);

    if (dynamics) {
        dyn_ = dynamics(g, res_);
    } else {
        dyn_ = net::forward(g, dyn_nodes_, g.concat({res_.dx_dt, res_.drul_dx}));
    }
    residual_ = g.subtract(res_.drul_dt, dyn_);

    mse_ = g.mean(g.square(g.subtract(res_.rul, label_in_)));
    pde_ = g.mean(g.square(residual_));
    total_ = g.add(mse_, g.scale(pde_, config_.lambda));
}

void BatchGraph::bind(const PinnModel& model) {
    if (!(model.config == config_)) throw contract_error("model config differs from the graph's config");
    net::bind(graph_, x_nodes_, model.x_params);
    net::bind(graph_, rul_nodes_, model.rul_params);
    net::bind(graph_, dyn_nodes_, model.dyn_params);
}

void BatchGraph::eval(const Eigen::MatrixXd& oc, const Eigen::RowVectorXd& tau, const Eigen::RowVectorXd& labels) {
    graph_.eval({{oc_in_, oc}, {tau_in_, tau}, {label_in_, labels}});
}

ModelGrads BatchGraph::grad() {
    const auto g = graph_.grad(total_);
    return {net::gather(g, x_nodes_), net::gather(g, rul_nodes_), net::gather(g, dyn_nodes_)};
}

PointOutputs BatchGraph::outputs() const {
    return {graph_.value(res_.x),      graph_.value(res_.dx_dt),   graph_.value(res_.rul),
            graph_.value(res_.drul_dx), graph_.value(res_.drul_dt), graph_.value(dyn_),
            graph_.value(residual_)};
}

// ---------------------------------------------------------------------------
// Evaluator

BatchGraph& Evaluator::graph_for(const PinnConfig& config, Eigen::Index batch) {
    auto it = cache_.find(batch);
    if (it == cache_.end() || !(it->second->config() == config)) {
        auto g = std::make_unique<BatchGraph>(config, batch, dynamics_);
        it = cache_.insert_or_assign(batch, std::move(g)).first;
    }
    return *it->second;
}

void Evaluator::load(const PinnModel& model, BatchGraph& g, std::span<const data::AugmentedSample> batch) {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const int d = model.config.d_oc;
    Eigen::MatrixXd oc(d, n);
    Eigen::RowVectorXd tau(n), labels(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ns = data::apply_norm(model.norm, batch[i], model.config.t_scale);
        for (int j = 0; j < d; ++j) oc(j, i) = ns.oc[j];
        tau(i) = ns.t;
        labels(i) = ns.rul;
    }
    g.bind(model);
    g.eval(oc, tau, labels);
}

CostBreakdown Evaluator::cost(const PinnModel& model, std::span<const data::AugmentedSample> batch,
                              bool with_grads) {
    if (batch.empty()) throw contract_error("cost: batch is empty");
    auto& g = graph_for(model.config, static_cast<Eigen::Index>(batch.size()));
    load(model, g, batch);
    CostBreakdown out{g.mse(), g.pde(), g.total(), {}};
    if (!std::isfinite(out.total)) throw numeric_error("cost: non-finite total");
    if (with_grads) out.grads = g.grad();
    return out;
}

CostBreakdown Evaluator::loss(const PinnModel& model, std::span<const data::AugmentedSample> samples) {
    if (samples.empty()) throw contract_error("loss: no samples");
    double mse = 0.0;
    double pde = 0.0;
    for (std::size_t start = 0; start < samples.size(); start += kChunk) {
        const std::size_t n = std::min<std::size_t>(kChunk, samples.size() - start);
        const auto part = cost(model, samples.subspan(start, n), false);
        mse += part.mse * static_cast<double>(n);
        pde += part.pde * static_cast<double>(n);
    }
    const double count = static_cast<double>(samples.size());
    CostBreakdown out;
    out.mse = mse / count;
    out.pde = pde / count;
    out.total = out.mse + model.config.lambda * out.pde;
    return out;
}

PointOutputs Evaluator::points(const PinnModel& model, std::span<const Query> queries) {
    const auto n = static_cast<Eigen::Index>(queries.size());
    PointOutputs all{Eigen::RowVectorXd(n), Eigen::RowVectorXd(n), Eigen::RowVectorXd(n), Eigen::RowVectorXd(n),
                     Eigen::RowVectorXd(n), Eigen::RowVectorXd(n), Eigen::RowVectorXd(n)};
    const int d = model.config.d_oc;
    for (Eigen::Index start = 0; start < n; start += kChunk) {
        const Eigen::Index m = std::min(kChunk, n - start);
        Eigen::MatrixXd oc(d, m);
        Eigen::RowVectorXd tau(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto& q = queries[static_cast<std::size_t>(start + i)];
            if (q.oc.size() != static_cast<std::size_t>(d)) {
                throw contract_error("expected " + std::to_string(d) + " OC features, got " +
                                     std::to_string(q.oc.size()));
            }
            if (!(q.t >= 0.0)) throw contract_error("time offset must be >= 0");
            const auto z = data::normalize_oc(model.norm, q.oc);
            for (int j = 0; j < d; ++j) oc(j, i) = z[j];
            tau(i) = q.t / model.config.t_scale;
        }
        auto& g = graph_for(model.config, m);
        g.bind(model);
        g.eval(oc, tau, Eigen::RowVectorXd::Zero(m));
        const auto out = g.outputs();
        all.x.segment(start, m) = out.x;
        all.dx_dt.segment(start, m) = out.dx_dt;
        all.rul.segment(start, m) = out.rul;
        all.drul_dx.segment(start, m) = out.drul_dx;
        all.drul_dt.segment(start, m) = out.drul_dt;
        all.dynamics.segment(start, m) = out.dynamics;
        all.residual.segment(start, m) = out.residual;
    }
    return all;
}

// ---------------------------------------------------------------------------
// Point operations

namespace {

PointOutputs single(const PinnModel& model, const std::vector<double>& oc, double t) {
    Evaluator ev;
    const Query q{oc, t};
    return ev.points(model, std::span<const Query>(&q, 1));
}

}  // namespace

double latent(const PinnModel& model, const std::vector<double>& oc, double t) {
    return single(model, oc, t).x(0);
}

double predict_rul(const PinnModel& model, const std::vector<double>& oc, double t) {
    return model.norm.rul_max * single(model, oc, t).rul(0);
}

double residual(const PinnModel& model, const std::vector<double>& oc, double t, ResidualInputs* inputs) {
    const auto out = single(model, oc, t);
    const ResidualInputs r{out.x(0), out.dx_dt(0), out.drul_dx(0), out.drul_dt(0)};
    if (!std::isfinite(r.x) || !std::isfinite(r.dx_dt) || !std::isfinite(r.drul_dx) ||
        !std::isfinite(r.drul_dt) || !std::isfinite(out.residual(0))) {
        throw numeric_error("residual: non-finite intermediate value");
    }
    if (inputs != nullptr) *inputs = r;
    return out.residual(0);
}

CostBreakdown cost(const PinnModel& model, std::span<const data::AugmentedSample> batch) {
    Evaluator ev;
    return ev.cost(model, batch, true);
}

std::vector<LatentMapPoint> latent_map(const PinnModel& model, std::span<const data::AugmentedSample> samples) {
    std::vector<Query> queries;
    queries.reserve(samples.size());
    for (const auto& s : samples) queries.push_back({s.oc, static_cast<double>(s.t)});
    Evaluator ev;
    const auto out = ev.points(model, queries);
    std::vector<LatentMapPoint> points;
    points.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        points.push_back({out.x(k), out.dx_dt(k), model.norm.rul_max * out.rul(k),
                          static_cast<double>(samples[i].rul)});
    }
    return points;
}

std::vector<HorizonPoint> horizon_sweep(const PinnModel& model, const std::vector<double>& oc,
                                        std::span<const double> t_list) {
    if (t_list.empty()) throw contract_error("horizon_sweep: empty time list");
    std::vector<Query> queries;
    for (double t : t_list) queries.push_back({oc, t});
    Evaluator ev;
    const auto out = ev.points(model, queries);
    std::vector<HorizonPoint> sweep;
    for (std::size_t i = 0; i < t_list.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        sweep.push_back({t_list[i], out.x(k), out.dx_dt(k), model.norm.rul_max * out.rul(k)});
    }
    return sweep;
}

std::vector<double> multi_estimate(const PinnModel& model,
                                   std::span<const std::pair<double, std::vector<double>>> series,
                                   double t_star, int horizon) {
    std::vector<Query> queries;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double ti = series[i].first;
        if (i > 0 && ti < series[i - 1].first) throw contract_error("multi_estimate: times must ascend");
        if (ti > t_star) {
            throw contract_error("multi_estimate: snapshot time " + std::to_string(ti) + " is after t* " +
                                 std::to_string(t_star));
        }
        if (t_star - ti > horizon) {
            throw contract_error("multi_estimate: t* - t_i exceeds horizon " + std::to_string(horizon));
        }
        queries.push_back({series[i].second, t_star - ti});
    }
    std::vector<double> out;
    if (queries.empty()) return out;
    Evaluator ev;
    const auto res = ev.points(model, queries);
    for (Eigen::Index k = 0; k < res.rul.size(); ++k) out.push_back(model.norm.rul_max * res.rul(k));
    return out;
}

double rmse(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size()) throw contract_error("rmse: length mismatch");
    if (truth.empty()) throw contract_error("rmse: no values");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = truth[i] - predicted[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

RmseResult rmse_eval(const PinnModel& model, const std::vector<data::EngineTrajectory>& test,
                     const std::vector<double>& truth) {
    if (truth.size() != test.size()) {
        throw contract_error("rmse_eval: " + std::to_string(truth.size()) + " truth values for " +
                             std::to_string(test.size()) + " engines");
    }
    const auto samples = data::last_cycle_samples(test, model.norm.columns);
    std::vector<Query> queries;
    for (const auto& s : samples) queries.push_back({s.oc, 0.0});
    Evaluator ev;
    const auto out = ev.points(model, queries);

    RmseResult result;
    std::vector<double> pred;
    for (std::size_t i = 0; i < test.size(); ++i) {
        pred.push_back(model.norm.rul_max * out.rul(static_cast<Eigen::Index>(i)));
        result.engines.push_back({test[i].unit, truth[i], pred.back()});
    }
    result.rmse = test.empty() ? 0.0 : rmse(truth, pred);
    return result;
}

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

std::string latent_map_csv(std::span<const LatentMapPoint> points) {
    std::string out = "x,dx_dt,rul_pred,rul_true\n";
    for (const auto& p : points) {
        out += fmt9(p.x) + ',' + fmt9(p.dx_dt) + ',' + fmt9(p.rul_pred) + ',' +
               (p.rul_true ? fmt9(*p.rul_true) : std::string()) + '\n';
    }
    return out;
}

std::string predictions_csv(std::span<const EnginePrediction> engines) {
    std::string out = "engine,rul_true,rul_pred\n";
    for (const auto& e : engines) {
        out += std::to_string(e.engine) + ',' + fmt9(e.rul_true) + ',' + fmt9(e.rul_pred) + '\n';
    }
    return out;
}

}  // namespace pinn::model
