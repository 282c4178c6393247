#include "pinn/optim.hpp"

#include "pinn/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace pinn::optim {

void NadamConfig::validate() const {
    if (!(lr > 0.0)) throw contract_error("nadam: lr must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw contract_error("nadam: beta1 must be in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw contract_error("nadam: beta2 must be in (0, 1)");
    if (!(eps >= 0.0)) throw contract_error("nadam: eps must be >= 0");
}

void nadam_step(NadamState& state, std::span<ParamSlot> slots, const NadamConfig& config) {
    for (const auto& s : slots) {
        if (s.value.size() != s.grad.size()) {
            throw contract_error("nadam: gradient size mismatch for '" + s.name + "'");
        }
        for (double g : s.grad) {
            if (!std::isfinite(g)) throw numeric_error("nadam: non-finite gradient in '" + s.name + "'");
        }
    }
    if (state.m.empty()) {
        for (const auto& s : slots) {
            state.m.emplace_back(s.value.size(), 0.0);
            state.v.emplace_back(s.value.size(), 0.0);
        }
    }
    if (state.m.size() != slots.size()) throw contract_error("nadam: state does not match parameters");

    const double t = static_cast<double>(state.step + 1);
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double m_corr = 1.0 - std::pow(b1, t + 1.0);
    const double g_corr = 1.0 - std::pow(b1, t);
    const double v_corr = 1.0 - std::pow(b2, t);

    for (std::size_t k = 0; k < slots.size(); ++k) {
        auto& m = state.m[k];
        auto& v = state.v[k];
        auto& s = slots[k];
        if (m.size() != s.value.size()) throw contract_error("nadam: state size mismatch for '" + s.name + "'");
        for (std::size_t i = 0; i < s.value.size(); ++i) {
            const double g = s.grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double m_hat = m[i] / m_corr;
            const double v_hat = v[i] / v_corr;
            s.value[i] -= config.lr * (b1 * m_hat + (1.0 - b1) * g / g_corr) / (std::sqrt(v_hat) + config.eps);
        }
    }
    state.step += 1;
}

namespace {

void add_slots(std::vector<ParamSlot>& out, const std::string& prefix, net::MlpParams& params,
               const net::MlpParams& grads) {
    if (params.layers.size() != grads.layers.size()) throw contract_error("gradient layout mismatch");
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        auto& l = params.layers[i];
        const auto& g = grads.layers[i];
        if (l.weight.size() != g.weight.size() || l.bias.size() != g.bias.size()) {
            throw contract_error("gradient layout mismatch at " + prefix + "." + std::to_string(i));
        }
        const auto tag = prefix + "." + std::to_string(i);
        out.push_back({tag + ".W", {l.weight.data(), static_cast<std::size_t>(l.weight.size())},
                       {g.weight.data(), static_cast<std::size_t>(g.weight.size())}});
        out.push_back({tag + ".b", {l.bias.data(), static_cast<std::size_t>(l.bias.size())},
                       {g.bias.data(), static_cast<std::size_t>(g.bias.size())}});
    }
}

}  // namespace

std::vector<ParamSlot> slots(model::PinnModel& model, const model::ModelGrads& grads) {
    std::vector<ParamSlot> out;
    add_slots(out, "x", model.x_params, grads.x);
    add_slots(out, "rul", model.rul_params, grads.rul);
    add_slots(out, "dyn", model.dyn_params, grads.dyn);
    return out;
}

std::size_t validation_count(std::size_t n) { return (n + 3) / 4; }

Split split_dataset(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_val = validation_count(n);
    Split s;
    s.validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    // Canonical order inside each part; the epoch shuffle randomizes batches.
    std::sort(s.validation.begin(), s.validation.end());
    std::sort(s.train.begin(), s.train.end());
    return s;
}

model::PinnModel train(model::PinnModel model, const std::vector<data::AugmentedSample>& dataset,
                       const TrainOptions& options, std::uint64_t init_seed, TrainingReport& report) {
    const auto start = std::chrono::steady_clock::now();
    model.validate();
    options.nadam.validate();
    if (dataset.empty()) throw contract_error("train: dataset is empty");
    if (options.epochs < 0) throw contract_error("train: epochs must be >= 0");
    if (options.batch_size < 1 || static_cast<std::size_t>(options.batch_size) > dataset.size()) {
        throw contract_error("train: batch size must be in [1, dataset size]");
    }

    const Split split = split_dataset(dataset.size(), options.split_seed);
    if (split.train.empty()) throw contract_error("train: training split is empty");
    std::vector<data::AugmentedSample> train_set, val_set;
    train_set.reserve(split.train.size());
    val_set.reserve(split.validation.size());
    for (auto i : split.train) train_set.push_back(dataset[i]);
    for (auto i : split.validation) val_set.push_back(dataset[i]);

    report = TrainingReport{};
    report.split_seed = options.split_seed;
    report.init_seed = init_seed;
    report.epoch_count = options.epochs;
    report.batch_size = options.batch_size;
    report.train_size = train_set.size();
    report.val_size = val_set.size();

    // Batch order stream, derived from the split seed.
    std::mt19937_64 shuffle_rng(options.split_seed ^ 0x9e3779b97f4a7c15ULL);
    model::Evaluator evaluator;
    NadamState state;
    std::vector<std::size_t> order(train_set.size());
    std::vector<data::AugmentedSample> batch;
    const auto bs = static_cast<std::size_t>(options.batch_size);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        std::size_t batch_index = 0;
        for (std::size_t b = 0; b < order.size(); b += bs, ++batch_index) {
            const std::size_t n = std::min(bs, order.size() - b);
            batch.clear();
            for (std::size_t i = 0; i < n; ++i) batch.push_back(train_set[order[b + i]]);
            model::CostBreakdown c;
            try {
                c = evaluator.cost(model, batch, true);
            } catch (const numeric_error& e) {
                throw training_error(std::string("non-finite cost: ") + e.what(), epoch, batch_index);
            }
            auto params = slots(model, c.grads);
            try {
                nadam_step(state, params, options.nadam);
            } catch (const numeric_error& e) {
                throw training_error(e.what(), epoch, batch_index);
            }
        }

        EpochLosses losses;
        const auto tr = evaluator.loss(model, train_set);
        losses.train_total = tr.total;
        losses.train_mse = tr.mse;
        losses.train_pde = tr.pde;
        if (!val_set.empty()) {
            const auto va = evaluator.loss(model, val_set);
            losses.val_total = va.total;
            losses.val_mse = va.mse;
            losses.val_pde = va.pde;
        }
        if (!std::isfinite(losses.train_total) || !std::isfinite(losses.val_total)) {
            throw training_error("non-finite epoch loss", epoch, 0);
        }
        report.epochs.push_back(losses);
    }

    if (!val_set.empty()) {
        std::vector<model::Query> queries;
        std::vector<double> truth;
        for (const auto& s : val_set) {
            queries.push_back({s.oc, static_cast<double>(s.t)});
            truth.push_back(static_cast<double>(s.rul));
        }
        const auto out = evaluator.points(model, queries);
        std::vector<double> pred(truth.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pred[i] = model.norm.rul_max * out.rul(static_cast<Eigen::Index>(i));
        }
        report.final_rmse_val = model::rmse(truth, pred);
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return model;
}

}  // namespace pinn::optim
