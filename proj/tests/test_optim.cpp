#include "pinn/errors.hpp"
#include "pinn/optim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

using namespace pinn;
using namespace pinn::optim;

namespace {

// Minimizes 0.5 theta^2 from theta0; returns theta after `steps` updates.
double quadratic_run(const NadamConfig& cfg, int steps, double theta0, double* max_step = nullptr) {
    double theta = theta0;
    double g = 0.0;
    NadamState st;
    for (int i = 0; i < steps; ++i) {
        g = theta;
        std::vector<ParamSlot> s{{"theta", {&theta, 1}, {&g, 1}}};
        const double before = theta;
        nadam_step(st, s, cfg);
        if (max_step) *max_step = std::max(*max_step, std::abs(theta - before));
    }
    return theta;
}

struct Problem {
    std::vector<data::AugmentedSample> samples;
    model::PinnModel model;
};

Problem small_problem(std::uint64_t init_seed) {
    data::SynthSpec spec;
    spec.n_engines = 3;
    const auto synth = data::synth_generate(spec);
    const auto cols = data::select_features(synth.trajectories);
    auto samples = data::augment(synth.trajectories, cols);
    const auto norm = data::fit_norm(samples, cols);
    model::PinnConfig c;
    c.d_oc = static_cast<int>(cols.size());
    c.x_spec = {{c.d_oc + 1, 3, 3, 1}, net::Activation::tanh, net::Activation::linear};
    c.rul_spec = {{2, 5, 5, 1}, net::Activation::tanh, net::Activation::linear};
    c.dyn_spec = {{2, 5, 5, 1}, net::Activation::relu, net::Activation::linear};
    return {samples, model::PinnModel::create(c, norm, net::InitScheme::xavier, init_seed)};
}

}  // namespace

TEST_CASE("nadam_step: hand-computed update") {
    double theta = 1.0, g = 2.0;
    NadamState st;
    std::vector<ParamSlot> s{{"theta", {&theta, 1}, {&g, 1}}};
    nadam_step(st, s, {0.1, 0.9, 0.999, 0.0});
    CHECK(st.m[0][0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(st.v[0][0] == doctest::Approx(0.004).epsilon(1e-15));
    CHECK(std::abs(theta - 0.8526316) <= 1e-6);
    CHECK(std::abs(theta - (1.0 - 0.1 * (0.9 * (0.2 / 0.19) + 0.1 * (2.0 / 0.1)) / 2.0)) <= 1e-15);
    CHECK(st.step == 1);
}

TEST_CASE("nadam_step: zero gradient from a fresh state") {
    std::vector<double> theta{1.5, -2.0}, g{0.0, 0.0};
    NadamState st;
    std::vector<ParamSlot> s{{"w", theta, g}};
    nadam_step(st, s, {});
    CHECK(theta == std::vector<double>{1.5, -2.0});
    CHECK(st.m[0] == std::vector<double>{0.0, 0.0});
    CHECK(st.v[0] == std::vector<double>{0.0, 0.0});
}

TEST_CASE("nadam_step: non-finite gradient names the slot and changes nothing") {
    std::vector<double> a{1.0}, ga{0.5}, b{2.0}, gb{std::numeric_limits<double>::quiet_NaN()};
    NadamState st;
    std::vector<ParamSlot> s{{"x.0.W", a, ga}, {"rul.1.b", b, gb}};
    try {
        nadam_step(st, s, {});
        FAIL("expected numeric_error");
    } catch (const numeric_error& e) {
        CHECK(std::string(e.what()).find("rul.1.b") != std::string::npos);
    }
    CHECK(a[0] == 1.0);
    CHECK(st.step == 0);
    CHECK(st.m.empty());
}

TEST_CASE("nadam_step: identical runs are bit-identical") {
    CHECK(quadratic_run({}, 500, 5.0) == quadratic_run({}, 500, 5.0));
}

TEST_CASE("nadam_step: convergence on a quadratic") {
    NadamConfig fast;
    fast.lr = 5e-3;
    CHECK(std::abs(quadratic_run(fast, 2000, 5.0)) < 0.5);

    // At the default step size every update moves at most ~1.5 lr, so the
    // 4.5 units to |theta| < 0.5 need more than 2000 steps.
    double max_step = 0.0;
    const double after_2000 = quadratic_run({}, 2000, 5.0, &max_step);
    CHECK(max_step <= 1.5e-3);
    CHECK(after_2000 < 5.0 - 1.0);
    CHECK(std::abs(quadratic_run({}, 6100, 5.0)) < 0.5);
}

TEST_CASE("NadamConfig validation") {
    NadamConfig c;
    CHECK_NOTHROW(c.validate());
    c.beta1 = 1.0;
    CHECK_THROWS_AS(c.validate(), contract_error);
    c = {};
    c.lr = 0.0;
    CHECK_THROWS_AS(c.validate(), contract_error);
}

TEST_CASE("split_dataset: sizes") {
    const auto s = split_dataset(8, 1);
    CHECK(s.train.size() == 6);
    CHECK(s.validation.size() == 2);
    CHECK(validation_count(593061) == 148266);
    CHECK(593061 - validation_count(593061) == 444795);
    const auto big = split_dataset(593061, 3);
    CHECK(big.train.size() == 444795);
    CHECK(big.validation.size() == 148266);
}

TEST_CASE("split_dataset: partition for many sizes and seeds") {
    for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 17u, 100u, 1001u}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto s = split_dataset(n, seed);
            CHECK(s.validation.size() == (n + 3) / 4);
            std::set<std::size_t> all(s.train.begin(), s.train.end());
            for (auto i : s.validation) CHECK(all.insert(i).second);
            CHECK(all.size() == n);
            CHECK(*all.rbegin() == n - 1);
            CHECK(split_dataset(n, seed).validation == s.validation);
        }
    }
    CHECK(split_dataset(1000, 1).validation != split_dataset(1000, 2).validation);
}

TEST_CASE("train: deterministic given the seeds") {
    auto p = small_problem(4);
    TrainOptions opt;
    opt.split_seed = 9;
    opt.epochs = 2;
    opt.batch_size = 64;
    TrainingReport r1, r2;
    const auto m1 = train(p.model, p.samples, opt, 4, r1);
    const auto m2 = train(p.model, p.samples, opt, 4, r2);
    CHECK(m1.x_params == m2.x_params);
    CHECK(m1.rul_params == m2.rul_params);
    CHECK(m1.dyn_params == m2.dyn_params);
    REQUIRE(r1.epochs.size() == 2);
    for (std::size_t e = 0; e < 2; ++e) {
        CHECK(r1.epochs[e].train_total == r2.epochs[e].train_total);
        CHECK(r1.epochs[e].val_total == r2.epochs[e].val_total);
        CHECK(std::abs(r1.epochs[e].train_total - (r1.epochs[e].train_mse + r1.epochs[e].train_pde)) <= 1e-12);
    }
    CHECK(r1.final_rmse_val == r2.final_rmse_val);
    CHECK(r1.train_size + r1.val_size == p.samples.size());
    CHECK(r1.val_size == validation_count(p.samples.size()));
    CHECK(r1.init_seed == 4);
    CHECK(r1.split_seed == 9);

    opt.split_seed = 10;
    TrainingReport r3;
    const auto m3 = train(p.model, p.samples, opt, 4, r3);
    CHECK_FALSE(m3.x_params == m1.x_params);
}

TEST_CASE("train: argument checks and non-finite cost") {
    auto p = small_problem(1);
    TrainOptions opt;
    opt.epochs = 1;
    opt.batch_size = 0;
    TrainingReport r;
    CHECK_THROWS_AS(train(p.model, p.samples, opt, 1, r), contract_error);
    opt.batch_size = 32;
    CHECK_THROWS_AS(train(p.model, {}, opt, 1, r), contract_error);

    p.model.rul_params.layers[1].weight(0, 0) = std::numeric_limits<double>::infinity();
    try {
        train(p.model, p.samples, opt, 1, r);
        FAIL("expected training_error");
    } catch (const training_error& e) {
        CHECK(e.epoch() == 0);
        CHECK(e.batch() == 0);
    }
}

TEST_CASE("slots: names and sizes") {
    auto p = small_problem(2);
    const model::ModelGrads g{net::zeros_like(p.model.config.x_spec), net::zeros_like(p.model.config.rul_spec),
                              net::zeros_like(p.model.config.dyn_spec)};
    const auto s = slots(p.model, g);
    CHECK(s.size() == 2 * (3 + 3 + 3));
    CHECK(s.front().name == "x.0.W");
    CHECK(s[1].name == "x.0.b");
    CHECK(s.back().name == "dyn.2.b");
    std::size_t total = 0;
    for (const auto& x : s) total += x.value.size();
    CHECK(total == p.model.x_params.scalar_count() + p.model.rul_params.scalar_count() +
                       p.model.dyn_params.scalar_count());
}
