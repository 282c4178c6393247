#include "oracles.hpp"

#include "pinn/errors.hpp"
#include "pinn/net.hpp"

#include <doctest.h>

#include <random>

using namespace pinn;
using net::Activation;
using net::MlpSpec;

namespace {

MlpSpec tanh_spec(std::vector<int> widths) { return {std::move(widths), Activation::tanh, Activation::linear}; }

Eigen::MatrixXd column(const std::vector<double>& v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return m;
}

std::vector<double> random_input(std::mt19937_64& rng, int d) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x) v = u(rng);
    return x;
}

}  // namespace

TEST_CASE("MlpSpec validation") {
    CHECK_THROWS_AS(tanh_spec({2, 1}).validate(), contract_error);
    CHECK_THROWS_AS(tanh_spec({2, 0, 1}).validate(), contract_error);
    CHECK_NOTHROW(tanh_spec({2, 3, 1}).validate());
}

TEST_CASE("init: shapes and determinism") {
    const auto spec = tanh_spec({2, 3, 1});
    const auto p = net::init(spec, net::InitScheme::standard_normal, 5);
    REQUIRE(p.layers.size() == 2);
    CHECK(p.layers[0].weight.rows() == 3);
    CHECK(p.layers[0].weight.cols() == 2);
    CHECK(p.layers[0].bias.size() == 3);
    CHECK(p.layers[1].weight.rows() == 1);
    CHECK(p.layers[1].weight.cols() == 3);
    CHECK(p.layers[1].bias.size() == 1);

    CHECK(net::init(spec, net::InitScheme::standard_normal, 5) == p);
    CHECK_FALSE(net::init(spec, net::InitScheme::standard_normal, 6) == p);

    const auto x = net::init(spec, net::InitScheme::xavier, 5);
    CHECK(x.layers[0].bias.isZero());
    CHECK(x == net::init(spec, net::InitScheme::xavier, 5));
}

TEST_CASE("init: standard-normal draw statistics") {
    // 100 x 100 weights = 10^4 draws, plus biases.
    const auto p = net::init(tanh_spec({100, 100, 1}), net::InitScheme::standard_normal, 11);
    const auto& w = p.layers[0].weight;
    const double mean = w.mean();
    const double var = (w.array() - mean).square().sum() / static_cast<double>(w.size() - 1);
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.1);
}

TEST_CASE("init: xavier variance") {
    const auto p = net::init(tanh_spec({200, 100, 1}), net::InitScheme::xavier, 3);
    const auto& w = p.layers[0].weight;
    const double var = w.array().square().mean();
    CHECK(var == doctest::Approx(2.0 / 300.0).epsilon(0.05));
}

TEST_CASE("forward: zero parameters give zero output") {
    const auto spec = tanh_spec({3, 4, 4, 1});
    const auto p = net::zeros_like(spec);
    const auto out = net::evaluate(spec, p, Eigen::MatrixXd::Random(3, 5));
    CHECK(out.isZero());
}

TEST_CASE("forward: hand-evaluated single unit") {
    const auto spec = tanh_spec({1, 1, 1});
    auto p = net::zeros_like(spec);
    p.layers[0].weight(0, 0) = 2.0;
    p.layers[1].weight(0, 0) = 1.0;
    const auto out = net::evaluate(spec, p, column({0.25}));
    CHECK(out(0, 0) == doctest::Approx(0.46211715726).epsilon(1e-11));
}

TEST_CASE("forward: matches a straight-line evaluation") {
    std::mt19937_64 rng(17);
    for (const auto& spec : {tanh_spec({2, 3, 1}), MlpSpec{{3, 5, 4, 2}, Activation::relu, Activation::tanh}}) {
        for (int trial = 0; trial < 20; ++trial) {
            const auto p = net::init(spec, net::InitScheme::standard_normal, rng());
            const auto x = random_input(rng, spec.input_dim());
            const auto got = net::evaluate(spec, p, column(x));
            const auto want = oracle::mlp(spec, p, x);
            for (std::size_t i = 0; i < want.size(); ++i) {
                CHECK(std::abs(got(static_cast<Eigen::Index>(i), 0) - want[i]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("forward: batch columns evaluate independently") {
    std::mt19937_64 rng(23);
    const auto spec = tanh_spec({3, 4, 4, 1});
    const auto p = net::init(spec, net::InitScheme::standard_normal, 1);
    Eigen::MatrixXd batch = Eigen::MatrixXd::Random(3, 9);
    const auto all = net::evaluate(spec, p, batch);
    for (Eigen::Index c = 0; c < batch.cols(); ++c) {
        CHECK(net::evaluate(spec, p, batch.col(c))(0, 0) == all(0, c));
    }
}

TEST_CASE("forward: dimension mismatch") {
    const auto spec = tanh_spec({2, 3, 1});
    CHECK_THROWS_AS(net::evaluate(spec, net::zeros_like(spec), Eigen::MatrixXd::Zero(3, 1)), construction_error);
    CHECK_THROWS_AS(net::evaluate(spec, net::zeros_like(tanh_spec({2, 4, 1})), Eigen::MatrixXd::Zero(2, 1)),
                    contract_error);
}

TEST_CASE("forward: declared shapes of the three default networks") {
    graph::Graph g;
    const int d_oc = 17;
    const auto x_nodes = net::declare(g, tanh_spec({d_oc + 1, 3, 3, 3, 3, 3, 1}), "x");
    const auto rul_nodes = net::declare(g, tanh_spec({2, 10, 10, 10, 10, 10, 1}), "rul");
    CHECK(x_nodes.weights.size() == 6);
    CHECK(g.shape(x_nodes.weights[0]) == graph::Shape{3, d_oc + 1});
    CHECK(g.shape(x_nodes.weights[5]) == graph::Shape{1, 3});
    CHECK(g.shape(rul_nodes.weights[0]) == graph::Shape{10, 2});
    CHECK(g.shape(rul_nodes.weights[3]) == graph::Shape{10, 10});
    const auto in = g.input({d_oc + 1, 7});
    const auto out = net::forward(g, x_nodes, in);
    CHECK(g.shape(out) == graph::Shape{1, 7});
}

TEST_CASE("forward_tangent: closed-form examples") {
    const auto spec = tanh_spec({1, 1, 1});
    auto p = net::zeros_like(spec);
    const double a = 0.3, b = -1.7;
    p.layers[0].weight(0, 0) = a;
    p.layers[1].weight(0, 0) = b;
    const auto [y, dy] = net::evaluate_tangent(spec, p, column({0.0}), 0);
    CHECK(dy(0, 0) == doctest::Approx(a * b).epsilon(1e-15));

    const auto zero = net::zeros_like(tanh_spec({3, 4, 1}));
    const auto [y0, dy0] = net::evaluate_tangent(tanh_spec({3, 4, 1}), zero, column({0.2, -0.1, 0.5}), 2);
    CHECK(dy0(0, 0) == 0.0);
}

TEST_CASE("forward_tangent: relu hidden layers are rejected") {
    const MlpSpec spec{{2, 3, 1}, Activation::relu, Activation::linear};
    CHECK_THROWS_AS(net::evaluate_tangent(spec, net::zeros_like(spec), Eigen::MatrixXd::Zero(2, 1), 0),
                    contract_error);
}

TEST_CASE("forward_tangent: matches finite differences at 100 draws per spec") {
    std::mt19937_64 rng(31);
    for (const auto& spec : {tanh_spec({2, 3, 3, 1}), tanh_spec({3, 3, 3, 3, 3, 3, 1})}) {
        int passed = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto p = net::init(spec, net::InitScheme::standard_normal, rng());
            const auto x = random_input(rng, spec.input_dim());
            const int k = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.input_dim()));
            const auto [y, dy] = net::evaluate_tangent(spec, p, column(x), k);
            const double fd = oracle::central_diff(
                [&](double v) {
                    auto xs = x;
                    xs[static_cast<std::size_t>(k)] = v;
                    return oracle::mlp(spec, p, xs)[0];
                },
                x[static_cast<std::size_t>(k)], 1e-6);
            if (oracle::close(dy(0, 0), fd, 1e-5, 1e-8)) ++passed;
        }
        CHECK(passed == 100);
    }
}

TEST_CASE("forward_tangent: weight gradients of the tangent match finite differences") {
    // Second-order check: d(tangent)/d(weight) from one reverse sweep.
    std::mt19937_64 rng(41);
    const auto spec = tanh_spec({2, 3, 3, 1});
    for (int trial = 0; trial < 10; ++trial) {
        auto p = net::init(spec, net::InitScheme::standard_normal, rng());
        const auto x = random_input(rng, 2);

        graph::Graph g;
        const auto nodes = net::declare(g, spec, "n");
        const auto in = g.input({2, 1});
        const auto seed = net::coordinate_seed(g, 2, 1, 0);
        const auto res = net::forward_tangents(g, nodes, in, std::span<const graph::NodeId>(&seed, 1));
        const auto root = g.sum(res.tangents[0]);
        net::bind(g, nodes, p);
        g.eval({{in, column(x)}});
        const auto grads = net::gather(g.grad(root), nodes);

        auto tangent_at = [&](const net::MlpParams& q) { return net::evaluate_tangent(spec, q, column(x), 0).second(0, 0); };
        auto ps = oracle::scalars(p);
        const auto gs = oracle::scalars(grads);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const double base = *ps[i];
            const double fd = oracle::central_diff(
                [&](double v) {
                    *ps[i] = v;
                    const double r = tangent_at(p);
                    *ps[i] = base;
                    return r;
                },
                base, 1e-6);
            CHECK_MESSAGE(oracle::close(*gs[i], fd, 1e-4, 1e-8), "param ", i, ": ", *gs[i], " vs ", fd);
        }
    }
}

TEST_CASE("forward_tangent: several seeds share one primal pass") {
    std::mt19937_64 rng(3);
    const auto spec = tanh_spec({3, 4, 1});
    const auto p = net::init(spec, net::InitScheme::standard_normal, 9);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 4);

    graph::Graph g;
    const auto nodes = net::declare(g, spec, "n");
    const auto in = g.input({3, 4});
    std::vector<graph::NodeId> seeds;
    for (int k = 0; k < 3; ++k) seeds.push_back(net::coordinate_seed(g, 3, 4, k));
    const auto res = net::forward_tangents(g, nodes, in, seeds);
    net::bind(g, nodes, p);
    g.eval({{in, x}});
    for (int k = 0; k < 3; ++k) {
        const auto [y, dy] = net::evaluate_tangent(spec, p, x, k);
        CHECK(g.value(res.tangents[static_cast<std::size_t>(k)]) == dy);
        CHECK(g.value(res.output) == y);
    }
}
