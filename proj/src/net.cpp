#include "pinn/net.hpp"

#include "pinn/errors.hpp"

#include <cmath>
#include <random>

namespace pinn::net {

using graph::Graph;
using graph::NodeId;
using graph::Shape;

std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::linear: return "linear";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    }
    return "unknown";
}

Activation parse_activation(std::string_view name) {
    if (name == "linear") return Activation::linear;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw contract_error("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(InitScheme s) {
    return s == InitScheme::standard_normal ? "standard-normal" : "xavier";
}

InitScheme parse_init_scheme(std::string_view name) {
    if (name == "standard-normal") return InitScheme::standard_normal;
    if (name == "xavier") return InitScheme::xavier;
    throw contract_error("unknown init scheme '" + std::string(name) + "'");
}

void MlpSpec::validate() const {
    if (widths.size() < 3) {
        throw contract_error("MLP needs input, at least one hidden layer and output; got " +
                             std::to_string(widths.size()) + " widths");
    }
    for (int w : widths) {
        if (w < 1) throw contract_error("MLP layer widths must be >= 1");
    }
}

std::size_t MlpParams::scalar_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

bool MlpParams::matches(const MlpSpec& spec) const {
    if (layers.size() != spec.layer_count()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].weight.rows() != spec.widths[i + 1] || layers[i].weight.cols() != spec.widths[i] ||
            layers[i].bias.size() != spec.widths[i + 1]) {
            return false;
        }
    }
    return true;
}

bool MlpParams::operator==(const MlpParams& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& a = layers[i];
        const auto& b = other.layers[i];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
            a.bias.size() != b.bias.size() || a.weight != b.weight || a.bias != b.bias) {
            return false;
        }
    }
    return true;
}

MlpParams init(const MlpSpec& spec, InitScheme scheme, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    MlpParams p;
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        const int in = spec.widths[i];
        const int out = spec.widths[i + 1];
        Layer l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
        const double w_std =
            scheme == InitScheme::xavier ? std::sqrt(2.0 / static_cast<double>(in + out)) : 1.0;
        for (int c = 0; c < in; ++c) {
            for (int r = 0; r < out; ++r) l.weight(r, c) = w_std * normal(rng);
        }
        for (int r = 0; r < out; ++r) {
            l.bias(r) = scheme == InitScheme::xavier ? 0.0 : normal(rng);
        }
        p.layers.push_back(std::move(l));
    }
    return p;
}

MlpParams zeros_like(const MlpSpec& spec) {
    spec.validate();
    MlpParams p;
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        p.layers.push_back({Eigen::MatrixXd::Zero(spec.widths[i + 1], spec.widths[i]),
                            Eigen::VectorXd::Zero(spec.widths[i + 1])});
    }
    return p;
}

MlpNodes declare(Graph& g, const MlpSpec& spec, const std::string& prefix) {
    spec.validate();
    MlpNodes nodes{spec, {}, {}};
    for (std::size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        const auto tag = prefix + "." + std::to_string(i);
        nodes.weights.push_back(g.parameter({spec.widths[i + 1], spec.widths[i]}, tag + ".W"));
        nodes.biases.push_back(g.parameter({spec.widths[i + 1], 1}, tag + ".b"));
    }
    return nodes;
}

void bind(Graph& g, const MlpNodes& nodes, const MlpParams& params) {
    if (!params.matches(nodes.spec)) throw contract_error("parameters do not match the network spec");
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        g.set_value(nodes.weights[i], params.layers[i].weight);
        g.set_value(nodes.biases[i], params.layers[i].bias);
    }
}

MlpParams gather(const graph::GradientMap& grads, const MlpNodes& nodes) {
    MlpParams p;
    for (std::size_t i = 0; i < nodes.weights.size(); ++i) {
        p.layers.push_back({grads.at(nodes.weights[i]), grads.at(nodes.biases[i])});
    }
    return p;
}

namespace {

NodeId affine(Graph& g, const MlpNodes& nodes, std::size_t layer, NodeId h, NodeId ones_row) {
    // Bias broadcast across the batch as the outer product b * 1^T.
    return g.add(g.matmul(nodes.weights[layer], h), g.matmul(nodes.biases[layer], ones_row));
}

NodeId activate(Graph& g, Activation a, NodeId x) {
    switch (a) {
    case Activation::linear: return x;
    case Activation::tanh: return g.tanh(x);
    case Activation::relu: return g.relu(x);
    }
    return x;
}

void check_input(const Graph& g, const MlpNodes& nodes, NodeId input) {
    const Shape s = g.shape(input);
    if (s.rows != nodes.spec.input_dim()) {
        throw construction_error("network expects " + std::to_string(nodes.spec.input_dim()) +
                                 " input rows, got shape " + graph::to_string(s));
    }
}

}  // namespace

NodeId forward(Graph& g, const MlpNodes& nodes, NodeId input) {
    check_input(g, nodes, input);
    const NodeId ones_row = g.constant(Shape{1, g.shape(input).cols}, 1.0);
    NodeId h = input;
    const std::size_t n_layers = nodes.weights.size();
    for (std::size_t i = 0; i < n_layers; ++i) {
        const Activation act = i + 1 == n_layers ? nodes.spec.output : nodes.spec.hidden;
        h = activate(g, act, affine(g, nodes, i, h, ones_row));
    }
    return h;
}

TangentResult forward_tangents(Graph& g, const MlpNodes& nodes, NodeId input, std::span<const NodeId> seeds) {
    check_input(g, nodes, input);
    if (nodes.spec.hidden == Activation::relu || nodes.spec.output == Activation::relu) {
        throw contract_error("tangent propagation requires smooth activations; relu is not supported");
    }
    const Shape in_shape = g.shape(input);
    for (NodeId s : seeds) {
        if (!(g.shape(s) == in_shape)) {
            throw construction_error("tangent seed shape " + graph::to_string(g.shape(s)) +
                                     " does not match input " + graph::to_string(in_shape));
        }
    }

    const NodeId ones_row = g.constant(Shape{1, in_shape.cols}, 1.0);
    NodeId h = input;
    std::vector<NodeId> dots(seeds.begin(), seeds.end());
    const std::size_t n_layers = nodes.weights.size();
    for (std::size_t i = 0; i < n_layers; ++i) {
        const Activation act = i + 1 == n_layers ? nodes.spec.output : nodes.spec.hidden;
        const NodeId a = affine(g, nodes, i, h, ones_row);
        for (NodeId& d : dots) d = g.matmul(nodes.weights[i], d);
        if (act == Activation::tanh) {
            h = g.tanh(a);
            // tanh'(a) = 1 - tanh(a)^2, shared by every tangent chain.
            const NodeId one = g.constant(g.shape(h), 1.0);
            const NodeId slope = g.subtract(one, g.square(h));
            for (NodeId& d : dots) d = g.multiply(slope, d);
        } else {
            h = a;
        }
    }
    return {h, std::move(dots)};
}

NodeId coordinate_seed(Graph& g, int d_in, Eigen::Index batch, int k) {
    if (k < 0 || k >= d_in) {
        throw contract_error("tangent coordinate " + std::to_string(k) + " out of range for input dimension " +
                             std::to_string(d_in));
    }
    graph::Tensor seed = graph::Tensor::Zero(d_in, batch);
    seed.row(k).setOnes();
    return g.constant(std::move(seed));
}

Eigen::MatrixXd evaluate(const MlpSpec& spec, const MlpParams& params, const Eigen::MatrixXd& input) {
    Graph g;
    const auto nodes = declare(g, spec, "net");
    const NodeId in = g.input({input.rows(), input.cols()}, "input");
    const NodeId out = forward(g, nodes, in);
    bind(g, nodes, params);
    g.eval({{in, input}});
    return g.value(out);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> evaluate_tangent(const MlpSpec& spec, const MlpParams& params,
                                                             const Eigen::MatrixXd& input, int k) {
    Graph g;
    const auto nodes = declare(g, spec, "net");
    const NodeId in = g.input({input.rows(), input.cols()}, "input");
    const NodeId seed = coordinate_seed(g, spec.input_dim(), input.cols(), k);
    const auto res = forward_tangents(g, nodes, in, std::span<const NodeId>(&seed, 1));
    bind(g, nodes, params);
    g.eval({{in, input}});
    return {g.value(res.output), g.value(res.tangents.front())};
}

}  // namespace pinn::net
