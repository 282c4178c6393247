// net.hpp - multilayer perceptrons emitted into a graph::Graph.
//
// Layer i computes h_i = act(W_i h_{i-1} + b_i) with W_i stored (out x in).
// Batches are laid out column-wise: an input node of shape d_in x N yields an
// output node of shape d_out x N.
#pragma once

#include "pinn/graph.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pinn::net {

enum class Activation { linear, tanh, relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct MlpSpec {
    std::vector<int> widths;  // [d_in, h_1, ..., h_L, d_out]
    Activation hidden = Activation::tanh;
    Activation output = Activation::linear;

    int input_dim() const { return widths.front(); }
    int output_dim() const { return widths.back(); }
    std::size_t layer_count() const { return widths.size() - 1; }

    // Throws contract_error unless there is at least one hidden layer and
    // every width is positive.
    void validate() const;

    bool operator==(const MlpSpec&) const = default;
};

struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

struct MlpParams {
    std::vector<Layer> layers;

    std::size_t scalar_count() const;
    bool matches(const MlpSpec& spec) const;
    bool operator==(const MlpParams&) const;
};

enum class InitScheme { standard_normal, xavier };

std::string_view to_string(InitScheme s);
InitScheme parse_init_scheme(std::string_view name);

MlpParams init(const MlpSpec& spec, InitScheme scheme, std::uint64_t seed);

// All-zero parameters of the right shapes (used for gradient buffers).
MlpParams zeros_like(const MlpSpec& spec);

// Parameter nodes of one network inside a graph.
struct MlpNodes {
    MlpSpec spec;
    std::vector<graph::NodeId> weights;
    std::vector<graph::NodeId> biases;
};

MlpNodes declare(graph::Graph& g, const MlpSpec& spec, const std::string& prefix);
void bind(graph::Graph& g, const MlpNodes& nodes, const MlpParams& params);
// Collects the gradient entries for `nodes` into parameter-shaped buffers.
MlpParams gather(const graph::GradientMap& grads, const MlpNodes& nodes);

// Emits the layer chain; `input` must be d_in x N.
graph::NodeId forward(graph::Graph& g, const MlpNodes& nodes, graph::NodeId input);

struct TangentResult {
    graph::NodeId output;
    std::vector<graph::NodeId> tangents;  // one per seed direction, d_out x N
};

// Emits the primal chain together with one tangent chain per seed:
//   a_i = W_i h_{i-1} + b_i,  h_i = act(a_i),  hdot_i = act'(a_i) * (W_i hdot_{i-1})
// Every seed must have the input's shape. Seeds may be arbitrary graph
// nodes, so directions that themselves depend on parameters are allowed.
// Only smooth activations are accepted (relu hidden layers are rejected).
TangentResult forward_tangents(graph::Graph& g, const MlpNodes& nodes, graph::NodeId input,
                               std::span<const graph::NodeId> seeds);

// Coordinate tangent e_k for every column of a d_in x N input.
graph::NodeId coordinate_seed(graph::Graph& g, int d_in, Eigen::Index batch, int k);

// Convenience: builds a throwaway graph and evaluates the network on a
// column-batched input.
Eigen::MatrixXd evaluate(const MlpSpec& spec, const MlpParams& params, const Eigen::MatrixXd& input);

// Convenience: output and directional derivative along coordinate k.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> evaluate_tangent(const MlpSpec& spec, const MlpParams& params,
                                                             const Eigen::MatrixXd& input, int k);

}  // namespace pinn::net
