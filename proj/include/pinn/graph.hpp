// graph.hpp - reverse-mode differentiation over an append-only node list.
//
// Every node holds a dense 64-bit matrix. Nodes are appended in topological
// order (inputs always have smaller indices), so a forward sweep over the
// node list evaluates the graph and a backward sweep accumulates adjoints.
//
// Usage:
//   graph::Graph g;
//   auto w = g.parameter({1, 1}, "w");
//   auto x = g.input({1, 1}, "x");
//   auto y = g.tanh(g.multiply(w, x));
//   g.set_value(w, ...);
//   g.eval({{x, ...}});
//   auto grads = g.grad(y);
#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace pinn::graph {

using Tensor = Eigen::MatrixXd;

struct NodeId {
    std::size_t index = 0;

    bool operator==(const NodeId&) const = default;
    auto operator<=>(const NodeId&) const = default;
};

struct Shape {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;

    bool operator==(const Shape&) const = default;
    bool is_scalar() const { return rows == 1 && cols == 1; }
    Eigen::Index size() const { return rows * cols; }
};

std::string to_string(const Shape& s);

enum class OpKind {
    constant,
    parameter,
    input,
    matmul,
    add,
    subtract,
    multiply,  // elementwise
    scale,     // by a scalar literal
    tanh,
    relu,
    square,
    mean,
    sum,
    concat,    // stacks inputs vertically; all inputs share a column count
};

std::string_view to_string(OpKind kind);
// Throws construction_error for unknown names.
OpKind parse_op_kind(std::string_view name);

// Literal payload of `build`: nothing, a shape (parameter / input), a tensor
// (constant) or a scalar factor (scale).
using Literal = std::variant<std::monostate, Shape, Tensor, double>;

// Parameter gradients, keyed by parameter node, in ascending node order.
class GradientMap {
public:
    const Tensor& at(NodeId id) const;
    bool contains(NodeId id) const { return entries_.count(id.index) != 0; }
    std::size_t size() const { return entries_.size(); }

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

private:
    friend class Graph;
    std::map<std::size_t, Tensor> entries_;
};

using Bindings = std::vector<std::pair<NodeId, Tensor>>;

class Graph {
public:
    Graph() = default;

    // Generic constructor; the typed helpers below forward here.
    NodeId build(OpKind kind, std::span<const NodeId> inputs, Literal literal = {});
    NodeId build(OpKind kind, std::initializer_list<NodeId> inputs, Literal literal = {}) {
        return build(kind, std::span<const NodeId>(inputs.begin(), inputs.size()), std::move(literal));
    }

    NodeId constant(Tensor value);
    NodeId constant(Shape shape, double fill);
    NodeId parameter(Shape shape, std::string name = {});
    NodeId input(Shape shape, std::string name = {});

    NodeId matmul(NodeId a, NodeId b) { return build(OpKind::matmul, {a, b}); }
    NodeId add(NodeId a, NodeId b) { return build(OpKind::add, {a, b}); }
    NodeId subtract(NodeId a, NodeId b) { return build(OpKind::subtract, {a, b}); }
    NodeId multiply(NodeId a, NodeId b) { return build(OpKind::multiply, {a, b}); }
    NodeId scale(NodeId a, double factor) { return build(OpKind::scale, {a}, factor); }
    NodeId tanh(NodeId a) { return build(OpKind::tanh, {a}); }
    NodeId relu(NodeId a) { return build(OpKind::relu, {a}); }
    NodeId square(NodeId a) { return build(OpKind::square, {a}); }
    NodeId mean(NodeId a) { return build(OpKind::mean, {a}); }
    NodeId sum(NodeId a) { return build(OpKind::sum, {a}); }
    NodeId concat(std::span<const NodeId> parts) { return build(OpKind::concat, parts); }
    NodeId concat(std::initializer_list<NodeId> parts) { return build(OpKind::concat, parts); }

    std::size_t size() const { return nodes_.size(); }
    OpKind kind(NodeId id) const;
    Shape shape(NodeId id) const;
    const std::string& name(NodeId id) const;
    std::span<const NodeId> parameters() const { return parameters_; }

    // Parameter values persist across evaluations until overwritten.
    void set_value(NodeId param, const Tensor& value);

    // Forward sweep. Every input node must appear in `bindings` and every
    // parameter must have been set.
    std::span<const Tensor> eval(const Bindings& bindings);

    // Value after the last eval.
    const Tensor& value(NodeId id) const;
    double scalar(NodeId id) const;

    // Reverse sweep from a scalar root; returns d(root)/d(p) for every
    // parameter p (zero for parameters the root does not depend on).
    GradientMap grad(NodeId root);

    // Adjoint of any node after the last grad (zero-sized if unreached).
    const Tensor& adjoint(NodeId id) const;

private:
    struct Node {
        OpKind kind;
        std::vector<NodeId> inputs;
        Shape shape;
        double factor = 0.0;
        bool depends_on_parameter = false;
        std::string name;
    };

    void check_id(NodeId id) const;
    void accumulate(NodeId target, const Tensor& contribution);

    std::vector<Node> nodes_;
    std::vector<NodeId> parameters_;
    std::vector<Tensor> values_;
    std::vector<Tensor> adjoints_;
    std::vector<bool> param_set_;
    bool evaluated_ = false;
};

}  // namespace pinn::graph
