#include "pinn/graph.hpp"

#include "pinn/errors.hpp"

#include <array>
#include <cmath>

namespace pinn::graph {

namespace {

constexpr std::array<std::pair<OpKind, std::string_view>, 14> kOpNames{{
    {OpKind::constant, "constant"},
    {OpKind::parameter, "parameter"},
    {OpKind::input, "input"},
    {OpKind::matmul, "matmul"},
    {OpKind::add, "add"},
    {OpKind::subtract, "subtract"},
    {OpKind::multiply, "multiply"},
    {OpKind::scale, "scale"},
    {OpKind::tanh, "tanh"},
    {OpKind::relu, "relu"},
    {OpKind::square, "square"},
    {OpKind::mean, "mean"},
    {OpKind::sum, "sum"},
    {OpKind::concat, "concat"},
}};

std::size_t expected_arity(OpKind kind) {
    switch (kind) {
    case OpKind::constant:
    case OpKind::parameter:
    case OpKind::input:
        return 0;
    case OpKind::matmul:
    case OpKind::add:
    case OpKind::subtract:
    case OpKind::multiply:
        return 2;
    case OpKind::scale:
    case OpKind::tanh:
    case OpKind::relu:
    case OpKind::square:
    case OpKind::mean:
    case OpKind::sum:
        return 1;
    case OpKind::concat:
        return 0;  // variadic, checked separately
    }
    return 0;
}

bool all_finite(const Tensor& t) { return t.allFinite(); }

}  // namespace

std::string to_string(const Shape& s) {
    return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

std::string_view to_string(OpKind kind) {
    for (const auto& [k, n] : kOpNames) {
        if (k == kind) return n;
    }
    return "unknown";
}

OpKind parse_op_kind(std::string_view name) {
    for (const auto& [k, n] : kOpNames) {
        if (n == name) return k;
    }
    throw construction_error("unknown op-kind '" + std::string(name) + "'");
}

const Tensor& GradientMap::at(NodeId id) const {
    auto it = entries_.find(id.index);
    if (it == entries_.end()) {
        throw contract_error("no gradient entry for node " + std::to_string(id.index));
    }
    return it->second;
}

void Graph::check_id(NodeId id) const {
    if (id.index >= nodes_.size()) {
        throw construction_error("node " + std::to_string(id.index) + " does not exist in this graph");
    }
}

NodeId Graph::build(OpKind kind, std::span<const NodeId> inputs, Literal literal) {
    if (std::string_view(to_string(kind)) == "unknown") {
        throw construction_error("unknown op-kind " + std::to_string(static_cast<int>(kind)));
    }
    for (NodeId in : inputs) check_id(in);

    Node node{kind, std::vector<NodeId>(inputs.begin(), inputs.end()), {}, 0.0, false, {}};
    if (kind != OpKind::concat && inputs.size() != expected_arity(kind)) {
        throw construction_error(std::string(to_string(kind)) + " expects " +
                                 std::to_string(expected_arity(kind)) + " inputs, got " +
                                 std::to_string(inputs.size()));
    }

    auto in_shape = [&](std::size_t i) { return nodes_[inputs[i].index].shape; };
    auto mismatch = [&](Shape a, Shape b) {
        return construction_error(std::string(to_string(kind)) + ": shape mismatch " + to_string(a) +
                                  " vs " + to_string(b));
    };

    Tensor constant_value;
    switch (kind) {
    case OpKind::constant: {
        auto* t = std::get_if<Tensor>(&literal);
        if (t == nullptr) throw construction_error("constant requires a tensor literal");
        constant_value = std::move(*t);
        node.shape = {constant_value.rows(), constant_value.cols()};
        break;
    }
    case OpKind::parameter:
    case OpKind::input: {
        auto* s = std::get_if<Shape>(&literal);
        if (s == nullptr || s->rows < 1 || s->cols < 1) {
            throw construction_error(std::string(to_string(kind)) + " requires a positive shape literal");
        }
        node.shape = *s;
        break;
    }
    case OpKind::matmul: {
        Shape a = in_shape(0), b = in_shape(1);
        if (a.cols != b.rows) throw mismatch(a, b);
        node.shape = {a.rows, b.cols};
        break;
    }
    case OpKind::add:
    case OpKind::subtract:
    case OpKind::multiply: {
        Shape a = in_shape(0), b = in_shape(1);
        if (!(a == b)) throw mismatch(a, b);
        node.shape = a;
        break;
    }
    case OpKind::scale: {
        auto* f = std::get_if<double>(&literal);
        if (f == nullptr) throw construction_error("scale requires a scalar literal");
        node.factor = *f;
        node.shape = in_shape(0);
        break;
    }
    case OpKind::tanh:
    case OpKind::relu:
    case OpKind::square:
        node.shape = in_shape(0);
        break;
    case OpKind::mean:
    case OpKind::sum:
        node.shape = {1, 1};
        break;
    case OpKind::concat: {
        if (inputs.empty()) throw construction_error("concat requires at least one input");
        Shape first = in_shape(0);
        Eigen::Index rows = 0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (in_shape(i).cols != first.cols) throw mismatch(first, in_shape(i));
            rows += in_shape(i).rows;
        }
        node.shape = {rows, first.cols};
        break;
    }
    }

    node.depends_on_parameter = kind == OpKind::parameter;
    for (NodeId in : inputs) {
        node.depends_on_parameter = node.depends_on_parameter || nodes_[in.index].depends_on_parameter;
    }

    NodeId id{nodes_.size()};
    nodes_.push_back(std::move(node));
    values_.emplace_back(std::move(constant_value));
    adjoints_.emplace_back();
    param_set_.push_back(false);
    if (kind == OpKind::parameter) parameters_.push_back(id);
    evaluated_ = false;
    return id;
}

NodeId Graph::constant(Tensor value) { return build(OpKind::constant, {}, std::move(value)); }

NodeId Graph::constant(Shape shape, double fill) {
    return constant(Tensor::Constant(shape.rows, shape.cols, fill));
}

NodeId Graph::parameter(Shape shape, std::string name) {
    NodeId id = build(OpKind::parameter, {}, shape);
    nodes_[id.index].name = std::move(name);
    return id;
}

NodeId Graph::input(Shape shape, std::string name) {
    NodeId id = build(OpKind::input, {}, shape);
    nodes_[id.index].name = std::move(name);
    return id;
}

OpKind Graph::kind(NodeId id) const {
    check_id(id);
    return nodes_[id.index].kind;
}

Shape Graph::shape(NodeId id) const {
    check_id(id);
    return nodes_[id.index].shape;
}

const std::string& Graph::name(NodeId id) const {
    check_id(id);
    return nodes_[id.index].name;
}

void Graph::set_value(NodeId param, const Tensor& value) {
    check_id(param);
    const Node& n = nodes_[param.index];
    if (n.kind != OpKind::parameter) {
        throw contract_error("node " + std::to_string(param.index) + " is not a parameter");
    }
    if (value.rows() != n.shape.rows || value.cols() != n.shape.cols) {
        throw contract_error("parameter '" + n.name + "': shape mismatch " + to_string(n.shape) + " vs " +
                             to_string(Shape{value.rows(), value.cols()}));
    }
    values_[param.index] = value;
    param_set_[param.index] = true;
    evaluated_ = false;
}

std::span<const Tensor> Graph::eval(const Bindings& bindings) {
    std::vector<const Tensor*> bound(nodes_.size(), nullptr);
    for (const auto& [id, t] : bindings) {
        check_id(id);
        const Node& n = nodes_[id.index];
        if (n.kind != OpKind::input) {
            throw evaluation_error("node " + std::to_string(id.index) + " bound but is not an input");
        }
        if (t.rows() != n.shape.rows || t.cols() != n.shape.cols) {
            throw evaluation_error("input '" + n.name + "' (node " + std::to_string(id.index) +
                                   "): expected " + to_string(n.shape) + ", got " +
                                   to_string(Shape{t.rows(), t.cols()}));
        }
        bound[id.index] = &t;
    }

    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const Node& n = nodes_[k];
        auto in = [&](std::size_t i) -> const Tensor& { return values_[n.inputs[i].index]; };
        Tensor& out = values_[k];
        switch (n.kind) {
        case OpKind::constant:
            break;
        case OpKind::parameter:
            if (!param_set_[k]) {
                throw evaluation_error("parameter '" + n.name + "' (node " + std::to_string(k) +
                                       ") is not initialized");
            }
            break;
        case OpKind::input:
            if (bound[k] == nullptr) {
                throw evaluation_error("input '" + n.name + "' (node " + std::to_string(k) + ") is unbound");
            }
            out = *bound[k];
            break;
        case OpKind::matmul:
            // Coefficient-wise product: every output column is computed the
            // same way regardless of how many columns there are.
            out = in(0).lazyProduct(in(1));
            break;
        case OpKind::add:
            out = in(0) + in(1);
            break;
        case OpKind::subtract:
            out = in(0) - in(1);
            break;
        case OpKind::multiply:
            out = in(0).cwiseProduct(in(1));
            break;
        case OpKind::scale:
            out = n.factor * in(0);
            break;
        case OpKind::tanh:
            out = in(0).array().tanh().matrix();
            break;
        case OpKind::relu:
            out = in(0).cwiseMax(0.0);
            break;
        case OpKind::square:
            out = in(0).array().square().matrix();
            break;
        case OpKind::mean:
            out = Tensor::Constant(1, 1, in(0).mean());
            break;
        case OpKind::sum:
            out = Tensor::Constant(1, 1, in(0).sum());
            break;
        case OpKind::concat: {
            out.resize(n.shape.rows, n.shape.cols);
            Eigen::Index row = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                out.middleRows(row, in(i).rows()) = in(i);
                row += in(i).rows();
            }
            break;
        }
        }
    }
    evaluated_ = true;
    return values_;
}

const Tensor& Graph::value(NodeId id) const {
    check_id(id);
    if (!evaluated_ && nodes_[id.index].kind != OpKind::constant &&
        !(nodes_[id.index].kind == OpKind::parameter && param_set_[id.index])) {
        throw evaluation_error("graph has not been evaluated");
    }
    return values_[id.index];
}

double Graph::scalar(NodeId id) const {
    const Tensor& v = value(id);
    if (v.size() != 1) throw contract_error("node " + std::to_string(id.index) + " is not scalar");
    return v(0, 0);
}

void Graph::accumulate(NodeId target, const Tensor& contribution) {
    const Node& n = nodes_[target.index];
    if (!n.depends_on_parameter) return;
    Tensor& adj = adjoints_[target.index];
    if (adj.size() == 0) {
        adj = contribution;
    } else {
        adj += contribution;
    }
}

GradientMap Graph::grad(NodeId root) {
    check_id(root);
    if (!nodes_[root.index].shape.is_scalar()) {
        throw contract_error("grad root must be scalar, node " + std::to_string(root.index) + " is " +
                             to_string(nodes_[root.index].shape));
    }
    if (!evaluated_) throw evaluation_error("grad called before eval");

    for (auto& a : adjoints_) a.resize(0, 0);
    adjoints_[root.index] = Tensor::Ones(1, 1);

    for (std::size_t k = root.index + 1; k-- > 0;) {
        const Node& n = nodes_[k];
        const Tensor& adj = adjoints_[k];
        if (adj.size() == 0 || !n.depends_on_parameter) continue;
        if (!all_finite(adj)) {
            throw numeric_error("non-finite adjoint at node " + std::to_string(k) + " (" +
                                    std::string(to_string(n.kind)) + ")",
                                k);
        }
        auto in_id = [&](std::size_t i) { return n.inputs[i]; };
        auto in = [&](std::size_t i) -> const Tensor& { return values_[n.inputs[i].index]; };
        auto needs = [&](std::size_t i) { return nodes_[n.inputs[i].index].depends_on_parameter; };

        switch (n.kind) {
        case OpKind::constant:
        case OpKind::parameter:
        case OpKind::input:
            break;
        case OpKind::matmul:
            if (needs(0)) accumulate(in_id(0), adj * in(1).transpose());
            if (needs(1)) accumulate(in_id(1), in(0).transpose() * adj);
            break;
        case OpKind::add:
            if (needs(0)) accumulate(in_id(0), adj);
            if (needs(1)) accumulate(in_id(1), adj);
            break;
        case OpKind::subtract:
            if (needs(0)) accumulate(in_id(0), adj);
            if (needs(1)) accumulate(in_id(1), -adj);
            break;
        case OpKind::multiply:
            if (needs(0)) accumulate(in_id(0), adj.cwiseProduct(in(1)));
            if (needs(1)) accumulate(in_id(1), adj.cwiseProduct(in(0)));
            break;
        case OpKind::scale:
            accumulate(in_id(0), n.factor * adj);
            break;
        case OpKind::tanh: {
            const Tensor& y = values_[k];
            accumulate(in_id(0), (adj.array() * (1.0 - y.array().square())).matrix());
            break;
        }
        case OpKind::relu:
            // Subgradient at exactly zero is zero.
            accumulate(in_id(0), (adj.array() * (in(0).array() > 0.0).cast<double>()).matrix());
            break;
        case OpKind::square:
            accumulate(in_id(0), (2.0 * adj.array() * in(0).array()).matrix());
            break;
        case OpKind::mean: {
            const Tensor& x = in(0);
            accumulate(in_id(0), Tensor::Constant(x.rows(), x.cols(), adj(0, 0) / static_cast<double>(x.size())));
            break;
        }
        case OpKind::sum: {
            const Tensor& x = in(0);
            accumulate(in_id(0), Tensor::Constant(x.rows(), x.cols(), adj(0, 0)));
            break;
        }
        case OpKind::concat: {
            Eigen::Index row = 0;
            for (std::size_t i = 0; i < n.inputs.size(); ++i) {
                Eigen::Index r = nodes_[n.inputs[i].index].shape.rows;
                if (needs(i)) accumulate(in_id(i), adj.middleRows(row, r));
                row += r;
            }
            break;
        }
        }
    }

    GradientMap result;
    for (NodeId p : parameters_) {
        const Shape s = nodes_[p.index].shape;
        const Tensor& adj = adjoints_[p.index];
        result.entries_.emplace(p.index, adj.size() == 0 ? Tensor::Zero(s.rows, s.cols) : adj);
    }
    return result;
}

const Tensor& Graph::adjoint(NodeId id) const {
    check_id(id);
    return adjoints_[id.index];
}

}  // namespace pinn::graph
