#pragma once

#include "sail/tensor.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sail {

/// Gradient buffer aligned with a ParamStore's parameter order.
using Gradients = std::vector<Tensor>;

/// Named parameters with gradient accumulators, iterated in insertion order.
class ParamStore {
public:
    std::size_t add(const std::string& name, Tensor init);

    bool contains(const std::string& name) const { return index_.contains(name); }
    std::size_t index(const std::string& name) const;
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t scalar_count() const noexcept;

    const std::string& name(std::size_t i) const { return names_[i]; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    Tensor& value(std::size_t i) { return values_[i]; }
    const Tensor& value(std::size_t i) const { return values_[i]; }
    Tensor& value(const std::string& name) { return values_[index(name)]; }
    const Tensor& value(const std::string& name) const { return values_[index(name)]; }

    Tensor& grad(std::size_t i) { return grads_[i]; }
    const Tensor& grad(std::size_t i) const { return grads_[i]; }
    Tensor& grad(const std::string& name) { return grads_[index(name)]; }
    Gradients& grads() noexcept { return grads_; }
    const Gradients& grads() const noexcept { return grads_; }

    void zero_grad();
    Gradients zeros_like() const;
    /// grads += other * scale, elementwise in parameter order.
    void add_to_grads(const Gradients& other, double scale = 1.0);

    friend bool operator==(const ParamStore& a, const ParamStore& b) {
        return a.names_ == b.names_ && a.values_ == b.values_;
    }

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::vector<Tensor> grads_;
    std::unordered_map<std::string, std::size_t> index_;
};

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
    Graph* graph = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const std::vector<std::size_t>& dims() const { return value().dims(); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

/// Dynamically recorded computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so every node's inputs have
/// smaller ids and a reverse sweep is a valid topological order.
class Graph {
public:
    using BackwardFn = std::function<void(Graph&, std::size_t self)>;

    Graph() = default;
    explicit Graph(const ParamStore& params) : params_(&params), param_nodes_(params.size(), npos) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var constant(Tensor value);
    /// Differentiable leaf that is not a stored parameter.
    Var input(Tensor value);
    /// Leaf bound to a ParamStore entry; one node per parameter per graph.
    Var param(const std::string& name);
    Var param(std::size_t index);

    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
    const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

    /// Gradient of the last backward() target w.r.t. node; zeros if unreached.
    Tensor grad(Var v) const;
    /// Gradient storage for a node, allocated as zeros on first use.
    Tensor& grad_mut(std::size_t id);
    bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

    /// Seeds d(loss)/d(loss) = seed and sweeps the tape backwards.
    /// Rejects a non-scalar loss and any node whose inputs do not precede it.
    void backward(Var loss, double seed = 1.0);

    /// Adds parameter-leaf gradients into `out` (aligned with the ParamStore).
    void collect_param_grads(Gradients& out) const;

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        std::size_t param_index = npos;
        bool needs_grad = false;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
    const ParamStore* params_ = nullptr;
    std::vector<std::size_t> param_nodes_;
};

}  // namespace sail
