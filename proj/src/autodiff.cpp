#include "sail/autodiff.hpp"

#include "sail/error.hpp"

namespace sail {

std::size_t ParamStore::add(const std::string& name, Tensor init) {
    require(!index_.contains(name), ErrorKind::invalid_argument, "duplicate parameter name: " + name);
    const std::size_t i = values_.size();
    grads_.emplace_back(init.dims(), 0.0);
    values_.push_back(std::move(init));
    names_.push_back(name);
    index_.emplace(name, i);
    return i;
}

std::size_t ParamStore::index(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), ErrorKind::invalid_argument, "unknown parameter: " + name);
    return it->second;
}

std::size_t ParamStore::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& g : grads_) g.fill(0.0);
}

Gradients ParamStore::zeros_like() const {
    Gradients out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.emplace_back(v.dims(), 0.0);
    return out;
}

void ParamStore::add_to_grads(const Gradients& other, double scale) {
    require(other.size() == grads_.size(), ErrorKind::dimension_mismatch, "gradient buffer does not match parameter store");
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        require(other[i].same_dims(grads_[i]), ErrorKind::dimension_mismatch, "gradient dims mismatch for " + names_[i]);
        auto dst = grads_[i].data();
        auto src = other[i].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
    }
}

const Tensor& Var::value() const { return graph->value(*this); }

Var Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Graph::input(Tensor value) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = true;
    return push(std::move(n));
}

Var Graph::param(const std::string& name) {
    require(params_ != nullptr, ErrorKind::invalid_argument, "graph has no parameter store");
    return param(params_->index(name));
}

Var Graph::param(std::size_t index) {
    require(params_ != nullptr && index < params_->size(), ErrorKind::invalid_argument, "parameter index out of range");
    if (param_nodes_[index] != npos) return Var{this, param_nodes_[index]};
    Node n;
    n.value = params_->value(index);
    n.needs_grad = true;
    n.param_index = index;
    Var v = push(std::move(n));
    param_nodes_[index] = v.id;
    return v;
}

Var Graph::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    for (auto in : inputs) {
        require(in < nodes_.size(), ErrorKind::invalid_argument, "operation input is not an earlier node");
        n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
    }
    n.inputs = std::move(inputs);
    if (n.needs_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

Tensor Graph::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.empty()) return Tensor(n.value.dims(), 0.0);
    return n.grad;
}

Tensor& Graph::grad_mut(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(n.value.dims(), 0.0);
    return n.grad;
}

void Graph::backward(Var loss, double seed) {
    require(loss.graph == this, ErrorKind::invalid_argument, "loss belongs to another graph");
    require(nodes_[loss.id].value.size() == 1, ErrorKind::invalid_argument, "backward needs a scalar loss");
    for (std::size_t id = 0; id < nodes_.size(); ++id)
        for (auto in : nodes_[id].inputs)
            require(in < id, ErrorKind::invalid_argument, "recorded graph is not acyclic");
    for (auto& n : nodes_) n.grad = Tensor();
    grad_mut(loss.id)[0] = seed;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.grad.empty() || !n.backward) continue;
        n.backward(*this, id);
    }
}

void Graph::collect_param_grads(Gradients& out) const {
    for (const auto& n : nodes_) {
        if (n.param_index == npos || n.grad.empty()) continue;
        auto dst = out[n.param_index].data();
        auto src = n.grad.data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
}

}  // namespace sail
