#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "aura/error.hpp"
#include "aura/rng.hpp"

namespace aura::diff {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// Per-backward-call adjoint buffers, keyed by graph node. Fresh on every
// backward() so repeated calls accumulate only into leaf gradients.
using AdjointMap = std::unordered_map<const TensorNode*, std::vector<double>>;

struct TensorNode {
    Shape shape;
    std::vector<double> values;
    bool requires_grad = false;
    // Persistent gradient accumulator, leaves only.
    std::vector<double> grad;
    // Recorded parents and the rule that scatters this node's adjoint to them.
    std::vector<NodePtr> parents;
    std::function<void(const std::vector<double>&, AdjointMap&)> backprop;

    bool is_leaf() const { return parents.empty(); }
};

inline std::vector<double>& adjoint_of(AdjointMap& adj, const TensorNode* n) {
    auto& buf = adj[n];
    if (buf.empty()) buf.assign(numel(n->shape), 0.0);
    return buf;
}

// Value-semantics handle to a graph node. Copies share the node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor from(Shape shape, std::vector<double> values) {
        check_shape(shape, values.size());
        auto n = std::make_shared<TensorNode>();
        n->shape = std::move(shape);
        n->values = std::move(values);
        return Tensor(std::move(n));
    }

    static Tensor zeros(Shape shape) {
        std::size_t sz = numel(shape);
        return from(std::move(shape), std::vector<double>(sz, 0.0));
    }

    static Tensor full(Shape shape, double v) {
        std::size_t sz = numel(shape);
        return from(std::move(shape), std::vector<double>(sz, v));
    }

    static Tensor scalar(double v) { return from({1}, {v}); }

    // Leaf that participates in differentiation; grad is zero-initialized.
    static Tensor leaf(Shape shape, std::vector<double> values) {
        Tensor t = from(std::move(shape), std::move(values));
        t.node_->requires_grad = true;
        t.node_->grad.assign(t.size(), 0.0);
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t size() const { return node_->values.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape[i]; }

    // Rows/cols for the rank-2 (or rank-1, treated as a single row) view.
    std::size_t rows() const { return rank() == 2 ? dim(0) : 1; }
    std::size_t cols() const { return rank() == 2 ? dim(1) : dim(0); }

    const std::vector<double>& data() const { return node_->values; }
    std::vector<double>& mutable_data() { return node_->values; }
    double at(std::size_t i) const { return node_->values[i]; }
    double at(std::size_t r, std::size_t c) const { return node_->values[r * cols() + c]; }
    double scalar_value() const {
        if (size() != 1) throw DimError("scalar_value: tensor has shape " + shape_str(shape()));
        return node_->values[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    const std::vector<double>& grad() const { return node_->grad; }
    void zero_grad() { node_->grad.assign(node_->values.size(), 0.0); }

    NodePtr node() const { return node_; }
    TensorNode* raw() const { return node_.get(); }

private:
    static void check_shape(const Shape& shape, std::size_t n) {
        if (shape.empty()) throw DimError("tensor shape must have rank >= 1");
        for (std::size_t d : shape)
            if (d == 0) throw DimError("tensor dimensions must be positive, got " + shape_str(shape));
        if (numel(shape) != n)
            throw DimError("shape " + shape_str(shape) + " does not match value count " +
                           std::to_string(n));
    }

    NodePtr node_;
};

inline Tensor random_uniform(Shape shape, double lo, double hi, Rng& rng) {
    std::size_t n = numel(shape);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from(std::move(shape), std::move(v));
}

inline Tensor random_normal(Shape shape, double mean, double std, Rng& rng) {
    std::size_t n = numel(shape);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal(mean, std);
    return Tensor::from(std::move(shape), std::move(v));
}

// ---------------------------------------------------------------------------
// Reverse-mode sweep.
//
// Adjoints live in a per-call map; only leaf parameters accumulate into their
// persistent grad buffers. Calling backward twice on the same graph therefore
// doubles every parameter gradient exactly.
// ---------------------------------------------------------------------------
inline void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ValueError("backward requires a scalar loss tensor, got shape " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("<null>")));

    // Iterative post-order DFS: parents precede consumers in `order`.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> done;
    struct Frame {
        TensorNode* n;
        std::size_t next;
    };
    std::vector<Frame> stack;
    std::unordered_set<TensorNode*> on_stack;
    stack.push_back({loss.raw(), 0});
    on_stack.insert(loss.raw());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            TensorNode* p = f.n->parents[f.next++].get();
            if (!done.count(p) && !on_stack.count(p)) {
                stack.push_back({p, 0});
                on_stack.insert(p);
            }
        } else {
            order.push_back(f.n);
            done.insert(f.n);
            on_stack.erase(f.n);
            stack.pop_back();
        }
    }

    AdjointMap adj;
    adj[loss.raw()] = {1.0};

    // Reverse topological order: each node's adjoint is complete before its
    // backprop rule fires.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        auto found = adj.find(n);
        if (found == adj.end()) continue;
        if (n->backprop) n->backprop(found->second, adj);
    }

    for (TensorNode* n : order) {
        if (!n->requires_grad || !n->is_leaf()) continue;
        auto found = adj.find(n);
        if (found == adj.end()) continue;
        if (n->grad.size() != n->values.size()) n->grad.assign(n->values.size(), 0.0);
        for (std::size_t i = 0; i < n->grad.size(); ++i) n->grad[i] += found->second[i];
    }
}

}  // namespace aura::diff
