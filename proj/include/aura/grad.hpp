#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "aura/ops.hpp"
#include "aura/tensor.hpp"

namespace aura::diff {

// Named leaf tensor with a persistent gradient accumulator.
class Parameter {
public:
    Parameter(std::string name, Tensor value) : name_(std::move(name)), value_(std::move(value)) {}

    const std::string& name() const { return name_; }
    const Tensor& tensor() const { return value_; }
    Tensor& tensor() { return value_; }
    const std::vector<double>& grad() const { return value_.grad(); }
    std::vector<double>& mutable_grad() { return value_.node()->grad; }
    std::vector<double>& values() { return value_.mutable_data(); }
    const std::vector<double>& values() const { return value_.data(); }
    std::size_t size() const { return value_.size(); }
    void zero_grad() { value_.zero_grad(); }

private:
    std::string name_;
    Tensor value_;
};

// Ordered registry of model parameters. Order is the registration order, which
// fixes initialization and optimizer-update order for reproducibility.
class ParamStore {
public:
    Tensor add(const std::string& name, Tensor init) {
        if (index_.count(name)) throw ValueError("duplicate parameter name: " + name);
        Tensor leaf = Tensor::leaf(init.shape(), init.data());
        index_[name] = params_.size();
        params_.emplace_back(name, leaf);
        return leaf;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Parameter& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ValueError("unknown parameter: " + name);
        return params_[it->second];
    }
    const Parameter& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ValueError("unknown parameter: " + name);
        return params_[it->second];
    }

    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }
    std::size_t size() const { return params_.size(); }

    std::size_t total_scalars() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.size();
        return n;
    }

    void zero_grads() {
        for (auto& p : params_) p.zero_grad();
    }

    std::vector<std::vector<double>> snapshot_values() const {
        std::vector<std::vector<double>> out;
        out.reserve(params_.size());
        for (const auto& p : params_) out.push_back(p.values());
        return out;
    }

    void restore_values(const std::vector<std::vector<double>>& snap) {
        if (snap.size() != params_.size())
            throw ValueError("parameter snapshot size mismatch");
        for (std::size_t i = 0; i < snap.size(); ++i) {
            if (snap[i].size() != params_[i].size())
                throw ValueError("parameter snapshot shape mismatch at " + params_[i].name());
            params_[i].values() = snap[i];
        }
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

// Central-difference verification of recorded gradients.
//
// `f` must be a deterministic scalar function of the given parameters; it is
// re-evaluated at perturbed parameter values, so it must read them through the
// ParamStore handles, not captured copies.
inline GradCheckReport finite_diff_check(const std::function<Tensor()>& f,
                                         ParamStore& params, double step) {
    if (step <= 0.0) throw ValueError("finite_diff_check: step must be positive");

    const double l0 = f().scalar_value();
    const double l1 = f().scalar_value();
    if (std::memcmp(&l0, &l1, sizeof(double)) != 0)
        throw ValueError("finite_diff_check: f is not deterministic (" + std::to_string(l0) +
                         " vs " + std::to_string(l1) + ")");

    params.zero_grads();
    Tensor loss = f();
    backward(loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.grad());

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& vals = params[pi].values();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double saved = vals[i];
            vals[i] = saved + step;
            const double fp = f().scalar_value();
            vals[i] = saved - step;
            const double fm = f().scalar_value();
            vals[i] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            const double a = analytic[pi][i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            const double rel = std::fabs(a - numeric) / denom;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = params[pi].name();
                report.worst_index = i;
            }
        }
    }
    params.zero_grads();
    return report;
}

}  // namespace aura::diff
