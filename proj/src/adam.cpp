#include "tsn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace tsn {

Tensor& ParamSet::add(const std::string& name, Tensor t) {
    if (index_.count(name))
        throw std::invalid_argument("ParamSet: duplicate parameter " + name);
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
}

Tensor& ParamSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end())
        throw std::out_of_range("ParamSet: missing parameter " + name);
    return items_[it->second].second;
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
        throw std::out_of_range("ParamSet: missing parameter " + name);
    return items_[it->second].second;
}

bool ParamSet::contains(const std::string& name) const {
    return index_.count(name) > 0;
}

void ParamSet::set(const std::string& name, Tensor t) {
    auto it = index_.find(name);
    if (it == index_.end())
        throw std::out_of_range("ParamSet: missing parameter " + name);
    items_[it->second].second = std::move(t);
}

void ParamSet::zero_grads() {
    for (auto& [name, t] : items_) t.zero_grad();
}

void ParamSet::merge(const std::string& prefix, const ParamSet& other) {
    for (const auto& [name, t] : other.items())
        add(prefix + "." + name, t);
}

void AdamState::init(const ParamSet& params) {
    step_count = 0;
    m.clear();
    v.clear();
    for (const auto& [name, t] : params.items()) {
        m.emplace_back(t.size(), 0.0f);
        v.emplace_back(t.size(), 0.0f);
    }
}

void adam_step(ParamSet& params, AdamState& state) {
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: state not initialized for this ParamSet");
    ++state.step_count;
    const double bc1 = 1.0 - std::pow(state.beta1, state.step_count);
    const double bc2 = 1.0 - std::pow(state.beta2, state.step_count);
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& t = params.items()[p].second;
        if (!t.has_grad()) continue;
        if (state.m[p].size() != t.size())
            throw std::invalid_argument("adam_step: moment shape mismatch for " +
                                        params.items()[p].first);
        const std::vector<float>& g = t.grad();
        std::vector<float>& data = t.data();
        for (std::size_t i = 0; i < g.size(); ++i) {
            state.m[p][i] = state.beta1 * state.m[p][i] + (1.0f - state.beta1) * g[i];
            state.v[p][i] =
                state.beta2 * state.v[p][i] + (1.0f - state.beta2) * g[i] * g[i];
            const double mhat = state.m[p][i] / bc1;
            const double vhat = state.v[p][i] / bc2;
            data[i] -= static_cast<float>(state.lr * mhat /
                                          (std::sqrt(vhat) + state.eps));
        }
    }
}

} // namespace tsn
