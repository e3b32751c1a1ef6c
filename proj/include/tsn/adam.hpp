#pragma once

#include "tsn/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace tsn {

// Named, ordered parameter collection. Iteration order is insertion order so
// optimizer sweeps and checkpoints are deterministic.
class ParamSet {
  public:
    Tensor& add(const std::string& name, Tensor t);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const;
    void set(const std::string& name, Tensor t); // replace existing storage

    std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
    const std::vector<std::pair<std::string, Tensor>>& items() const {
        return items_;
    }
    std::size_t size() const { return items_.size(); }

    void zero_grads();
    // Append every entry of other under "prefix." names.
    void merge(const std::string& prefix, const ParamSet& other);

  private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::map<std::string, std::size_t> index_;
};

struct AdamState {
    float lr = 0.01f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    std::size_t step_count = 0;
    // One (m, v) pair per parameter, keyed by position in the ParamSet.
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;

    void init(const ParamSet& params);
};

// Standard bias-corrected Adam update over every parameter with an
// accumulated gradient. Parameters without gradients are left untouched.
void adam_step(ParamSet& params, AdamState& state);

} // namespace tsn
