#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

// Tape-based reverse-mode autodiff over row-major float tensors. Tensors are
// cheap handles onto shared nodes; ops record parents and a backward closure.
// Values are float32; reductions accumulate in double (see kernels.hpp).

namespace tsn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Thread-local switch: while disabled, ops produce leaf values with no tape.
bool grad_enabled();

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool prev_;
};

struct TensorNode {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad; // allocated lazily, same length as data
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn; // empty for leaves

    void ensure_grad();
};

class Tensor {
  public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<float> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, float value, bool requires_grad = false);
    static Tensor scalar(float value, bool requires_grad = false);
    // Uniform on [-bound, bound].
    static Tensor uniform(Shape shape, float bound, std::mt19937& rng,
                          bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t size() const { return node_->data.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t rank() const { return node_->shape.size(); }

    const std::vector<float>& data() const { return node_->data; }
    std::vector<float>& data() { return node_->data; }
    float item() const;

    bool requires_grad() const { return node_->requires_grad; }
    const std::vector<float>& grad() const;
    bool has_grad() const { return !node_->grad.empty(); }
    void zero_grad();

    std::shared_ptr<TensorNode> node() const { return node_; }

    // Same storage, no tape link, requires_grad off.
    Tensor detach() const;

    static Tensor from_node(std::shared_ptr<TensorNode> node) {
        Tensor t;
        t.node_ = std::move(node);
        return t;
    }

  private:
    std::shared_ptr<TensorNode> node_;
};

// Reverse sweep from a scalar loss; accumulates into .grad of every
// requires_grad node reachable on the tape. Each node's backward rule runs
// exactly once.
void backward(const Tensor& loss);

// Helper used by ops: make a node that requires grad iff any parent does and
// the tape is enabled. If not, parents/backward are dropped.
Tensor make_op(Shape shape, std::vector<float> data,
               std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backward_fn);

} // namespace tsn
