#include "tsn/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace tsn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

void TensorNode::ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data, bool requires_grad) {
    if (numel(shape) != data.size())
        throw std::invalid_argument("tensor: shape " + shape_str(shape) +
                                    " does not match data length " +
                                    std::to_string(data.size()));
    node_ = std::make_shared<TensorNode>();
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad && g_grad_enabled;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    std::vector<float> d(numel(shape), 0.0f);
    return Tensor(std::move(shape), std::move(d), requires_grad);
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
    std::vector<float> d(numel(shape), value);
    return Tensor(std::move(shape), std::move(d), requires_grad);
}

Tensor Tensor::scalar(float value, bool requires_grad) {
    return Tensor(Shape{}, std::vector<float>{value}, requires_grad);
}

Tensor Tensor::uniform(Shape shape, float bound, std::mt19937& rng,
                       bool requires_grad) {
    std::uniform_real_distribution<float> dist(-bound, bound);
    std::vector<float> d(numel(shape));
    for (float& v : d) v = dist(rng);
    return Tensor(std::move(shape), std::move(d), requires_grad);
}

float Tensor::item() const {
    if (node_->data.size() != 1)
        throw std::logic_error("item(): tensor has " +
                               std::to_string(node_->data.size()) +
                               " elements, expected 1");
    return node_->data[0];
}

const std::vector<float>& Tensor::grad() const {
    if (node_->grad.empty())
        throw std::logic_error("grad(): no gradient accumulated");
    return node_->grad;
}

void Tensor::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

Tensor Tensor::detach() const {
    auto n = std::make_shared<TensorNode>();
    n->shape = node_->shape;
    n->data = node_->data;
    n->requires_grad = false;
    return from_node(std::move(n));
}

Tensor make_op(Shape shape, std::vector<float> data,
               std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backward_fn) {
    bool needs = false;
    if (g_grad_enabled)
        for (const Tensor& p : parents)
            if (p.requires_grad()) {
                needs = true;
                break;
            }
    Tensor out(std::move(shape), std::move(data), false);
    if (needs) {
        auto node = out.node();
        node->requires_grad = true;
        node->parents.reserve(parents.size());
        for (const Tensor& p : parents) node->parents.push_back(p.node());
        node->backward_fn = std::move(backward_fn);
    }
    return out;
}

void backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw std::logic_error("backward: loss must be scalar, got shape " +
                               shape_str(loss.shape()));
    if (!loss.requires_grad()) return;

    // Iterative post-order DFS; graphs can be deep for long training graphs.
    std::vector<TensorNode*> topo;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorNode* parent = node->parents[idx++].get();
            if (parent->requires_grad && visited.insert(parent).second)
                stack.emplace_back(parent, 0);
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0f;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
    }
}

} // namespace tsn
