#include "semcomm/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "semcomm/errors.hpp"

namespace semcomm::ad {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
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

Tensor::Tensor() = default;

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<detail::Storage>()) {
    if (numel(shape) != data.size()) {
        throw DimensionError("tensor shape " + shape_str(shape) + " does not hold " +
                             std::to_string(data.size()) + " elements");
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor({}, {value}, requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
    return Tensor({rows, cols}, std::move(data), requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(shape()));
    }
    return impl_->shape[axis];
}

std::size_t Tensor::rows() const {
    const auto& s = impl_->shape;
    if (s.empty()) return 1;
    if (s.size() == 1) return 1;
    return s[0];
}

std::size_t Tensor::cols() const {
    const auto& s = impl_->shape;
    if (s.empty()) return 1;
    return s.back();
}

double Tensor::item() const {
    if (size() != 1) {
        throw ContractError("item() on tensor of shape " + shape_str(shape()));
    }
    return impl_->data[0];
}

std::span<double> Tensor::grad_mut() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    return impl_->grad;
}

void Tensor::zero_grad() {
    impl_->grad.assign(impl_->data.size(), 0.0);
}

void Tensor::accumulate_grad(std::span<const double> g) {
    auto dst = grad_mut();
    if (g.size() != dst.size()) {
        throw DimensionError("gradient of length " + std::to_string(g.size()) +
                             " for tensor of shape " + shape_str(shape()));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

Tensor Tensor::clone() const {
    return Tensor(impl_->shape, impl_->data, false);
}

namespace {
thread_local bool t_grad_enabled = true;
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tape& tape() {
    thread_local Tape instance;
    return instance;
}

void Tape::record(Node node) { nodes_.push_back(std::move(node)); }

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1) {
        throw ContractError("backward() needs a scalar loss, got shape " +
                            (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    }
    if (!loss.requires_grad()) {
        throw ContractError("backward() on a loss that does not depend on any trainable tensor");
    }
    Tensor seed = loss;
    seed.accumulate_grad(std::vector<double>{1.0});

    // Nodes recorded after the loss cannot contribute to it.
    std::size_t end = nodes_.size();
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].output.same_storage(loss)) {
            end = i + 1;
            break;
        }
    }
    last_replayed_ = 0;
    for (std::size_t i = end; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.output.has_grad()) continue;
        node.backward();
        ++last_replayed_;
    }
    nodes_.clear();
}

void backward(const Tensor& loss) { tape().backward(loss); }

}  // namespace semcomm::ad
