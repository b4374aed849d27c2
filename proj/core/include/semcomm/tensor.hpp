#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace semcomm::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct Storage {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until first accumulation
    bool requires_grad = false;
};
}  // namespace detail

/// Dense row-major float64 array with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage. Use clone() for
/// a deep copy detached from any graph.
class Tensor {
public:
    Tensor();
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                         bool requires_grad = false);

    bool defined() const { return static_cast<bool>(impl_); }

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t size() const { return impl_->data.size(); }
    std::size_t dim(std::size_t axis) const;
    /// Leading extent of a 2-D tensor (1 for rank-1).
    std::size_t rows() const;
    /// Trailing extent.
    std::size_t cols() const;

    std::span<double> data() { return impl_->data; }
    std::span<const double> data() const { return impl_->data; }
    double& operator[](std::size_t i) { return impl_->data[i]; }
    double operator[](std::size_t i) const { return impl_->data[i]; }
    double& at(std::size_t r, std::size_t c) { return impl_->data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool value) { impl_->requires_grad = value; }

    bool has_grad() const { return !impl_->grad.empty(); }
    std::span<const double> grad() const { return impl_->grad; }
    std::span<double> grad_mut();
    void zero_grad();
    /// Drops the gradient buffer entirely (has_grad() becomes false).
    void clear_grad() { impl_->grad.clear(); }
    void accumulate_grad(std::span<const double> g);

    Tensor clone() const;
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    detail::Storage* storage() const { return impl_.get(); }

private:
    std::shared_ptr<detail::Storage> impl_;
};

/// Ordered record of differentiable operations.
///
/// Operations append a node when at least one input requires a gradient.
/// backward() replays the nodes in reverse recording order, each exactly once.
class Tape {
public:
    struct Node {
        std::string op;
        std::vector<Tensor> inputs;
        Tensor output;
        std::function<void()> backward;
    };

    void record(Node node);
    /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable tensor.
    /// Clears the tape afterwards.
    void backward(const Tensor& loss);
    void clear() { nodes_.clear(); }

    std::size_t size() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }

    /// Count of node backward rules executed by the most recent backward().
    std::size_t last_replayed() const { return last_replayed_; }

private:
    std::vector<Node> nodes_;
    std::size_t last_replayed_ = 0;
};

/// Tape of the calling thread.
Tape& tape();

/// Disables recording on the calling thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

/// Convenience: backward over the thread tape.
void backward(const Tensor& loss);

}  // namespace semcomm::ad
