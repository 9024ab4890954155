#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "agrekd/errors.hpp"

namespace agrekd {

using Shape = std::vector<std::size_t>;

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense 64-bit float array with reverse-mode differentiation.
///
/// Values are stored row-major. A tensor produced by an op is immutable; only
/// grad buffers change afterwards. Leaf tensors owned by a model are the one
/// exception: their data may be rewritten between graph constructions (that is
/// how the optimizer steps parameters). A graph and its tensors belong to a
/// single thread.
class Tensor : public std::enable_shared_from_this<Tensor> {
public:
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // sized like data once backward touches this node
    bool requires_grad = false;

    // Graph edges. backward_fn reads this node's grad and accumulates into the
    // inputs' grads; empty for leaves and constants.
    std::vector<TensorPtr> inputs;
    std::function<void()> backward_fn;

    static TensorPtr create(Shape shape, std::vector<double> values, bool requires_grad = false);
    static TensorPtr zeros(Shape shape, bool requires_grad = false);
    static TensorPtr scalar(double value, bool requires_grad = false);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    bool is_scalar() const { return data.size() == 1; }
    double item() const;
    double at(std::size_t r, std::size_t c) const;

    void zero_grad();

    /// Rewrites the data of a leaf tensor. Throws StateError on op outputs.
    void assign(const std::vector<double>& values);
};

// Elementwise and matrix ops. Shapes must match exactly; nothing broadcasts
// implicitly (add_row_vector is the one explicit row-broadcast op, used for
// biases).
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr add_row_vector(const TensorPtr& m, const TensorPtr& v);
TensorPtr scale(const TensorPtr& a, double factor);
TensorPtr relu(const TensorPtr& a);
TensorPtr exp_elem(const TensorPtr& a);
TensorPtr log_softmax_rows(const TensorPtr& a);
TensorPtr row_sum(const TensorPtr& a);
TensorPtr sum(const TensorPtr& a);
TensorPtr mean(const TensorPtr& a);
TensorPtr take_per_row(const TensorPtr& m, const std::vector<std::size_t>& idx);

/// Constant copy of a tensor, cut off from any graph.
TensorPtr detach(const TensorPtr& a);

/// Reverse-mode pass from a scalar loss. Resets the grad of every reachable
/// requires_grad tensor, then fills it with d(loss)/d(tensor). Repeated calls
/// re-reset; gradients never accumulate across calls.
void backward(const TensorPtr& loss);

/// Compares the autodiff gradient of f at theta against central finite
/// differences with the given step. Returns the max over coordinates of
/// |analytic - central| / (|central| + 1e-12). f must build a scalar from the
/// supplied leaf.
double finite_diff_check(const std::function<TensorPtr(const TensorPtr&)>& f,
                         const std::vector<double>& theta, double step);

// Plain-buffer helpers shared by the gradient-geometry code.
double dot(const std::vector<double>& a, const std::vector<double>& b);
double l2_norm(const std::vector<double>& a);

}  // namespace agrekd
