#include "agrekd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "agrekd/rng.hpp"

namespace agrekd {

namespace {

std::size_t shape_product(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
    }
}

void require_matrix(const TensorPtr& a, const char* op) {
    if (a->rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(a->shape));
    }
}

TensorPtr make_op_output(Shape shape, std::vector<double> values,
                         std::vector<TensorPtr> inputs) {
    TensorPtr out = Tensor::create(std::move(shape), std::move(values), false);
    for (const TensorPtr& in : inputs) {
        if (in->requires_grad) {
            out->requires_grad = true;
            break;
        }
    }
    out->inputs = std::move(inputs);
    return out;
}

void ensure_grad_buffer(Tensor* t) {
    if (t->grad.size() != t->data.size()) t->grad.assign(t->data.size(), 0.0);
}

}  // namespace

TensorPtr Tensor::create(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_product(shape) != values.size()) {
        throw DimensionError("tensor: shape " + shape_str(shape) + " does not hold " +
                             std::to_string(values.size()) + " values");
    }
    TensorPtr t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr Tensor::zeros(Shape shape, bool requires_grad) {
    std::vector<double> values(shape_product(shape), 0.0);
    return create(std::move(shape), std::move(values), requires_grad);
}

TensorPtr Tensor::scalar(double value, bool requires_grad) {
    return create({1}, {value}, requires_grad);
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows(): tensor is not a matrix");
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols(): tensor is not a matrix");
    return shape[1];
}

double Tensor::item() const {
    if (!is_scalar()) throw ContractError("item(): tensor is not a scalar");
    return data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    if (rank() != 2) throw DimensionError("at(): tensor is not a matrix");
    if (r >= shape[0] || c >= shape[1]) throw DimensionError("at(): index out of range");
    return data[r * shape[1] + c];
}

void Tensor::zero_grad() {
    grad.assign(data.size(), 0.0);
}

void Tensor::assign(const std::vector<double>& values) {
    if (!inputs.empty() || backward_fn) {
        throw StateError("assign(): only leaf tensors may be rewritten");
    }
    if (values.size() != data.size()) {
        throw DimensionError("assign(): value count does not match tensor size");
    }
    data = values;
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
    if (b->shape[0] != k) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a->shape) +
                             " vs " + shape_str(b->shape));
    }
    std::vector<double> out(m * n, 0.0);
    const double* A = a->data.data();
    const double* B = b->data.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double ail = A[i * k + l];
            if (ail == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                out[i * n + j] += ail * B[l * n + j];
            }
        }
    }
    TensorPtr c = make_op_output({m, n}, std::move(out), {a, b});
    if (c->requires_grad) {
        Tensor* cp = c.get();
        Tensor* ap = a.get();
        Tensor* bp = b.get();
        c->backward_fn = [cp, ap, bp, m, k, n]() {
            const double* dC = cp->grad.data();
            if (ap->requires_grad) {
                ensure_grad_buffer(ap);
                double* dA = ap->grad.data();
                const double* B = bp->data.data();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dcij = dC[i * n + j];
                        if (dcij == 0.0) continue;
                        for (std::size_t l = 0; l < k; ++l) {
                            dA[i * k + l] += dcij * B[l * n + j];
                        }
                    }
                }
            }
            if (bp->requires_grad) {
                ensure_grad_buffer(bp);
                double* dB = bp->grad.data();
                const double* A = ap->data.data();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t l = 0; l < k; ++l) {
                        const double ail = A[i * k + l];
                        if (ail == 0.0) continue;
                        for (std::size_t j = 0; j < n; ++j) {
                            dB[l * n + j] += ail * dC[i * n + j];
                        }
                    }
                }
            }
        };
    }
    return c;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    TensorPtr c = make_op_output(a->shape, std::move(out), {a, b});
    if (c->requires_grad) {
        Tensor* cp = c.get();
        Tensor* ap = a.get();
        Tensor* bp = b.get();
        c->backward_fn = [cp, ap, bp]() {
            if (ap->requires_grad) {
                ensure_grad_buffer(ap);
                for (std::size_t i = 0; i < cp->grad.size(); ++i) ap->grad[i] += cp->grad[i];
            }
            if (bp->requires_grad) {
                ensure_grad_buffer(bp);
                for (std::size_t i = 0; i < cp->grad.size(); ++i) bp->grad[i] += cp->grad[i];
            }
        };
    }
    return c;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
    TensorPtr c = make_op_output(a->shape, std::move(out), {a, b});
    if (c->requires_grad) {
        Tensor* cp = c.get();
        Tensor* ap = a.get();
        Tensor* bp = b.get();
        c->backward_fn = [cp, ap, bp]() {
            if (ap->requires_grad) {
                ensure_grad_buffer(ap);
                for (std::size_t i = 0; i < cp->grad.size(); ++i) ap->grad[i] += cp->grad[i];
            }
            if (bp->requires_grad) {
                ensure_grad_buffer(bp);
                for (std::size_t i = 0; i < cp->grad.size(); ++i) bp->grad[i] -= cp->grad[i];
            }
        };
    }
    return c;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    TensorPtr c = make_op_output(a->shape, std::move(out), {a, b});
    if (c->requires_grad) {
        Tensor* cp = c.get();
        Tensor* ap = a.get();
        Tensor* bp = b.get();
        c->backward_fn = [cp, ap, bp]() {
            if (ap->requires_grad) {
                ensure_grad_buffer(ap);
                for (std::size_t i = 0; i < cp->grad.size(); ++i)
                    ap->grad[i] += cp->grad[i] * bp->data[i];
            }
            if (bp->requires_grad) {
                ensure_grad_buffer(bp);
                for (std::size_t i = 0; i < cp->grad.size(); ++i)
                    bp->grad[i] += cp->grad[i] * ap->data[i];
            }
        };
    }
    return c;
}

TensorPtr add_row_vector(const TensorPtr& m, const TensorPtr& v) {
    require_matrix(m, "add_row_vector");
    if (v->rank() != 1 || v->shape[0] != m->shape[1]) {
        throw DimensionError("add_row_vector: vector " + shape_str(v->shape) +
                             " does not match matrix " + shape_str(m->shape));
    }
    const std::size_t r = m->shape[0], c = m->shape[1];
    std::vector<double> out(m->size());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = m->data[i * c + j] + v->data[j];
    TensorPtr o = make_op_output(m->shape, std::move(out), {m, v});
    if (o->requires_grad) {
        Tensor* op = o.get();
        Tensor* mp = m.get();
        Tensor* vp = v.get();
        o->backward_fn = [op, mp, vp, r, c]() {
            if (mp->requires_grad) {
                ensure_grad_buffer(mp);
                for (std::size_t i = 0; i < op->grad.size(); ++i) mp->grad[i] += op->grad[i];
            }
            if (vp->requires_grad) {
                ensure_grad_buffer(vp);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) vp->grad[j] += op->grad[i * c + j];
            }
        };
    }
    return o;
}

TensorPtr scale(const TensorPtr& a, double factor) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * factor;
    TensorPtr c = make_op_output(a->shape, std::move(out), {a});
    if (c->requires_grad) {
        Tensor* cp = c.get();
        Tensor* ap = a.get();
        c->backward_fn = [cp, ap, factor]() {
            ensure_grad_buffer(ap);
            for (std::size_t i = 0; i < cp->grad.size(); ++i) ap->grad[i] += factor * cp->grad[i];
        };
    }
    return c;
}

TensorPtr relu(const TensorPtr& a) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    TensorPtr c = make_op_output(a->shape, std::move(out), {a});
    if (c->requires_grad) {
        Tensor* cp = c.get();
        Tensor* ap = a.get();
        c->backward_fn = [cp, ap]() {
            ensure_grad_buffer(ap);
            for (std::size_t i = 0; i < cp->grad.size(); ++i)
                if (ap->data[i] > 0.0) ap->grad[i] += cp->grad[i];
        };
    }
    return c;
}

TensorPtr exp_elem(const TensorPtr& a) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a->data[i]);
    TensorPtr c = make_op_output(a->shape, std::move(out), {a});
    if (c->requires_grad) {
        Tensor* cp = c.get();
        Tensor* ap = a.get();
        c->backward_fn = [cp, ap]() {
            ensure_grad_buffer(ap);
            for (std::size_t i = 0; i < cp->grad.size(); ++i)
                ap->grad[i] += cp->grad[i] * cp->data[i];
        };
    }
    return c;
}

TensorPtr log_softmax_rows(const TensorPtr& a) {
    require_matrix(a, "log_softmax_rows");
    const std::size_t r = a->shape[0], c = a->shape[1];
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = a->data.data() + i * c;
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] = row[j] - lse;
    }
    TensorPtr o = make_op_output(a->shape, std::move(out), {a});
    if (o->requires_grad) {
        Tensor* op = o.get();
        Tensor* ap = a.get();
        o->backward_fn = [op, ap, r, c]() {
            ensure_grad_buffer(ap);
            for (std::size_t i = 0; i < r; ++i) {
                double gsum = 0.0;
                for (std::size_t j = 0; j < c; ++j) gsum += op->grad[i * c + j];
                for (std::size_t j = 0; j < c; ++j) {
                    ap->grad[i * c + j] +=
                        op->grad[i * c + j] - std::exp(op->data[i * c + j]) * gsum;
                }
            }
        };
    }
    return o;
}

TensorPtr row_sum(const TensorPtr& a) {
    require_matrix(a, "row_sum");
    const std::size_t r = a->shape[0], c = a->shape[1];
    std::vector<double> out(r, 0.0);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i] += a->data[i * c + j];
    TensorPtr o = make_op_output({r}, std::move(out), {a});
    if (o->requires_grad) {
        Tensor* op = o.get();
        Tensor* ap = a.get();
        o->backward_fn = [op, ap, r, c]() {
            ensure_grad_buffer(ap);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) ap->grad[i * c + j] += op->grad[i];
        };
    }
    return o;
}

TensorPtr sum(const TensorPtr& a) {
    double s = 0.0;
    for (double v : a->data) s += v;
    TensorPtr o = make_op_output({1}, {s}, {a});
    if (o->requires_grad) {
        Tensor* op = o.get();
        Tensor* ap = a.get();
        o->backward_fn = [op, ap]() {
            ensure_grad_buffer(ap);
            for (std::size_t i = 0; i < ap->grad.size(); ++i) ap->grad[i] += op->grad[0];
        };
    }
    return o;
}

TensorPtr mean(const TensorPtr& a) {
    if (a->size() == 0) throw DimensionError("mean: empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a->size()));
}

TensorPtr take_per_row(const TensorPtr& m, const std::vector<std::size_t>& idx) {
    require_matrix(m, "take_per_row");
    const std::size_t r = m->shape[0], c = m->shape[1];
    if (idx.size() != r) {
        throw DimensionError("take_per_row: need one index per row");
    }
    std::vector<double> out(r);
    for (std::size_t i = 0; i < r; ++i) {
        if (idx[i] >= c) {
            throw ParameterError("take_per_row: index " + std::to_string(idx[i]) +
                                 " out of range for " + std::to_string(c) + " columns");
        }
        out[i] = m->data[i * c + idx[i]];
    }
    TensorPtr o = make_op_output({r}, std::move(out), {m});
    if (o->requires_grad) {
        Tensor* op = o.get();
        Tensor* mp = m.get();
        std::vector<std::size_t> picked = idx;
        o->backward_fn = [op, mp, picked, c]() {
            ensure_grad_buffer(mp);
            for (std::size_t i = 0; i < picked.size(); ++i)
                mp->grad[i * c + picked[i]] += op->grad[i];
        };
    }
    return o;
}

TensorPtr detach(const TensorPtr& a) {
    return Tensor::create(a->shape, a->data, false);
}

void backward(const TensorPtr& loss) {
    if (!loss) throw ContractError("backward: null loss");
    if (!loss->is_scalar()) {
        throw ContractError("backward: loss must be a scalar, got " +
                            std::to_string(loss->size()) + " values");
    }
    // Iterative post-order DFS; graphs can be thousands of nodes deep over a
    // training run, recursion is not safe.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<Tensor*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Tensor* child = node->inputs[next].get();
            ++next;
            if (visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Tensor* t : order) {
        if (t->requires_grad) t->zero_grad();
    }
    loss->grad.assign(1, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn && (*it)->requires_grad) (*it)->backward_fn();
    }
}

double finite_diff_check(const std::function<TensorPtr(const TensorPtr&)>& f,
                         const std::vector<double>& theta, double step) {
    if (step <= 0.0) throw ParameterError("finite_diff_check: step must be positive");
    TensorPtr leaf = Tensor::create({theta.size()}, theta, true);
    TensorPtr value = f(leaf);
    backward(value);
    std::vector<double> analytic = leaf->grad;

    auto eval = [&](const std::vector<double>& point) {
        TensorPtr p = Tensor::create({point.size()}, point, false);
        double v = f(p)->item();
        if (!std::isfinite(v)) throw NumericError("finite_diff_check: non-finite value");
        return v;
    };

    double max_rel = 0.0;
    std::vector<double> point = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        point[i] = theta[i] + step;
        const double up = eval(point);
        point[i] = theta[i] - step;
        const double down = eval(point);
        point[i] = theta[i];
        const double central = (up - down) / (2.0 * step);
        const double rel = std::abs(analytic[i] - central) / (std::abs(central) + 1e-12);
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(const std::vector<double>& a) {
    return std::sqrt(dot(a, a));
}

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // Box-Muller; u1 shifted away from zero so log stays finite.
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    cached_normal_ = r * std::sin(angle);
    has_cached_normal_ = true;
    return r * std::cos(angle);
}

}  // namespace agrekd
