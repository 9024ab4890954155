#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agrekd/rng.hpp"
#include "agrekd/tensor.hpp"

namespace agrekd {

/// Feed-forward classifier: linear layers with ReLU on every hidden layer and
/// raw logits at the output.
///
/// Parameters are leaf tensors owned by the model. Copying a model deep-copies
/// them, so checkpoint snapshots and frozen teachers never alias a trainee.
/// The flat parameter ordering is fixed: layer 0 weights row-major, layer 0
/// bias, layer 1 weights, layer 1 bias, and so on. flatten/unflatten and the
/// optimizer all rely on that one ordering.
class Mlp {
public:
    /// All-zero parameters. layer_dims = {input, hidden..., output}.
    explicit Mlp(std::vector<std::size_t> layer_dims);

    /// He-style initialization: weights ~ N(0, 2/fan_in) drawn layer by layer
    /// (weights row-major, then nothing for the bias, which stays zero).
    static Mlp init(std::vector<std::size_t> layer_dims, Rng& rng);

    Mlp(const Mlp& other);
    Mlp& operator=(const Mlp& other);
    Mlp(Mlp&&) = default;
    Mlp& operator=(Mlp&&) = default;

    const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }
    std::size_t input_dim() const { return layer_dims_.front(); }
    std::size_t output_dim() const { return layer_dims_.back(); }
    std::size_t layer_count() const { return weights_.size(); }
    std::size_t param_count() const;

    const TensorPtr& weight(std::size_t layer) const { return weights_[layer]; }
    const TensorPtr& bias(std::size_t layer) const { return biases_[layer]; }

    /// Differentiable forward pass; x is [batch x input_dim].
    TensorPtr forward(const TensorPtr& x) const;

    /// Plain-loop forward with no graph, for frozen models and evaluation.
    /// x holds batch*input_dim row-major values; returns batch*output_dim.
    std::vector<double> forward_nograd(const std::vector<double>& x, std::size_t batch) const;

    /// Penultimate activations (input of the final linear layer), no graph.
    std::vector<double> penultimate_nograd(const std::vector<double>& x, std::size_t batch) const;

    std::vector<double> flatten_params() const;
    /// Throws StateError unless every parameter's grad is populated.
    std::vector<double> flatten_grads() const;
    void set_flat_params(const std::vector<double>& flat);

    /// Flat slice [begin, end) covered by the final linear layer's W and b.
    std::pair<std::size_t, std::size_t> last_layer_span() const;

private:
    std::vector<std::size_t> layer_dims_;
    std::vector<TensorPtr> weights_;
    std::vector<TensorPtr> biases_;
};

/// Row-wise softmax of logits/tau, stabilized by max subtraction. Pure data
/// transform; the result carries no graph.
TensorPtr softened(const TensorPtr& logits, double tau);
std::vector<double> softened_rows(const std::vector<double>& logits, std::size_t batch,
                                  std::size_t classes, double tau);

/// Argmax per row; ties go to the lowest class index.
std::vector<std::size_t> argmax_rows(const std::vector<double>& logits, std::size_t batch,
                                     std::size_t classes);
std::vector<std::size_t> predict(const Mlp& model, const std::vector<double>& x,
                                 std::size_t batch);

struct CheckpointMeta {
    std::uint64_t seed = 0;
    int epochs = 0;
    std::string role = "teacher";  // teacher | student | biased
    bool debiased = false;
};

// Checkpoint text format, one tensor per line:
//   AGREKD-CKPT v1
//   layer_dims <d0> <d1> ...
//   seed <u64>
//   epochs <int>
//   role <teacher|student|biased>
//   debiased <0|1>
//   tensors <count>
//   W0 <rows> <cols> <values...>
//   b0 <len> <values...>
//   ...
// Values are written with 17 significant digits, which round-trips IEEE
// doubles exactly, so reloaded models produce bit-identical logits.
void save(const Mlp& model, const CheckpointMeta& meta, const std::string& path);

struct LoadedModel {
    Mlp model;
    CheckpointMeta meta;
};
LoadedModel load(const std::string& path);

/// 17-significant-digit decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace agrekd
