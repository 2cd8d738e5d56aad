#pragma once

#include "dfal/data.hpp"
#include "dfal/numerics.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace dfal {

/// Fully connected ReLU network: input -> hidden_widths... -> n_classes logits.
struct ArchSpec {
    Index input_dim = 0;
    std::vector<Index> hidden_widths{512, 256};
    int n_classes = 0;

    void validate() const;
    /// Human-readable tag, e.g. "mlp-512-256".
    std::string name() const;
    Index last_hidden_width() const { return hidden_widths.empty() ? input_dim : hidden_widths.back(); }
};

/// Where each layer lives inside the flat parameter vector. Weights are
/// stored row-major (out x in), followed by the bias.
struct LayerSlot {
    Index in = 0;
    Index out = 0;
    Index weight_offset = 0;
    Index bias_offset = 0;
};

std::vector<LayerSlot> layer_layout(const ArchSpec& arch);
Index parameter_count(const ArchSpec& arch);

struct ModelState {
    ArchSpec arch;
    Vector params;
    std::uint64_t init_seed = 0;
    std::vector<LayerSlot> layers;

    Eigen::Map<const Matrix> weight(std::size_t layer) const;
    Eigen::Map<Matrix> weight(std::size_t layer);
    Eigen::Map<const Vector> bias(std::size_t layer) const;
    Eigen::Map<Vector> bias(std::size_t layer);

    /// 64-bit hash of the parameter bytes; equal models hash equally.
    std::uint64_t fingerprint() const;
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    Index minibatch_size = 8;
    int epochs = 40;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class EmbeddingScope { last_layer, full };

std::string to_string(EmbeddingScope scope);
EmbeddingScope parse_scope(const std::string& name);

/// Per-example (or averaged) loss gradient restricted to `scope`. For
/// last_layer the layout is the final weight matrix (n_classes x h, row-major)
/// followed by the final bias, i.e. the tail of the full parameter gradient.
struct GradEmbedding {
    Vector values;
    EmbeddingScope scope = EmbeddingScope::last_layer;
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(int epoch) : std::runtime_error("training diverged at epoch " + std::to_string(epoch)), epoch(epoch) {}
    int epoch;
};

/// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
ModelState init_model(const ArchSpec& arch, std::uint64_t seed);

/// Minibatch SGD with heavy-ball momentum (v <- mu v + g; theta <- theta - lr v)
/// on mean cross-entropy. Shuffles `indices` every epoch from cfg.seed; the
/// final partial minibatch is kept.
ModelState train(ModelState model, const Dataset& dataset, const IndexList& indices, const TrainConfig& cfg);

/// Full-batch gradient descent with the same momentum rule. One step per epoch.
/// `on_epoch` (if set) is invoked after each epoch with the epoch number (1-based).
template <typename Callback>
ModelState train_full_batch(ModelState model, const Dataset& dataset, const IndexList& indices,
                            const TrainConfig& cfg, Callback&& on_epoch);

/// Logits of every row of `features`.
Matrix logits(const ModelState& model, const Matrix& features);
/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);
Matrix predict_proba(const ModelState& model, const Matrix& features);
/// Post-activation output of the last hidden layer (the input itself when
/// there are no hidden layers).
Matrix penultimate(const ModelState& model, const Matrix& features);

double loss_mean(const ModelState& model, const Dataset& dataset, const IndexList& indices);

/// Gradient of loss_mean over all parameters, by batched backprop.
Vector loss_gradient(const ModelState& model, const Dataset& dataset, const IndexList& indices);

GradEmbedding grad_embedding(const ModelState& model, const Eigen::Ref<const Vector>& x, int y,
                             EmbeddingScope scope);

/// Closed-form last-layer embedding from a probability row and penultimate row.
Vector last_layer_embedding(const Eigen::Ref<const Vector>& proba, const Eigen::Ref<const Vector>& hidden, int y);

/// Last-layer embeddings for many rows at once (rows x (h+1)*n_classes).
Matrix last_layer_embeddings(const Matrix& proba, const Matrix& hidden, const std::vector<int>& labels);

GradEmbedding mean_grad_embedding(const ModelState& model, const Dataset& dataset, const IndexList& indices,
                                  EmbeddingScope scope);

Index embedding_size(const ArchSpec& arch, EmbeddingScope scope);

double evaluate_accuracy(const ModelState& model, const Dataset& dataset, const IndexList& test);

// ---------------------------------------------------------------------------

namespace detail {
void sgd_step(ModelState& model, Vector& velocity, const Vector& grad, const TrainConfig& cfg);
}

template <typename Callback>
ModelState train_full_batch(ModelState model, const Dataset& dataset, const IndexList& indices,
                            const TrainConfig& cfg, Callback&& on_epoch)
{
    cfg.validate();
    if (indices.empty())
        throw std::invalid_argument("train_full_batch: empty index set");
    Vector velocity = Vector::Zero(model.params.size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const Vector grad = loss_gradient(model, dataset, indices);
        if (!grad.allFinite())
            throw TrainingDiverged(epoch);
        detail::sgd_step(model, velocity, grad, cfg);
        if (!model.params.allFinite())
            throw TrainingDiverged(epoch);
        on_epoch(static_cast<const ModelState&>(model), epoch);
    }
    return model;
}

} // namespace dfal
