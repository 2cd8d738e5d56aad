#include "dfal/model.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace dfal {

void ArchSpec::validate() const
{
    if (input_dim < 1)
        throw std::invalid_argument("ArchSpec: input_dim must be >= 1");
    if (n_classes < 1)
        throw std::invalid_argument("ArchSpec: n_classes must be >= 1");
    for (Index w : hidden_widths)
        if (w < 1)
            throw std::invalid_argument("ArchSpec: hidden widths must be >= 1");
}

std::string ArchSpec::name() const
{
    std::ostringstream os;
    os << "mlp";
    for (Index w : hidden_widths)
        os << '-' << w;
    return os.str();
}

std::vector<LayerSlot> layer_layout(const ArchSpec& arch)
{
    std::vector<LayerSlot> layers;
    Index in = arch.input_dim;
    Index offset = 0;
    auto push = [&](Index out) {
        LayerSlot slot{in, out, offset, offset + in * out};
        offset = slot.bias_offset + out;
        layers.push_back(slot);
        in = out;
    };
    for (Index w : arch.hidden_widths)
        push(w);
    push(arch.n_classes);
    return layers;
}

Index parameter_count(const ArchSpec& arch)
{
    const auto layers = layer_layout(arch);
    return layers.back().bias_offset + layers.back().out;
}

Eigen::Map<const Matrix> ModelState::weight(std::size_t layer) const
{
    const auto& s = layers.at(layer);
    return {params.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<Matrix> ModelState::weight(std::size_t layer)
{
    const auto& s = layers.at(layer);
    return {params.data() + s.weight_offset, s.out, s.in};
}

Eigen::Map<const Vector> ModelState::bias(std::size_t layer) const
{
    const auto& s = layers.at(layer);
    return {params.data() + s.bias_offset, s.out};
}

Eigen::Map<Vector> ModelState::bias(std::size_t layer)
{
    const auto& s = layers.at(layer);
    return {params.data() + s.bias_offset, s.out};
}

std::uint64_t ModelState::fingerprint() const
{
    return fnv1a(std::string_view(reinterpret_cast<const char*>(params.data()),
                                  static_cast<std::size_t>(params.size()) * sizeof(double)));
}

void TrainConfig::validate() const
{
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("TrainConfig: learning_rate must be finite and non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
    if (minibatch_size < 1)
        throw std::invalid_argument("TrainConfig: minibatch_size must be >= 1");
    if (epochs < 0)
        throw std::invalid_argument("TrainConfig: epochs must be >= 0");
}

std::string to_string(EmbeddingScope scope)
{
    return scope == EmbeddingScope::full ? "full" : "last_layer";
}

EmbeddingScope parse_scope(const std::string& name)
{
    if (name == "last_layer")
        return EmbeddingScope::last_layer;
    if (name == "full")
        return EmbeddingScope::full;
    throw std::invalid_argument("unknown embedding scope '" + name + "'");
}

ModelState init_model(const ArchSpec& arch, std::uint64_t seed)
{
    arch.validate();
    ModelState model;
    model.arch = arch;
    model.init_seed = seed;
    model.layers = layer_layout(arch);
    model.params = Vector::Zero(parameter_count(arch));
    Rng rng(seed, "init_model");
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(model.layers[l].in));
        auto w = model.weight(l);
        for (Index i = 0; i < w.rows(); ++i)
            for (Index j = 0; j < w.cols(); ++j)
                w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

namespace {

struct ForwardPass {
    std::vector<Matrix> activations; // activations[0] = input, then each hidden layer
    Matrix logits;
};

ForwardPass forward(const ModelState& model, const Matrix& x)
{
    if (x.cols() != model.arch.input_dim)
        throw std::invalid_argument("model: input has " + std::to_string(x.cols()) + " columns, expected " +
                                    std::to_string(model.arch.input_dim));
    ForwardPass pass;
    pass.activations.reserve(model.layers.size());
    pass.activations.push_back(x);
    const std::size_t hidden = model.layers.size() - 1;
    for (std::size_t l = 0; l < hidden; ++l) {
        Matrix z = pass.activations.back() * model.weight(l).transpose();
        z.rowwise() += model.bias(l).transpose();
        pass.activations.push_back(z.cwiseMax(0.0));
    }
    pass.logits = pass.activations.back() * model.weight(hidden).transpose();
    pass.logits.rowwise() += model.bias(hidden).transpose();
    return pass;
}

// Backprop of sum_i weight_i * (d loss_i / d logits_i) given as `dlogits`.
Vector backward(const ModelState& model, const ForwardPass& pass, Matrix dlogits)
{
    Vector grad = Vector::Zero(model.params.size());
    Matrix delta = std::move(dlogits);
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        const auto& slot = model.layers[l];
        const Matrix& input = pass.activations[l];
        Eigen::Map<Matrix>(grad.data() + slot.weight_offset, slot.out, slot.in).noalias() =
            delta.transpose() * input;
        Eigen::Map<Vector>(grad.data() + slot.bias_offset, slot.out) = delta.colwise().sum().transpose();
        if (l == 0)
            break;
        Matrix upstream = delta * model.weight(l);
        delta = (input.array() > 0.0).select(upstream, 0.0);
    }
    return grad;
}

Matrix rows_of(const Dataset& dataset, const IndexList& indices)
{
    return dataset.features(indices, Eigen::all);
}

// d(mean CE)/d logits for the given labels.
Matrix softmax_minus_onehot(const Matrix& proba, const std::vector<int>& labels, double scale)
{
    Matrix d = proba;
    for (Index i = 0; i < d.rows(); ++i)
        d(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    return d * scale;
}

std::vector<int> labels_of(const Dataset& dataset, const IndexList& indices)
{
    std::vector<int> out;
    out.reserve(indices.size());
    for (Index i : indices)
        out.push_back(dataset.labels[static_cast<std::size_t>(i)]);
    return out;
}

double mean_cross_entropy(const Matrix& logits, const std::vector<int>& labels)
{
    double total = 0.0;
    for (Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        total += lse - logits(i, labels[static_cast<std::size_t>(i)]);
    }
    return total / static_cast<double>(logits.rows());
}

} // namespace

namespace detail {

void sgd_step(ModelState& model, Vector& velocity, const Vector& grad, const TrainConfig& cfg)
{
    velocity = cfg.momentum * velocity + grad;
    model.params.noalias() -= cfg.learning_rate * velocity;
}

} // namespace detail

ModelState train(ModelState model, const Dataset& dataset, const IndexList& indices, const TrainConfig& cfg)
{
    cfg.validate();
    if (indices.empty())
        throw std::invalid_argument("train: empty index set");
    Vector velocity = Vector::Zero(model.params.size());
    IndexList order = indices;
    const auto n = static_cast<Index>(order.size());
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng rng(cfg.seed, "train-shuffle", static_cast<std::uint64_t>(epoch));
        order = indices;
        rng.shuffle(order);
        for (Index start = 0; start < n; start += cfg.minibatch_size) {
            const Index stop = std::min(n, start + cfg.minibatch_size);
            const IndexList batch(order.begin() + start, order.begin() + stop);
            const Matrix x = rows_of(dataset, batch);
            const auto y = labels_of(dataset, batch);
            const ForwardPass pass = forward(model, x);
            const double loss = mean_cross_entropy(pass.logits, y);
            if (!std::isfinite(loss))
                throw TrainingDiverged(epoch);
            const Matrix dlogits =
                softmax_minus_onehot(softmax_rows(pass.logits), y, 1.0 / static_cast<double>(batch.size()));
            detail::sgd_step(model, velocity, backward(model, pass, dlogits), cfg);
        }
        if (!model.params.allFinite())
            throw TrainingDiverged(epoch);
    }
    return model;
}

Matrix logits(const ModelState& model, const Matrix& features)
{
    return forward(model, features).logits;
}

Matrix softmax_rows(const Matrix& z)
{
    Matrix p(z.rows(), z.cols());
    for (Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        p.row(i) = (z.row(i).array() - m).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

Matrix predict_proba(const ModelState& model, const Matrix& features)
{
    return softmax_rows(logits(model, features));
}

Matrix penultimate(const ModelState& model, const Matrix& features)
{
    return forward(model, features).activations.back();
}

double loss_mean(const ModelState& model, const Dataset& dataset, const IndexList& indices)
{
    if (indices.empty())
        throw std::invalid_argument("loss_mean: empty index set");
    return mean_cross_entropy(logits(model, rows_of(dataset, indices)), labels_of(dataset, indices));
}

Vector loss_gradient(const ModelState& model, const Dataset& dataset, const IndexList& indices)
{
    if (indices.empty())
        throw std::invalid_argument("loss_gradient: empty index set");
    const ForwardPass pass = forward(model, rows_of(dataset, indices));
    const Matrix dlogits = softmax_minus_onehot(softmax_rows(pass.logits), labels_of(dataset, indices),
                                                1.0 / static_cast<double>(indices.size()));
    return backward(model, pass, dlogits);
}

Index embedding_size(const ArchSpec& arch, EmbeddingScope scope)
{
    if (scope == EmbeddingScope::full)
        return parameter_count(arch);
    return (arch.last_hidden_width() + 1) * arch.n_classes;
}

Vector last_layer_embedding(const Eigen::Ref<const Vector>& proba, const Eigen::Ref<const Vector>& hidden, int y)
{
    const Index c = proba.size();
    const Index h = hidden.size();
    Vector residual = proba;
    residual(y) -= 1.0;
    Vector out(c * h + c);
    Eigen::Map<Matrix>(out.data(), c, h).noalias() = residual * hidden.transpose();
    out.tail(c) = residual;
    return out;
}

Matrix last_layer_embeddings(const Matrix& proba, const Matrix& hidden, const std::vector<int>& labels)
{
    const Index n = proba.rows();
    const Index c = proba.cols();
    const Index h = hidden.cols();
    Matrix out(n, c * h + c);
    for (Index i = 0; i < n; ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        for (Index k = 0; k < c; ++k) {
            const double r = proba(i, k) - (k == y ? 1.0 : 0.0);
            out.row(i).segment(k * h, h) = r * hidden.row(i);
            out(i, c * h + k) = r;
        }
    }
    return out;
}

GradEmbedding grad_embedding(const ModelState& model, const Eigen::Ref<const Vector>& x, int y, EmbeddingScope scope)
{
    if (y < 0 || y >= model.arch.n_classes)
        throw std::invalid_argument("grad_embedding: class id out of range");
    const Matrix row = x.transpose();
    const ForwardPass pass = forward(model, row);
    const Matrix proba = softmax_rows(pass.logits);
    if (scope == EmbeddingScope::last_layer)
        return {last_layer_embedding(proba.row(0).transpose(), pass.activations.back().row(0).transpose(), y), scope};
    return {backward(model, pass, softmax_minus_onehot(proba, {y}, 1.0)), scope};
}

GradEmbedding mean_grad_embedding(const ModelState& model, const Dataset& dataset, const IndexList& indices,
                                  EmbeddingScope scope)
{
    if (indices.empty())
        throw std::invalid_argument("mean_grad_embedding: empty index set");
    Vector sum = Vector::Zero(embedding_size(model.arch, scope));
    if (scope == EmbeddingScope::last_layer) {
        const ForwardPass pass = forward(model, rows_of(dataset, indices));
        const Matrix proba = softmax_rows(pass.logits);
        const Matrix& hidden = pass.activations.back();
        for (Index i = 0; i < proba.rows(); ++i)
            sum += last_layer_embedding(proba.row(i).transpose(), hidden.row(i).transpose(),
                                        dataset.labels[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])]);
    } else {
        for (Index i : indices)
            sum += grad_embedding(model, dataset.features.row(i).transpose(),
                                  dataset.labels[static_cast<std::size_t>(i)], scope)
                       .values;
    }
    return {sum / static_cast<double>(indices.size()), scope};
}

double evaluate_accuracy(const ModelState& model, const Dataset& dataset, const IndexList& test)
{
    if (test.empty())
        throw std::invalid_argument("evaluate_accuracy: empty test set");
    const Matrix z = logits(model, rows_of(dataset, test));
    Index correct = 0;
    for (Index i = 0; i < z.rows(); ++i) {
        Index arg = 0;
        for (Index k = 1; k < z.cols(); ++k)
            if (z(i, k) > z(i, arg))
                arg = k;
        if (arg == dataset.labels[static_cast<std::size_t>(test[static_cast<std::size_t>(i)])])
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

} // namespace dfal
