#include "dfal/acquisition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace dfal {

std::string to_string(Method method)
{
    switch (method) {
    case Method::grad: return "grad";
    case Method::entropy: return "entropy";
    case Method::badge: return "badge";
    case Method::kcenter: return "kcenter";
    case Method::random: return "random";
    }
    return "unknown";
}

Method parse_method(const std::string& name)
{
    for (Method m : all_methods())
        if (to_string(m) == name)
            return m;
    throw std::invalid_argument("unknown method '" + name + "' (expected grad, entropy, badge, kcenter or random)");
}

const std::vector<Method>& all_methods()
{
    static const std::vector<Method> methods{Method::grad, Method::entropy, Method::badge, Method::kcenter,
                                             Method::random};
    return methods;
}

AcquisitionContext make_context(const ModelState& model, const Dataset& dataset, const PoolState& pool,
                                EmbeddingScope scope)
{
    AcquisitionContext ctx;
    ctx.model = &model;
    ctx.features = &dataset.features;
    ctx.labeled = pool.labeled;
    ctx.labeled_labels.reserve(pool.labeled.size());
    for (Index i : pool.labeled)
        ctx.labeled_labels.push_back(dataset.labels[static_cast<std::size_t>(i)]);
    ctx.pool = pool.unlabeled;
    ctx.scope = scope;
    ctx.round = pool.round;
    return ctx;
}

int argmax_class(const Eigen::Ref<const Vector>& proba)
{
    Index arg = 0;
    for (Index k = 1; k < proba.size(); ++k)
        if (proba(k) > proba(arg))
            arg = k;
    return static_cast<int>(arg);
}

int pseudo_label(const ModelState& model, const Eigen::Ref<const Vector>& x)
{
    const Matrix row = x.transpose();
    return argmax_class(predict_proba(model, row).row(0).transpose());
}

double df_score_from_embeddings(const Eigen::Ref<const Vector>& ref_mean, Index ref_size,
                                const Eigen::Ref<const Vector>& candidate)
{
    if (ref_size < 1)
        throw std::invalid_argument("df_score: empty labeled set");
    const double r = static_cast<double>(ref_size);
    return r / (r + 1.0) * l2_norm(ref_mean - candidate);
}

namespace {

void require_ready(const AcquisitionContext& ctx)
{
    if (ctx.model == nullptr || ctx.features == nullptr)
        throw std::invalid_argument("acquisition: context has no model or features");
}

Matrix gather(const Matrix& features, const IndexList& rows)
{
    return features(rows, Eigen::all);
}

AcquisitionBatch make_batch(Method method, const AcquisitionContext& ctx)
{
    AcquisitionBatch batch;
    batch.method = method;
    batch.round = ctx.round;
    return batch;
}

} // namespace

Vector reference_statistic(const AcquisitionContext& ctx)
{
    require_ready(ctx);
    if (ctx.labeled.empty())
        throw std::invalid_argument("df_score: empty labeled set");
    const ModelState& model = *ctx.model;
    Vector sum = Vector::Zero(embedding_size(model.arch, ctx.scope));
    if (ctx.scope == EmbeddingScope::last_layer) {
        const Matrix x = gather(*ctx.features, ctx.labeled);
        const Matrix proba = predict_proba(model, x);
        const Matrix hidden = penultimate(model, x);
        for (Index i = 0; i < x.rows(); ++i)
            sum += last_layer_embedding(proba.row(i).transpose(), hidden.row(i).transpose(),
                                        ctx.labeled_labels[static_cast<std::size_t>(i)]);
    } else {
        for (std::size_t i = 0; i < ctx.labeled.size(); ++i)
            sum += grad_embedding(model, ctx.features->row(ctx.labeled[i]).transpose(), ctx.labeled_labels[i],
                                  ctx.scope)
                       .values;
    }
    return sum / static_cast<double>(ctx.labeled.size());
}

ScoredCandidate df_score(const ModelState& model, const Dataset& dataset, const IndexList& labeled, Index x_index,
                         EmbeddingScope scope)
{
    if (labeled.empty())
        throw std::invalid_argument("df_score: empty labeled set");
    const Vector ref = mean_grad_embedding(model, dataset, labeled, scope).values;
    const Vector x = dataset.features.row(x_index).transpose();
    const int y_hat = pseudo_label(model, x);
    const Vector g = grad_embedding(model, x, y_hat, scope).values;
    return {x_index, df_score_from_embeddings(ref, static_cast<Index>(labeled.size()), g), y_hat};
}

std::vector<ScoredCandidate> df_scores(const ModelState& model, const Vector& ref_mean, Index ref_size,
                                       const Matrix& candidates, const IndexList& ids, EmbeddingScope scope)
{
    if (static_cast<Index>(ids.size()) != candidates.rows())
        throw std::invalid_argument("df_scores: id count does not match candidate rows");
    std::vector<ScoredCandidate> out;
    out.reserve(ids.size());
    if (ids.empty())
        return out;
    const Matrix proba = predict_proba(model, candidates);
    const Matrix hidden = scope == EmbeddingScope::last_layer ? penultimate(model, candidates) : Matrix();
    for (Index i = 0; i < candidates.rows(); ++i) {
        const int y_hat = argmax_class(proba.row(i).transpose());
        const Vector g = scope == EmbeddingScope::last_layer
                             ? last_layer_embedding(proba.row(i).transpose(), hidden.row(i).transpose(), y_hat)
                             : grad_embedding(model, candidates.row(i).transpose(), y_hat, scope).values;
        out.push_back({ids[static_cast<std::size_t>(i)], df_score_from_embeddings(ref_mean, ref_size, g), y_hat});
    }
    return out;
}

std::vector<ScoredCandidate> df_scores(const AcquisitionContext& ctx)
{
    const Vector ref = reference_statistic(ctx);
    return df_scores(*ctx.model, ref, static_cast<Index>(ctx.labeled.size()), gather(*ctx.features, ctx.pool),
                     ctx.pool, ctx.scope);
}

IndexList top_b(const IndexList& indices, const std::vector<double>& scores, Index b)
{
    if (indices.size() != scores.size())
        throw std::invalid_argument("top_b: indices/scores size mismatch");
    std::vector<std::size_t> order(indices.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max<Index>(b, 0)));
    auto better = [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c])
            return scores[a] > scores[c];
        return indices[a] < indices[c];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
    IndexList out;
    out.reserve(take);
    for (std::size_t k = 0; k < take; ++k)
        out.push_back(indices[order[k]]);
    return out;
}

double entropy(const Eigen::Ref<const Vector>& proba)
{
    double h = 0.0;
    for (Index k = 0; k < proba.size(); ++k)
        if (proba(k) > 0.0)
            h -= proba(k) * std::log(proba(k));
    return h;
}

std::vector<Index> kmeanspp_seeding(const Matrix& points, Index b, Rng& rng)
{
    const Index n = points.rows();
    const Index take = std::min(n, std::max<Index>(b, 0));
    std::vector<Index> chosen;
    if (take == 0)
        return chosen;
    chosen.reserve(static_cast<std::size_t>(take));
    std::vector<bool> is_chosen(static_cast<std::size_t>(n), false);
    Vector nearest = Vector::Constant(n, std::numeric_limits<double>::infinity());

    auto add = [&](Index row) {
        chosen.push_back(row);
        is_chosen[static_cast<std::size_t>(row)] = true;
        for (Index i = 0; i < n; ++i)
            nearest(i) = std::min(nearest(i), (points.row(i) - points.row(row)).squaredNorm());
    };

    add(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
    while (static_cast<Index>(chosen.size()) < take) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i)
            if (!is_chosen[static_cast<std::size_t>(i)])
                total += nearest(i);
        Index pick = -1;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                if (is_chosen[static_cast<std::size_t>(i)] || nearest(i) <= 0.0)
                    continue;
                acc += nearest(i);
                pick = i;
                if (acc > target)
                    break;
            }
        } else {
            std::vector<Index> remaining;
            for (Index i = 0; i < n; ++i)
                if (!is_chosen[static_cast<std::size_t>(i)])
                    remaining.push_back(i);
            pick = remaining[static_cast<std::size_t>(rng.below(remaining.size()))];
        }
        add(pick);
    }
    return chosen;
}

std::vector<Index> kcenter_greedy(const Matrix& candidates, const Matrix& centers, Index b,
                                  const IndexList& candidate_ids, std::vector<double>* picked_distance)
{
    const Index n = candidates.rows();
    if (static_cast<Index>(candidate_ids.size()) != n)
        throw std::invalid_argument("kcenter_greedy: candidate id count mismatch");
    const Index take = std::min(n, std::max<Index>(b, 0));
    Vector nearest = Vector::Constant(n, std::numeric_limits<double>::infinity());
    for (Index c = 0; c < centers.rows(); ++c)
        for (Index i = 0; i < n; ++i)
            nearest(i) = std::min(nearest(i), (candidates.row(i) - centers.row(c)).squaredNorm());

    std::vector<bool> picked(static_cast<std::size_t>(n), false);
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(take));
    for (Index step = 0; step < take; ++step) {
        Index best = -1;
        for (Index i = 0; i < n; ++i) {
            if (picked[static_cast<std::size_t>(i)])
                continue;
            if (best < 0 || nearest(i) > nearest(best) ||
                (nearest(i) == nearest(best) &&
                 candidate_ids[static_cast<std::size_t>(i)] < candidate_ids[static_cast<std::size_t>(best)]))
                best = i;
        }
        picked[static_cast<std::size_t>(best)] = true;
        out.push_back(best);
        if (picked_distance)
            picked_distance->push_back(std::sqrt(nearest(best)));
        for (Index i = 0; i < n; ++i)
            nearest(i) = std::min(nearest(i), (candidates.row(i) - candidates.row(best)).squaredNorm());
    }
    return out;
}

AcquisitionBatch select_grad(const AcquisitionContext& ctx, Index b)
{
    if (b < 1)
        throw std::invalid_argument("select_grad: b must be >= 1");
    AcquisitionBatch batch = make_batch(Method::grad, ctx);
    if (ctx.pool.empty())
        return batch;
    const auto scored = df_scores(ctx);
    std::vector<double> scores;
    scores.reserve(scored.size());
    for (const auto& s : scored)
        scores.push_back(s.score);
    batch.indices = top_b(ctx.pool, scores, b);
    for (Index idx : batch.indices) {
        const auto pos = std::find(ctx.pool.begin(), ctx.pool.end(), idx) - ctx.pool.begin();
        batch.scores.push_back(scores[static_cast<std::size_t>(pos)]);
    }
    return batch;
}

AcquisitionBatch select_entropy(const AcquisitionContext& ctx, Index b)
{
    require_ready(ctx);
    if (b < 1)
        throw std::invalid_argument("select_entropy: b must be >= 1");
    AcquisitionBatch batch = make_batch(Method::entropy, ctx);
    if (ctx.pool.empty())
        return batch;
    const Matrix proba = predict_proba(*ctx.model, gather(*ctx.features, ctx.pool));
    std::vector<double> scores(ctx.pool.size());
    for (Index i = 0; i < proba.rows(); ++i)
        scores[static_cast<std::size_t>(i)] = entropy(proba.row(i).transpose());
    batch.indices = top_b(ctx.pool, scores, b);
    for (Index idx : batch.indices) {
        const auto pos = std::find(ctx.pool.begin(), ctx.pool.end(), idx) - ctx.pool.begin();
        batch.scores.push_back(scores[static_cast<std::size_t>(pos)]);
    }
    return batch;
}

AcquisitionBatch select_badge(const AcquisitionContext& ctx, Index b, Rng& rng)
{
    require_ready(ctx);
    if (b < 1)
        throw std::invalid_argument("select_badge: b must be >= 1");
    AcquisitionBatch batch = make_batch(Method::badge, ctx);
    if (ctx.pool.empty())
        return batch;
    const Matrix x = gather(*ctx.features, ctx.pool);
    const Matrix proba = predict_proba(*ctx.model, x);
    std::vector<int> pseudo(static_cast<std::size_t>(proba.rows()));
    for (Index i = 0; i < proba.rows(); ++i)
        pseudo[static_cast<std::size_t>(i)] = argmax_class(proba.row(i).transpose());
    const Matrix embeddings = last_layer_embeddings(proba, penultimate(*ctx.model, x), pseudo);
    for (Index row : kmeanspp_seeding(embeddings, b, rng))
        batch.indices.push_back(ctx.pool[static_cast<std::size_t>(row)]);
    return batch;
}

AcquisitionBatch select_kcenter(const AcquisitionContext& ctx, Index b)
{
    require_ready(ctx);
    if (b < 1)
        throw std::invalid_argument("select_kcenter: b must be >= 1");
    if (ctx.labeled.empty())
        throw std::invalid_argument("select_kcenter: labeled set is empty");
    AcquisitionBatch batch = make_batch(Method::kcenter, ctx);
    if (ctx.pool.empty())
        return batch;
    const Matrix pool_repr = penultimate(*ctx.model, gather(*ctx.features, ctx.pool));
    const Matrix labeled_repr = penultimate(*ctx.model, gather(*ctx.features, ctx.labeled));
    std::vector<double> dist;
    for (Index row : kcenter_greedy(pool_repr, labeled_repr, b, ctx.pool, &dist))
        batch.indices.push_back(ctx.pool[static_cast<std::size_t>(row)]);
    batch.scores = std::move(dist);
    return batch;
}

AcquisitionBatch select_random(const IndexList& pool, Index b, Rng& rng)
{
    if (b < 1)
        throw std::invalid_argument("select_random: b must be >= 1");
    AcquisitionBatch batch;
    batch.method = Method::random;
    IndexList order = pool;
    std::sort(order.begin(), order.end());
    const auto take = std::min<std::size_t>(order.size(), static_cast<std::size_t>(b));
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(order.size() - i));
        std::swap(order[i], order[j]);
    }
    batch.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
    return batch;
}

AcquisitionBatch select(Method method, const AcquisitionContext& ctx, Index b, Rng& rng)
{
    switch (method) {
    case Method::grad: return select_grad(ctx, b);
    case Method::entropy: return select_entropy(ctx, b);
    case Method::badge: return select_badge(ctx, b, rng);
    case Method::kcenter: return select_kcenter(ctx, b);
    case Method::random: {
        AcquisitionBatch batch = select_random(ctx.pool, b, rng);
        batch.round = ctx.round;
        return batch;
    }
    }
    throw std::invalid_argument("select: unknown method");
}

} // namespace dfal
