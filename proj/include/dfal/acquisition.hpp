#pragma once

#include "dfal/data.hpp"
#include "dfal/model.hpp"
#include "dfal/numerics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dfal {

enum class Method { grad, entropy, badge, kcenter, random };

std::string to_string(Method method);
/// Accepts "grad", "entropy", "badge", "kcenter", "random".
Method parse_method(const std::string& name);
const std::vector<Method>& all_methods();

struct ScoredCandidate {
    Index pool_index = 0;
    double score = 0.0;
    int pseudo_label = 0;
};

struct AcquisitionBatch {
    IndexList indices;
    Method method = Method::random;
    int round = 0;
    std::vector<double> scores; // parallel to indices; empty for badge and random
};

/// What a selector is allowed to see: the model, every feature row, and the
/// true labels of the labeled set only. Pool labels are never reachable.
struct AcquisitionContext {
    const ModelState* model = nullptr;
    const Matrix* features = nullptr;
    IndexList labeled;
    std::vector<int> labeled_labels;
    IndexList pool;
    EmbeddingScope scope = EmbeddingScope::last_layer;
    int round = 0;
};

AcquisitionContext make_context(const ModelState& model, const Dataset& dataset, const PoolState& pool,
                                EmbeddingScope scope = EmbeddingScope::last_layer);

/// Argmax with ties going to the lowest class id.
int argmax_class(const Eigen::Ref<const Vector>& proba);
int pseudo_label(const ModelState& model, const Eigen::Ref<const Vector>& x);

/// Set-to-point discrepancy from a reference mean over `ref_size` labeled
/// examples and a candidate embedding:
///     |R| / (|R| + 1) * || mean_R - g_x ||
/// which equals || grad f(R + {x}) - grad f({x}) || for a mean-aggregated loss.
double df_score_from_embeddings(const Eigen::Ref<const Vector>& ref_mean, Index ref_size,
                                const Eigen::Ref<const Vector>& candidate);

/// Mean gradient embedding over the labeled set with its true labels.
Vector reference_statistic(const AcquisitionContext& ctx);

ScoredCandidate df_score(const ModelState& model, const Dataset& dataset, const IndexList& labeled, Index x_index,
                         EmbeddingScope scope = EmbeddingScope::last_layer);

/// DF scores for every pool point in ctx.pool order.
std::vector<ScoredCandidate> df_scores(const AcquisitionContext& ctx);

/// DF scores of arbitrary candidate rows against a precomputed reference
/// mean over `ref_size` labeled examples. `ids` tags each row.
std::vector<ScoredCandidate> df_scores(const ModelState& model, const Vector& ref_mean, Index ref_size,
                                       const Matrix& candidates, const IndexList& ids, EmbeddingScope scope);

/// Top-b of `indices` by descending score, ties to the lower index.
IndexList top_b(const IndexList& indices, const std::vector<double>& scores, Index b);

/// Predictive entropy with 0 ln 0 = 0.
double entropy(const Eigen::Ref<const Vector>& proba);

/// k-means++ seeding: first row uniform, then rows drawn with probability
/// proportional to squared distance to the nearest chosen row. When every
/// remaining row sits on a chosen one, the next pick is uniform over the
/// rows not yet chosen. Returns row positions in selection order.
std::vector<Index> kmeanspp_seeding(const Matrix& points, Index b, Rng& rng);

/// Greedy farthest-first selection. Each iteration picks the candidate with
/// the largest Euclidean distance to its nearest center (initial centers plus
/// already picked candidates); ties go to the lower `candidate_ids` entry.
/// Returns candidate row positions in selection order and, optionally, the
/// distance at which each was picked.
std::vector<Index> kcenter_greedy(const Matrix& candidates, const Matrix& centers, Index b,
                                  const IndexList& candidate_ids, std::vector<double>* picked_distance = nullptr);

AcquisitionBatch select_grad(const AcquisitionContext& ctx, Index b);
AcquisitionBatch select_entropy(const AcquisitionContext& ctx, Index b);
AcquisitionBatch select_badge(const AcquisitionContext& ctx, Index b, Rng& rng);
AcquisitionBatch select_kcenter(const AcquisitionContext& ctx, Index b);
AcquisitionBatch select_random(const IndexList& pool, Index b, Rng& rng);

AcquisitionBatch select(Method method, const AcquisitionContext& ctx, Index b, Rng& rng);

} // namespace dfal
