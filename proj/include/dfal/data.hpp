#pragma once

#include "dfal/numerics.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfal {

/// Labeled feature matrix. Labels are contiguous class ids in [0, n_classes).
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int n_classes = 0;
    std::string name;

    Index size() const { return features.rows(); }
    Index n_features() const { return features.cols(); }

    /// Throws std::invalid_argument if any invariant is violated.
    void validate() const;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a headered, comma-separated file. Every column except `label_column`
/// must be numeric. Labels are re-encoded to 0..k-1 by sorted original value
/// (numeric order when every label parses as a number, lexicographic otherwise).
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Writes features as f0..f{d-1} followed by a `label` column, with
/// round-trip precision.
void write_csv(const Dataset& dataset, const std::filesystem::path& path,
               const std::string& label_column = "label");

/// Isotropic Gaussian blobs, one per class, centers uniform in [-10, 10]^d.
/// Sample i belongs to class i % n_classes.
Dataset make_blobs(Index n_samples, int n_classes, Index n_features, double spread,
                   std::uint64_t seed);

/// Copy of `dataset` with every row translated by `shift`.
Dataset make_shifted(const Dataset& dataset, const Vector& shift);

Dataset subset(const Dataset& dataset, const IndexList& indices);

struct SplitSpec {
    double test_fraction = 0.2;
    double validation_fraction = 0.0;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct Split {
    IndexList train;
    IndexList validation;
    IndexList test;
};

/// Disjoint, covering split. With `stratified`, each class contributes
/// round(fraction * class_size) samples to test and validation.
Split split(const Dataset& dataset, const SplitSpec& spec);

/// Labeled/unlabeled partition of the training indices at one round.
struct PoolState {
    IndexList labeled;
    IndexList unlabeled;
    int round = 0;

    /// Moves `batch` from unlabeled to labeled and advances the round.
    void acquire(const IndexList& batch);
};

PoolState init_pool(const IndexList& train, Index initial_size, std::uint64_t seed);

class Standardizer {
public:
    static constexpr double std_floor = 1e-8;

    Standardizer() = default;
    Standardizer(Vector mean, Vector stddev);

    /// Fits per-feature mean and population standard deviation on `rows`.
    static Standardizer fit(const Matrix& features, const IndexList& rows);

    Matrix transform(const Matrix& features) const;
    Matrix inverse_transform(const Matrix& features) const;

    const Vector& mean() const { return mean_; }
    const Vector& stddev() const { return stddev_; }

private:
    Vector mean_;
    Vector stddev_;
};

} // namespace dfal
