#include "dfal/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace dfal {

void Dataset::validate() const
{
    if (static_cast<Index>(labels.size()) != features.rows())
        throw std::invalid_argument("dataset '" + name + "': label count does not match feature rows");
    if (n_classes < 1)
        throw std::invalid_argument("dataset '" + name + "': n_classes must be positive");
    if (features.rows() < n_classes)
        throw std::invalid_argument("dataset '" + name + "': fewer samples than classes");
    for (int y : labels)
        if (y < 0 || y >= n_classes)
            throw std::invalid_argument("dataset '" + name + "': label outside [0, n_classes)");
    if (!features.allFinite())
        throw std::invalid_argument("dataset '" + name + "': non-finite feature value");
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
        s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string_view rest(line);
    while (true) {
        const auto comma = rest.find(',');
        out.emplace_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos)
            break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

bool parse_double(std::string_view text, double& value)
{
    if (text.empty())
        return false;
    if (text.front() == '+')
        text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    return ec == std::errc() && ptr == text.data() + text.size();
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line))
        throw ParseError("'" + path.string() + "': missing header row");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        line.erase(0, 3);
    const auto header = split_fields(line);
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end())
        throw ParseError("'" + path.string() + "': label column '" + label_column + "' not found");
    const auto label_col = static_cast<std::size_t>(label_it - header.begin());
    const std::size_t n_cols = header.size();

    std::vector<double> values;
    std::vector<std::string> raw_labels;
    std::size_t row = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        ++row;
        const auto fields = split_fields(line);
        const std::string where = "row " + std::to_string(row) + " (line " + std::to_string(line_no) + ")";
        if (fields.size() != n_cols)
            throw ParseError("'" + path.string() + "': " + where + " has " + std::to_string(fields.size()) +
                             " fields, expected " + std::to_string(n_cols));
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (c == label_col) {
                if (fields[c].empty())
                    throw ParseError("'" + path.string() + "': " + where + ": empty label");
                raw_labels.push_back(fields[c]);
                continue;
            }
            double v = 0.0;
            if (!parse_double(fields[c], v) || !std::isfinite(v))
                throw ParseError("'" + path.string() + "': " + where + ", column '" + header[c] +
                                 "': non-numeric value '" + fields[c] + "'");
            values.push_back(v);
        }
    }
    if (row == 0)
        throw ParseError("'" + path.string() + "': no data rows");

    const Index n_features = static_cast<Index>(n_cols) - 1;
    Dataset ds;
    ds.name = path.stem().string();
    ds.features = Eigen::Map<const Matrix>(values.data(), static_cast<Index>(row), n_features);

    // Sorted-value encoding; numeric labels sort numerically.
    std::vector<std::string> distinct = raw_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const bool numeric = std::all_of(distinct.begin(), distinct.end(), [](const std::string& s) {
        double v;
        return parse_double(s, v);
    });
    if (numeric) {
        std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
            double va = 0, vb = 0;
            parse_double(a, va);
            parse_double(b, vb);
            return va < vb;
        });
    }
    std::map<std::string, int> code;
    for (std::size_t i = 0; i < distinct.size(); ++i)
        code[distinct[i]] = static_cast<int>(i);
    ds.labels.reserve(raw_labels.size());
    for (const auto& l : raw_labels)
        ds.labels.push_back(code.at(l));
    ds.n_classes = static_cast<int>(distinct.size());
    ds.validate();
    return ds;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path, const std::string& label_column)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    for (Index j = 0; j < dataset.n_features(); ++j)
        out << 'f' << j << ',';
    out << label_column << '\n';
    out << std::setprecision(17);
    for (Index i = 0; i < dataset.size(); ++i) {
        for (Index j = 0; j < dataset.n_features(); ++j)
            out << dataset.features(i, j) << ',';
        out << dataset.labels[static_cast<std::size_t>(i)] << '\n';
    }
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

Dataset make_blobs(Index n_samples, int n_classes, Index n_features, double spread, std::uint64_t seed)
{
    if (n_classes < 1 || n_samples < n_classes)
        throw std::invalid_argument("make_blobs: need n_samples >= n_classes >= 1");
    if (n_features < 1)
        throw std::invalid_argument("make_blobs: need at least one feature");
    if (!(spread >= 0.0))
        throw std::invalid_argument("make_blobs: spread must be non-negative");

    Rng rng(seed, "make_blobs");
    Matrix centers(n_classes, n_features);
    for (Index c = 0; c < n_classes; ++c)
        for (Index j = 0; j < n_features; ++j)
            centers(c, j) = -10.0 + 20.0 * rng.uniform();

    Dataset ds;
    ds.name = "blobs";
    ds.n_classes = n_classes;
    ds.features.resize(n_samples, n_features);
    ds.labels.resize(static_cast<std::size_t>(n_samples));
    for (Index i = 0; i < n_samples; ++i) {
        const int c = static_cast<int>(i % n_classes);
        ds.labels[static_cast<std::size_t>(i)] = c;
        for (Index j = 0; j < n_features; ++j)
            ds.features(i, j) = centers(c, j) + spread * rng.normal();
    }
    return ds;
}

Dataset make_shifted(const Dataset& dataset, const Vector& shift)
{
    if (shift.size() != dataset.n_features())
        throw std::invalid_argument("make_shifted: shift has " + std::to_string(shift.size()) +
                                    " entries, dataset has " + std::to_string(dataset.n_features()) +
                                    " features");
    Dataset out = dataset;
    out.features.rowwise() += shift.transpose();
    out.name = dataset.name + "-shifted";
    return out;
}

Dataset subset(const Dataset& dataset, const IndexList& indices)
{
    Dataset out;
    out.name = dataset.name;
    out.n_classes = dataset.n_classes;
    out.features = dataset.features(indices, Eigen::all);
    out.labels.reserve(indices.size());
    for (Index i : indices)
        out.labels.push_back(dataset.labels[static_cast<std::size_t>(i)]);
    return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace {

// Largest-remainder apportionment of `total` across groups proportional to
// `sizes`, capped by `capacity`.
std::vector<Index> apportion(const std::vector<Index>& sizes, const std::vector<Index>& capacity, Index total)
{
    Index n = 0;
    for (Index s : sizes)
        n += s;
    std::vector<Index> out(sizes.size(), 0);
    if (n == 0 || total == 0)
        return out;
    std::vector<std::pair<Index, std::size_t>> remainders;
    Index assigned = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        const Index q = sizes[c] * total;
        out[c] = std::min(q / n, capacity[c]);
        assigned += out[c];
        remainders.emplace_back(q % n, c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    bool progress = true;
    while (assigned < total && progress) {
        progress = false;
        for (const auto& [rem, c] : remainders) {
            if (assigned == total)
                break;
            if (out[c] < capacity[c]) {
                ++out[c];
                ++assigned;
                progress = true;
            }
        }
    }
    return out;
}

} // namespace

Split split(const Dataset& dataset, const SplitSpec& spec)
{
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
        throw std::invalid_argument("split: test_fraction must be in (0, 1)");
    if (!(spec.validation_fraction >= 0.0 && spec.validation_fraction < 1.0))
        throw std::invalid_argument("split: validation_fraction must be in [0, 1)");
    if (!(spec.test_fraction + spec.validation_fraction < 1.0))
        throw std::invalid_argument("split: fractions must sum to less than 1");

    const Index n = dataset.size();
    const auto n_test = static_cast<Index>(std::llround(spec.test_fraction * static_cast<double>(n)));
    const auto n_val = static_cast<Index>(std::llround(spec.validation_fraction * static_cast<double>(n)));

    Split out;
    if (!spec.stratified) {
        IndexList order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
        Rng rng(spec.seed, "split");
        rng.shuffle(order);
        out.test.assign(order.begin(), order.begin() + n_test);
        out.validation.assign(order.begin() + n_test, order.begin() + n_test + n_val);
        out.train.assign(order.begin() + n_test + n_val, order.end());
    } else {
        std::vector<IndexList> by_class(static_cast<std::size_t>(dataset.n_classes));
        for (Index i = 0; i < n; ++i)
            by_class[static_cast<std::size_t>(dataset.labels[static_cast<std::size_t>(i)])].push_back(i);
        std::vector<Index> sizes;
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            if (by_class[c].size() < 2)
                throw std::invalid_argument("split: class " + std::to_string(c) +
                                            " has fewer than 2 samples; cannot stratify");
            Rng rng(spec.seed, "split-class", c);
            rng.shuffle(by_class[c]);
            sizes.push_back(static_cast<Index>(by_class[c].size()));
        }
        // Keep at least one training sample per class.
        std::vector<Index> capacity;
        for (Index s : sizes)
            capacity.push_back(s - 1);
        const auto test_counts = apportion(sizes, capacity, n_test);
        for (std::size_t c = 0; c < sizes.size(); ++c)
            capacity[c] -= test_counts[c];
        const auto val_counts = apportion(sizes, capacity, n_val);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            const auto& idx = by_class[c];
            const auto t = static_cast<std::size_t>(test_counts[c]);
            const auto v = static_cast<std::size_t>(val_counts[c]);
            out.test.insert(out.test.end(), idx.begin(), idx.begin() + t);
            out.validation.insert(out.validation.end(), idx.begin() + t, idx.begin() + t + v);
            out.train.insert(out.train.end(), idx.begin() + t + v, idx.end());
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

void PoolState::acquire(const IndexList& batch)
{
    IndexList sorted_batch = batch;
    std::sort(sorted_batch.begin(), sorted_batch.end());
    if (std::adjacent_find(sorted_batch.begin(), sorted_batch.end()) != sorted_batch.end())
        throw std::invalid_argument("PoolState::acquire: duplicate index in batch");
    IndexList remaining;
    remaining.reserve(unlabeled.size());
    std::set_difference(unlabeled.begin(), unlabeled.end(), sorted_batch.begin(), sorted_batch.end(),
                        std::back_inserter(remaining));
    if (remaining.size() + sorted_batch.size() != unlabeled.size())
        throw std::invalid_argument("PoolState::acquire: batch contains indices outside the unlabeled pool");
    unlabeled = std::move(remaining);
    IndexList merged;
    merged.reserve(labeled.size() + sorted_batch.size());
    std::merge(labeled.begin(), labeled.end(), sorted_batch.begin(), sorted_batch.end(), std::back_inserter(merged));
    labeled = std::move(merged);
    ++round;
}

PoolState init_pool(const IndexList& train, Index initial_size, std::uint64_t seed)
{
    if (initial_size < 0 || initial_size > static_cast<Index>(train.size()))
        throw std::invalid_argument("init_pool: initial_size " + std::to_string(initial_size) +
                                    " exceeds training set size " + std::to_string(train.size()));
    IndexList order = train;
    std::sort(order.begin(), order.end());
    Rng rng(seed, "init_pool");
    rng.shuffle(order);
    PoolState pool;
    pool.labeled.assign(order.begin(), order.begin() + initial_size);
    pool.unlabeled.assign(order.begin() + initial_size, order.end());
    std::sort(pool.labeled.begin(), pool.labeled.end());
    std::sort(pool.unlabeled.begin(), pool.unlabeled.end());
    return pool;
}

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

Standardizer::Standardizer(Vector mean, Vector stddev) : mean_(std::move(mean)), stddev_(std::move(stddev))
{
    if (mean_.size() != stddev_.size())
        throw std::invalid_argument("Standardizer: mean/std size mismatch");
    stddev_ = stddev_.cwiseMax(std_floor);
}

Standardizer Standardizer::fit(const Matrix& features, const IndexList& rows)
{
    if (rows.empty())
        throw std::invalid_argument("Standardizer::fit: no rows");
    const Matrix x = features(rows, Eigen::all);
    Vector mean = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - mean.transpose();
    Vector var = centered.colwise().squaredNorm().transpose() / static_cast<double>(x.rows());
    return Standardizer(std::move(mean), var.cwiseSqrt());
}

Matrix Standardizer::transform(const Matrix& features) const
{
    if (features.cols() != mean_.size())
        throw std::invalid_argument("Standardizer::transform: feature count mismatch");
    return (features.rowwise() - mean_.transpose()).array().rowwise() / stddev_.transpose().array();
}

Matrix Standardizer::inverse_transform(const Matrix& features) const
{
    if (features.cols() != mean_.size())
        throw std::invalid_argument("Standardizer::inverse_transform: feature count mismatch");
    return (features.array().rowwise() * stddev_.transpose().array()).matrix().rowwise() + mean_.transpose();
}

} // namespace dfal
