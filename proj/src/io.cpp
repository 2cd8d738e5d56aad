#include "dfal/io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace dfal {

namespace {

// Typed, path-aware accessor over one JSON object section.
class Section {
public:
    Section(const Json* node, std::string path) : node_(node), path_(std::move(path))
    {
        if (node_ && !node_->is_object())
            throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return node_ && node_->contains(key); }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    Section sub(const std::string& key) const
    {
        return Section(has(key) ? &node_->at(key) : nullptr, field(key));
    }

    const Json* raw(const std::string& key) const { return has(key) ? &node_->at(key) : nullptr; }

    void allow(std::initializer_list<const char*> keys) const
    {
        if (!node_)
            return;
        std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& [k, v] : node_->items())
            if (!known.count(k))
                throw ConfigError(field(k) + ": unknown field");
    }

    double number(const std::string& key, double fallback) const
    {
        if (!has(key))
            return fallback;
        const Json& v = node_->at(key);
        if (!v.is_number())
            throw ConfigError(field(key) + ": expected a number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min_value) const
    {
        if (!has(key))
            return fallback;
        const Json& v = node_->at(key);
        if (!v.is_number_integer())
            throw ConfigError(field(key) + ": expected an integer");
        const auto value = v.get<std::int64_t>();
        if (value < min_value)
            throw ConfigError(field(key) + ": must be >= " + std::to_string(min_value));
        return value;
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) const
    {
        if (!has(key))
            return fallback;
        const Json& v = node_->at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ConfigError(field(key) + ": expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) const
    {
        if (!has(key))
            return fallback;
        const Json& v = node_->at(key);
        if (!v.is_boolean())
            throw ConfigError(field(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) const
    {
        if (!has(key))
            return fallback;
        const Json& v = node_->at(key);
        if (!v.is_string())
            throw ConfigError(field(key) + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<Index> widths(const std::string& key, const std::vector<Index>& fallback, Index min_value) const
    {
        if (!has(key))
            return fallback;
        const Json& v = node_->at(key);
        if (!v.is_array())
            throw ConfigError(field(key) + ": expected an array of integers");
        std::vector<Index> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < min_value)
                throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected an integer >= " +
                                  std::to_string(min_value));
            out.push_back(v[i].get<Index>());
        }
        return out;
    }

    std::vector<std::uint64_t> seeds(const std::string& key, const std::vector<std::uint64_t>& fallback) const
    {
        if (!has(key))
            return fallback;
        const Json& v = node_->at(key);
        if (!v.is_array() || v.empty())
            throw ConfigError(field(key) + ": expected a nonempty array of seeds");
        std::vector<std::uint64_t> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 0)
                throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a non-negative integer");
            out.push_back(v[i].get<std::uint64_t>());
        }
        return out;
    }

    std::vector<Method> methods(const std::string& key, const std::vector<Method>& fallback) const
    {
        if (!has(key))
            return fallback;
        const Json& v = node_->at(key);
        if (!v.is_array() || v.empty())
            throw ConfigError(field(key) + ": expected a nonempty array of method names");
        std::vector<Method> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const std::string where = field(key) + "[" + std::to_string(i) + "]";
            if (!v[i].is_string())
                throw ConfigError(where + ": expected a method name");
            Method m;
            try {
                m = parse_method(v[i].get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ConfigError(where + ": " + e.what());
            }
            if (std::find(out.begin(), out.end(), m) != out.end())
                throw ConfigError(where + ": duplicate method '" + to_string(m) + "'");
            out.push_back(m);
        }
        return out;
    }

private:
    const Json* node_;
    std::string path_;
};

void require(bool ok, const std::string& field, const std::string& message)
{
    if (!ok)
        throw ConfigError(field + ": " + message);
}

Json methods_json(const std::vector<Method>& methods)
{
    Json out = Json::array();
    for (Method m : methods)
        out.push_back(to_string(m));
    return out;
}

} // namespace

double RunConfig::fixed_learning_rate() const
{
    return experiment.train.learning_rate > 0.0 ? experiment.train.learning_rate : 0.01;
}

RunConfig parse_config(const Json& doc)
{
    RunConfig cfg;
    const Section root(&doc, "");
    root.allow({"name", "dataset", "split", "standardize", "model", "training", "acquisition", "seeds", "output",
                "geometry", "shift", "contraction", "timing"});
    cfg.name = root.string("name", cfg.name);
    cfg.experiment.name = cfg.name;

    const Section ds = root.sub("dataset");
    ds.allow({"kind", "name", "n_samples", "n_classes", "n_features", "spread", "seed", "path", "label_column"});
    cfg.dataset.kind = ds.string("kind", cfg.dataset.kind);
    require(cfg.dataset.kind == "blobs" || cfg.dataset.kind == "csv", ds.field("kind"),
            "expected \"blobs\" or \"csv\"");
    cfg.dataset.name = ds.string("name", cfg.dataset.kind == "blobs" ? "blobs" : "");
    cfg.dataset.n_samples = ds.integer("n_samples", cfg.dataset.n_samples, 2);
    cfg.dataset.n_classes = static_cast<int>(ds.integer("n_classes", cfg.dataset.n_classes, 1));
    cfg.dataset.n_features = ds.integer("n_features", cfg.dataset.n_features, 1);
    cfg.dataset.spread = ds.number("spread", cfg.dataset.spread);
    require(cfg.dataset.spread > 0.0, ds.field("spread"), "must be positive");
    require(cfg.dataset.n_samples >= cfg.dataset.n_classes, ds.field("n_samples"), "must be >= n_classes");
    cfg.dataset.seed = ds.seed("seed", cfg.dataset.seed);
    cfg.dataset.path = ds.string("path", "");
    cfg.dataset.label_column = ds.string("label_column", cfg.dataset.label_column);
    if (cfg.dataset.kind == "csv") {
        require(!cfg.dataset.path.empty(), ds.field("path"), "required for csv datasets");
        if (cfg.dataset.name.empty())
            cfg.dataset.name = std::filesystem::path(cfg.dataset.path).stem().string();
    }

    const Section sp = root.sub("split");
    sp.allow({"test_fraction", "validation_fraction", "seed", "stratified"});
    auto& split = cfg.experiment.split;
    split.test_fraction = sp.number("test_fraction", split.test_fraction);
    require(split.test_fraction > 0.0 && split.test_fraction < 1.0, sp.field("test_fraction"), "must be in (0, 1)");
    split.validation_fraction = sp.number("validation_fraction", split.validation_fraction);
    require(split.validation_fraction >= 0.0 && split.validation_fraction < 1.0, sp.field("validation_fraction"),
            "must be in [0, 1)");
    require(split.test_fraction + split.validation_fraction < 1.0, sp.field("validation_fraction"),
            "test_fraction + validation_fraction must be < 1");
    split.seed = sp.seed("seed", split.seed);
    split.stratified = sp.boolean("stratified", split.stratified);
    cfg.experiment.standardize = root.boolean("standardize", cfg.experiment.standardize);

    const Section md = root.sub("model");
    md.allow({"hidden_widths"});
    cfg.experiment.arch.hidden_widths = md.widths("hidden_widths", cfg.experiment.arch.hidden_widths, 1);

    const Section tr = root.sub("training");
    tr.allow({"learning_rate", "lr_grid", "momentum", "minibatch_size", "epochs"});
    auto& train = cfg.experiment.train;
    train.learning_rate = 0.0; // sweep unless a rate is given
    if (const Json* lr = tr.raw("learning_rate")) {
        if (lr->is_string()) {
            require(lr->get<std::string>() == "sweep", tr.field("learning_rate"), "expected a number or \"sweep\"");
        } else {
            require(lr->is_number() && lr->get<double>() > 0.0, tr.field("learning_rate"),
                    "expected a positive number or \"sweep\"");
            train.learning_rate = lr->get<double>();
        }
    }
    if (const Json* grid = tr.raw("lr_grid")) {
        require(grid->is_array() && !grid->empty(), tr.field("lr_grid"), "expected a nonempty array of rates");
        cfg.experiment.lr_grid.clear();
        for (const auto& v : *grid) {
            require(v.is_number() && v.get<double>() > 0.0, tr.field("lr_grid"), "rates must be positive numbers");
            cfg.experiment.lr_grid.push_back(v.get<double>());
        }
    }
    train.momentum = tr.number("momentum", train.momentum);
    require(train.momentum >= 0.0 && train.momentum < 1.0, tr.field("momentum"), "must be in [0, 1)");
    train.minibatch_size = tr.integer("minibatch_size", train.minibatch_size, 1);
    train.epochs = static_cast<int>(tr.integer("epochs", train.epochs, 1));

    const Section aq = root.sub("acquisition");
    aq.allow({"methods", "batch_size", "rounds", "initial_size", "scope"});
    cfg.methods = aq.methods("methods", cfg.methods);
    cfg.experiment.method = cfg.methods.front();
    cfg.experiment.batch_size = aq.integer("batch_size", cfg.experiment.batch_size, 1);
    cfg.experiment.rounds = static_cast<int>(aq.integer("rounds", cfg.experiment.rounds, 0));
    cfg.experiment.initial_size = aq.integer("initial_size", cfg.experiment.batch_size, 1);
    try {
        cfg.experiment.scope = parse_scope(aq.string("scope", "last_layer"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(aq.field("scope") + ": " + e.what());
    }

    cfg.experiment.seeds = root.seeds("seeds", cfg.experiment.seeds);

    const Section out = root.sub("output");
    out.allow({"dir"});
    cfg.out_dir = out.string("dir", cfg.out_dir);

    const Section geo = root.sub("geometry");
    geo.allow({"initial_size", "batch_sizes", "methods", "hidden_widths", "seed"});
    cfg.geometry.initial_size = geo.integer("initial_size", cfg.geometry.initial_size, 1);
    cfg.geometry.batch_sizes = geo.widths("batch_sizes", cfg.geometry.batch_sizes, 1);
    require(!cfg.geometry.batch_sizes.empty(), geo.field("batch_sizes"), "must not be empty");
    cfg.geometry.methods = geo.methods("methods", cfg.geometry.methods);
    cfg.geometry.hidden_widths = geo.widths("hidden_widths", cfg.geometry.hidden_widths, 1);
    cfg.geometry.seed = geo.seed("seed", cfg.geometry.seed);

    const Section sh = root.sub("shift");
    sh.allow({"shift_sigma", "eval_size", "shifted_size"});
    cfg.shift.shift_sigma = sh.number("shift_sigma", cfg.shift.shift_sigma);
    cfg.shift.eval_size = sh.integer("eval_size", cfg.shift.eval_size, 1);
    cfg.shift.shifted_size = sh.integer("shifted_size", cfg.shift.eval_size, 1);

    const Section ct = root.sub("contraction");
    ct.allow({"s_size", "subset_fraction", "epochs", "learning_rate", "momentum", "minibatch_size", "hidden_widths",
              "scope", "standardize", "seeds"});
    auto& cb = cfg.contraction.base;
    cb.s_size = ct.integer("s_size", cb.s_size, 2);
    cb.subset_fraction = ct.number("subset_fraction", cb.subset_fraction);
    require(cb.subset_fraction > 0.0 && cb.subset_fraction < 1.0, ct.field("subset_fraction"), "must be in (0, 1)");
    cb.epochs = static_cast<int>(ct.integer("epochs", cb.epochs, 1));
    cb.learning_rate = ct.number("learning_rate", cb.learning_rate);
    require(cb.learning_rate >= 0.0, ct.field("learning_rate"), "must be non-negative");
    cb.momentum = ct.number("momentum", cb.momentum);
    require(cb.momentum >= 0.0 && cb.momentum < 1.0, ct.field("momentum"), "must be in [0, 1)");
    cb.minibatch_size = ct.integer("minibatch_size", cb.minibatch_size, 0);
    cb.hidden_widths = ct.widths("hidden_widths", cb.hidden_widths, 1);
    try {
        cb.scope = parse_scope(ct.string("scope", to_string(cb.scope)));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ct.field("scope") + ": " + e.what());
    }
    cb.standardize = ct.boolean("standardize", cb.standardize);
    cfg.contraction.seeds = ct.seeds("seeds", cfg.contraction.seeds);

    const Section tm = root.sub("timing");
    tm.allow({"pool_size", "batch_size", "initial_size", "rounds", "epochs", "methods", "seed"});
    cfg.timing.pool_size = tm.integer("pool_size", cfg.timing.pool_size, 1);
    cfg.timing.batch_size = tm.integer("batch_size", cfg.timing.batch_size, 1);
    cfg.timing.initial_size = tm.integer("initial_size", cfg.timing.batch_size, 1);
    cfg.timing.rounds = static_cast<int>(tm.integer("rounds", cfg.timing.rounds, 1));
    cfg.timing.epochs = static_cast<int>(tm.integer("epochs", cfg.timing.epochs, 1));
    cfg.timing.methods = tm.methods("methods", cfg.timing.methods);
    cfg.timing.seed = tm.seed("seed", cfg.timing.seed);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path.string() + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    RunConfig cfg = parse_config(doc);
    // Relative CSV paths resolve against the config file's directory.
    if (cfg.dataset.kind == "csv" && std::filesystem::path(cfg.dataset.path).is_relative())
        cfg.dataset.path = (path.parent_path() / cfg.dataset.path).lexically_normal().string();
    return cfg;
}

Json to_json(const RunConfig& cfg)
{
    const auto& e = cfg.experiment;
    Json j;
    j["name"] = cfg.name;
    Json ds = {{"kind", cfg.dataset.kind}, {"name", cfg.dataset.name}};
    if (cfg.dataset.kind == "blobs") {
        ds["n_samples"] = cfg.dataset.n_samples;
        ds["n_classes"] = cfg.dataset.n_classes;
        ds["n_features"] = cfg.dataset.n_features;
        ds["spread"] = cfg.dataset.spread;
        ds["seed"] = cfg.dataset.seed;
    } else {
        ds["path"] = cfg.dataset.path;
        ds["label_column"] = cfg.dataset.label_column;
    }
    j["dataset"] = ds;
    j["split"] = {{"test_fraction", e.split.test_fraction},
                  {"validation_fraction", e.split.validation_fraction},
                  {"seed", e.split.seed},
                  {"stratified", e.split.stratified}};
    j["standardize"] = e.standardize;
    j["model"] = {{"hidden_widths", e.arch.hidden_widths}};
    j["training"] = {{"learning_rate", e.train.learning_rate > 0.0 ? Json(e.train.learning_rate) : Json("sweep")},
                     {"lr_grid", e.lr_grid},
                     {"momentum", e.train.momentum},
                     {"minibatch_size", e.train.minibatch_size},
                     {"epochs", e.train.epochs}};
    j["acquisition"] = {{"methods", methods_json(cfg.methods)},
                        {"batch_size", e.batch_size},
                        {"rounds", e.rounds},
                        {"initial_size", e.initial_size},
                        {"scope", to_string(e.scope)}};
    j["seeds"] = e.seeds;
    j["geometry"] = {{"initial_size", cfg.geometry.initial_size},
                     {"batch_sizes", cfg.geometry.batch_sizes},
                     {"methods", methods_json(cfg.geometry.methods)},
                     {"hidden_widths", cfg.geometry.hidden_widths},
                     {"seed", cfg.geometry.seed}};
    j["shift"] = {{"shift_sigma", cfg.shift.shift_sigma},
                  {"eval_size", cfg.shift.eval_size},
                  {"shifted_size", cfg.shift.shifted_size}};
    const auto& c = cfg.contraction.base;
    j["contraction"] = {{"s_size", c.s_size},
                        {"subset_fraction", c.subset_fraction},
                        {"epochs", c.epochs},
                        {"learning_rate", c.learning_rate},
                        {"momentum", c.momentum},
                        {"minibatch_size", c.minibatch_size},
                        {"hidden_widths", c.hidden_widths},
                        {"scope", to_string(c.scope)},
                        {"standardize", c.standardize},
                        {"seeds", cfg.contraction.seeds}};
    j["timing"] = {{"pool_size", cfg.timing.pool_size},   {"batch_size", cfg.timing.batch_size},
                   {"initial_size", cfg.timing.initial_size}, {"rounds", cfg.timing.rounds},
                   {"epochs", cfg.timing.epochs},         {"methods", methods_json(cfg.timing.methods)},
                   {"seed", cfg.timing.seed}};
    // output.dir is not fingerprinted.
    return j;
}

std::string fingerprint(const Json& doc)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(doc.dump())));
    return buf;
}

std::string config_fingerprint(const RunConfig& cfg) { return fingerprint(to_json(cfg)); }

Dataset build_dataset(const DatasetSpec& spec)
{
    Dataset ds;
    if (spec.kind == "csv") {
        ds = load_csv(spec.path, spec.label_column);
    } else {
        ds = make_blobs(spec.n_samples, spec.n_classes, spec.n_features, spec.spread, spec.seed);
    }
    if (!spec.name.empty())
        ds.name = spec.name;
    return ds;
}

// ---------------------------------------------------------------------------

Json to_json(const AcquisitionBatch& batch)
{
    Json j;
    j["indices"] = batch.indices;
    j["method"] = to_string(batch.method);
    j["round"] = batch.round;
    j["scores"] = batch.scores.empty() ? Json(nullptr) : Json(batch.scores);
    return j;
}

Json to_json(const RoundRecord& record)
{
    Json j;
    j["round"] = record.round;
    j["labeled_size"] = record.labeled_size;
    j["test_accuracy"] = record.test_accuracy;
    j["acquisition_seconds"] = record.acquisition_seconds;
    j["batch"] = record.batch.indices.empty() && record.batch.scores.empty() ? Json(nullptr) : to_json(record.batch);
    return j;
}

Json to_json(const ExperimentResult& result)
{
    Json per_seed = Json::array();
    Json seeds = Json::array();
    Json initial = Json::array();
    Json truncated = Json::array();
    Json errors = Json::array();
    for (const auto& run : result.runs) {
        Json records = Json::array();
        for (const auto& r : run.rounds)
            records.push_back(to_json(r));
        per_seed.push_back(records);
        seeds.push_back(run.seed);
        initial.push_back(run.initial_labeled);
        truncated.push_back(run.truncated);
        errors.push_back(run.error ? Json(*run.error) : Json(nullptr));
    }
    return {{"learning_rate", result.learning_rate},
            {"seeds", seeds},
            {"initial_labeled", initial},
            {"truncated", truncated},
            {"errors", errors},
            {"per_seed", per_seed}};
}

ExperimentResult experiment_result_from_json(const std::string& method, const Json& doc)
{
    ExperimentResult result;
    result.method = parse_method(method);
    result.learning_rate = doc.at("learning_rate").get<double>();
    const auto& per_seed = doc.at("per_seed");
    const auto& seeds = doc.at("seeds");
    for (std::size_t s = 0; s < per_seed.size(); ++s) {
        SeedRun run;
        run.seed = seeds.at(s).get<std::uint64_t>();
        if (doc.contains("initial_labeled"))
            run.initial_labeled = doc["initial_labeled"].at(s).get<IndexList>();
        if (doc.contains("truncated"))
            run.truncated = doc["truncated"].at(s).get<bool>();
        if (doc.contains("errors") && !doc["errors"].at(s).is_null())
            run.error = doc["errors"].at(s).get<std::string>();
        for (const auto& r : per_seed[s]) {
            RoundRecord rec;
            rec.round = r.at("round").get<int>();
            rec.labeled_size = r.at("labeled_size").get<Index>();
            rec.test_accuracy = r.at("test_accuracy").get<double>();
            rec.acquisition_seconds = r.at("acquisition_seconds").get<double>();
            if (!r.at("batch").is_null()) {
                const auto& b = r["batch"];
                rec.batch.indices = b.at("indices").get<IndexList>();
                rec.batch.method = parse_method(b.at("method").get<std::string>());
                rec.batch.round = b.at("round").get<int>();
                if (!b.at("scores").is_null())
                    rec.batch.scores = b["scores"].get<std::vector<double>>();
            }
            run.rounds.push_back(std::move(rec));
        }
        result.runs.push_back(std::move(run));
    }
    return result;
}

Json to_json(const PenaltyMatrix& ppm)
{
    Json rows = Json::array();
    for (Index i = 0; i < ppm.P.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < ppm.P.cols(); ++j)
            row.push_back(ppm.P(i, j));
        rows.push_back(row);
    }
    Json scores = Json::object();
    const auto loss = loss_scores(ppm);
    for (std::size_t k = 0; k < ppm.methods.size(); ++k)
        scores[ppm.methods[k]] = loss[k];
    return {{"methods", ppm.methods}, {"P", rows}, {"experiments_counted", ppm.experiments_counted},
            {"loss_scores", scores}};
}

Json to_json(const ContractionReport& report)
{
    return {{"df_norms", report.df_norms},
            {"t0_estimate", report.t0_estimate ? Json(*report.t0_estimate) : Json(nullptr)},
            {"violation_count_after_t0", report.violation_count_after_t0},
            {"rho_hat", report.rho_hat ? Json(*report.rho_hat) : Json(nullptr)},
            {"s_size", report.s_indices.size()},
            {"subset_size", report.subset_indices.size()}};
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

Json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "'");
    return Json::parse(in);
}

std::string ppm_csv(const PenaltyMatrix& ppm, const std::string& fp)
{
    std::ostringstream os;
    os << "# config_fingerprint=" << fp << '\n';
    os << "method";
    for (const auto& m : ppm.methods)
        os << ',' << m;
    os << '\n';
    os.precision(17);
    for (std::size_t i = 0; i < ppm.methods.size(); ++i) {
        os << ppm.methods[i];
        for (std::size_t j = 0; j < ppm.methods.size(); ++j)
            os << ',' << ppm.P(static_cast<Index>(i), static_cast<Index>(j));
        os << '\n';
    }
    return os.str();
}

std::string iso_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace dfal
