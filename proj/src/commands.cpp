#include "dfal/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace dfal {

namespace fs = std::filesystem;

namespace {

std::ostream& log_of(const CommandOptions& opts) { return opts.log ? *opts.log : std::cerr; }

template <class Body>
int guarded(const CommandOptions& opts, const char* command, Body&& body)
{
    std::ostream& log = log_of(opts);
    try {
        return body();
    } catch (const ConfigError& e) {
        log << "dfal " << command << ": config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        log << "dfal " << command << ": error: " << e.what() << '\n';
        return exit_runtime;
    }
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fingerprint_line(const std::string& fp) { return "# config_fingerprint=" + fp + "\n"; }

struct Manifest {
    std::string command;
    Json config;
    std::string fingerprint;
    std::string started = iso_timestamp();
    std::vector<std::string> outputs;

    Json finish() const
    {
        return {{"command", command},
                {"artifact_version", artifact_version},
                {"config", config},
                {"config_fingerprint", fingerprint},
                {"started", started},
                {"finished", iso_timestamp()},
                {"outputs", outputs}};
    }
};

Manifest start_manifest(const std::string& command, const RunConfig& cfg)
{
    Manifest m;
    m.command = command;
    m.config = to_json(cfg);
    m.fingerprint = fingerprint(m.config);
    return m;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

ArchSpec arch_for(const std::vector<Index>& widths, const Dataset& data)
{
    ArchSpec arch;
    arch.input_dim = data.n_features();
    arch.hidden_widths = widths;
    arch.n_classes = data.n_classes;
    return arch;
}

std::string model_hash(const ModelState& model)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(model.fingerprint()));
    return buf;
}

double mean_of(const std::vector<double>& v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v)
{
    if (v.size() < 2)
        return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string file_label(const std::string& text)
{
    std::string out = text;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.')
            c = '_';
    return out;
}

} // namespace

fs::path output_root(const RunConfig& cfg, const CommandOptions& opts)
{
    if (opts.out)
        return *opts.out;
    if (const char* env = std::getenv(out_dir_env); env && *env)
        return env;
    return cfg.out_dir;
}

fs::path run_directory(const RunConfig& cfg, const CommandOptions& opts)
{
    return output_root(cfg, opts) / config_fingerprint(cfg);
}

RunConfig load_checked_config(const fs::path& path)
{
    RunConfig cfg = load_config(path);
    try {
        cfg.experiment.validate();
        cfg.contraction.base.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

int cmd_run(const CommandOptions& opts)
{
    return guarded(opts, "run", [&] {
        const RunConfig cfg = load_checked_config(opts.config);
        Manifest manifest = start_manifest("run", cfg);
        std::ostream& log = log_of(opts);

        const Dataset dataset = build_dataset(cfg.dataset);
        const PreparedData prepared = prepare_data(dataset, cfg.experiment);
        const double lr = select_learning_rate(prepared, cfg.experiment);
        log << "dfal run: " << dataset.name << ", learning rate " << lr << '\n';

        struct Job {
            std::size_t method;
            std::size_t seed;
        };
        std::vector<Job> jobs;
        for (std::size_t m = 0; m < cfg.methods.size(); ++m)
            for (std::size_t s = 0; s < cfg.experiment.seeds.size(); ++s)
                jobs.push_back({m, s});

        std::vector<ExperimentResult> results(cfg.methods.size());
        for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
            results[m].method = cfg.methods[m];
            results[m].learning_rate = lr;
            results[m].runs.resize(cfg.experiment.seeds.size());
        }

        std::atomic<std::size_t> next{0};
        std::mutex log_mutex;
        auto worker = [&] {
            for (std::size_t j = next++; j < jobs.size(); j = next++) {
                const auto [m, s] = jobs[j];
                ExperimentConfig ec = cfg.experiment;
                ec.method = cfg.methods[m];
                const std::uint64_t seed = ec.seeds[s];
                SeedRun run;
                try {
                    run = run_seed(prepared, ec, lr, seed);
                } catch (const std::exception& e) {
                    run.seed = seed;
                    run.error = "seed " + std::to_string(seed) + ": " + e.what();
                }
                std::lock_guard lock(log_mutex);
                log << "dfal run: " << to_string(ec.method) << " seed " << seed
                    << (run.error ? " failed" : " done") << '\n';
                results[m].runs[s] = std::move(run);
            }
        };
        const unsigned n_threads =
            std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(jobs.size())));
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < n_threads; ++t)
            pool.emplace_back(worker);
        worker();
        for (auto& t : pool)
            t.join();

        const fs::path dir = run_directory(cfg, opts);
        const ArchSpec arch = arch_for(cfg.experiment.arch.hidden_widths, prepared.data);

        std::ostringstream rounds;
        rounds << fingerprint_line(manifest.fingerprint) << "method,round,labeled_size,seed,accuracy,acq_seconds\n";
        std::ostringstream curves;
        curves << fingerprint_line(manifest.fingerprint) << "method,round,labeled_size,mean_accuracy,sd_accuracy\n";
        Json per_method = Json::object();
        std::vector<std::string> failures;
        for (const auto& result : results) {
            const std::string name = to_string(result.method);
            per_method[name] = to_json(result);
            for (const auto& run : result.runs) {
                if (run.error)
                    failures.push_back(name + ": " + *run.error);
                for (const auto& r : run.rounds)
                    rounds << name << ',' << r.round << ',' << r.labeled_size << ',' << run.seed << ','
                           << fmt(r.test_accuracy) << ',' << fmt(r.acquisition_seconds) << '\n';
            }
            if (failures.empty())
                for (const auto& p : aggregate_curves(result))
                    curves << name << ',' << p.round << ',' << p.labeled_size << ',' << fmt(p.mean) << ','
                           << fmt(p.sd) << '\n';
        }

        manifest.outputs = {"manifest.json", "results.json", "rounds.csv", "curves.csv"};
        const Json man = manifest.finish();
        Json methods = Json::array();
        for (Method m : cfg.methods)
            methods.push_back(to_string(m));
        const Json doc = {{"manifest", man},
                          {"experiment",
                           {{"name", cfg.name}, {"dataset", dataset.name}, {"arch", arch.name()}, {"methods", methods}}},
                          {"per_method", per_method}};
        write_text(dir / "results.json", dump(doc));
        write_text(dir / "rounds.csv", rounds.str());
        write_text(dir / "curves.csv", curves.str());
        write_text(dir / "manifest.json", dump(man));

        if (!failures.empty()) {
            for (const auto& f : failures)
                log << "dfal run: " << f << '\n';
            return int(exit_runtime);
        }
        log << "dfal run: wrote " << dir.string() << '\n';
        return int(exit_ok);
    });
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

int cmd_compare(const fs::path& results_dir, const CommandOptions& opts)
{
    return guarded(opts, "compare", [&] {
        std::ostream& log = log_of(opts);
        ComparisonSlice slice;
        try {
            slice = ComparisonSlice::parse(opts.slice);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--slice: ") + e.what());
        }
        if (!(opts.alpha >= 0.0 && opts.alpha <= 1.0))
            throw ConfigError("--alpha: must be in [0, 1]");
        if (!fs::is_directory(results_dir))
            throw ConfigError("results_dir: '" + results_dir.string() + "' is not a directory");

        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(results_dir))
            if (entry.is_regular_file() && entry.path().filename() == "results.json")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw std::runtime_error("no results.json found under '" + results_dir.string() + "'");

        std::vector<ExperimentAccuracies> experiments;
        std::vector<std::string> mismatched;
        std::vector<std::string> method_order;
        Json inputs = Json::array();
        for (const auto& file : files) {
            const Json doc = read_json(file);
            const Json& exp = doc.at("experiment");
            const std::string fp = doc.at("manifest").at("config_fingerprint").get<std::string>();
            const std::string label = exp.at("name").get<std::string>() + " [" + fp + "]";
            std::vector<ExperimentResult> per_method;
            std::vector<std::string> names = exp.at("methods").get<std::vector<std::string>>();
            for (const auto& name : names)
                per_method.push_back(experiment_result_from_json(name, doc.at("per_method").at(name)));
            if (names.size() < 2) {
                mismatched.push_back(label + ": fewer than two methods");
                continue;
            }
            if (method_order.empty()) {
                method_order = names;
            } else {
                std::vector<std::string> a = method_order, b = names;
                std::sort(a.begin(), a.end());
                std::sort(b.begin(), b.end());
                if (a != b) {
                    mismatched.push_back(label + ": method set differs from the first experiment");
                    continue;
                }
            }
            try {
                experiments.push_back(collect_accuracies(label, exp.at("dataset").get<std::string>(),
                                                         exp.at("arch").get<std::string>(), per_method));
            } catch (const std::exception& e) {
                mismatched.push_back(label + ": " + e.what());
                continue;
            }
            inputs.push_back(fp);
        }
        if (!mismatched.empty()) {
            log << "dfal compare: grid mismatch in " << mismatched.size() << " experiment(s):\n";
            for (const auto& m : mismatched)
                log << "  " << m << '\n';
            return int(exit_runtime);
        }

        const PenaltyMatrix ppm = build_ppm(experiments, slice, opts.alpha, method_order);
        const Json cmp_config = {{"inputs", inputs}, {"slice", slice.label()}, {"alpha", opts.alpha}};
        const std::string fp = fingerprint(cmp_config);
        const fs::path dir = (opts.out ? *opts.out : results_dir) / ("compare-" + fp);
        const std::string tag = file_label(slice.label());

        std::ostringstream loss;
        loss << fingerprint_line(fp) << "method,loss_score\n";
        const auto scores = loss_scores(ppm);
        for (std::size_t k = 0; k < ppm.methods.size(); ++k)
            loss << ppm.methods[k] << ',' << fmt(scores[k]) << '\n';

        const std::string started = iso_timestamp();
        const Json man = {{"command", "compare"},
                          {"artifact_version", artifact_version},
                          {"config", cmp_config},
                          {"config_fingerprint", fp},
                          {"started", started},
                          {"finished", iso_timestamp()},
                          {"outputs", {"ppm_" + tag + ".json", "ppm_" + tag + ".csv", "loss_" + tag + ".csv"}}};
        Json doc = to_json(ppm);
        doc["manifest"] = man;
        doc["slice"] = slice.label();
        doc["alpha"] = opts.alpha;
        write_text(dir / ("ppm_" + tag + ".json"), dump(doc));
        write_text(dir / ("ppm_" + tag + ".csv"), ppm_csv(ppm, fp));
        write_text(dir / ("loss_" + tag + ".csv"), loss.str());
        log << "dfal compare: " << experiments.size() << " experiment(s), wrote " << dir.string() << '\n';
        return int(exit_ok);
    });
}

// ---------------------------------------------------------------------------
// geometry
// ---------------------------------------------------------------------------

int cmd_geometry(const CommandOptions& opts)
{
    return guarded(opts, "geometry", [&] {
        const RunConfig cfg = load_checked_config(opts.config);
        Manifest manifest = start_manifest("geometry", cfg);
        const auto& geo = cfg.geometry;

        ExperimentConfig ec = cfg.experiment;
        ec.initial_size = geo.initial_size;
        const PreparedData prepared = prepare_data(build_dataset(cfg.dataset), ec);
        const Dataset& data = prepared.data;
        const PoolState pool = init_pool(prepared.split.train, geo.initial_size, pool_seed(geo.seed));

        TrainConfig tc = cfg.experiment.train;
        tc.learning_rate = cfg.fixed_learning_rate();
        tc.seed = shuffle_seed(geo.seed, 0);
        const ModelState model =
            train(init_model(arch_for(geo.hidden_widths, data), model_seed(geo.seed, 0)), data, pool.labeled, tc);
        const std::string hash = model_hash(model);

        // Shared coordinates: every training point, initial rows first.
        IndexList points = pool.labeled;
        points.insert(points.end(), pool.unlabeled.begin(), pool.unlabeled.end());
        const Matrix x = data.features(points, Eigen::all);
        const Matrix proba = predict_proba(model, x);
        const Matrix hidden = penultimate(model, x);
        std::vector<int> emb_labels(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            emb_labels[i] = i < pool.labeled.size() ? data.labels[static_cast<std::size_t>(points[i])]
                                                    : argmax_class(proba.row(static_cast<Index>(i)).transpose());
        const Matrix input_2d = pca_project<double>(x, std::min<Index>(2, x.cols()));
        const Matrix grad_2d = pca_project<double>(last_layer_embeddings(proba, hidden, emb_labels), 2);

        std::ostringstream input_csv, grad_csv;
        const std::string header = "method,batch_size,index,role,pc1,pc2\n";
        input_csv << fingerprint_line(manifest.fingerprint) << header;
        grad_csv << fingerprint_line(manifest.fingerprint) << header;
        Json acquisitions = Json::array();
        for (Method method : geo.methods) {
            for (Index b : geo.batch_sizes) {
                const AcquisitionContext ctx = make_context(model, data, pool, cfg.experiment.scope);
                Rng rng(acquisition_seed(geo.seed, 0));
                const AcquisitionBatch batch = select(method, ctx, b, rng);
                IndexList acquired = batch.indices;
                std::sort(acquired.begin(), acquired.end());
                acquisitions.push_back({{"method", to_string(method)},
                                        {"batch_size", b},
                                        {"model_fingerprint", model_hash(*ctx.model)},
                                        {"indices", batch.indices}});
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const Index id = points[i];
                    const char* role = i < pool.labeled.size() ? "initial"
                                       : std::binary_search(acquired.begin(), acquired.end(), id) ? "acquired"
                                                                                                   : "pool";
                    const auto r = static_cast<Index>(i);
                    const std::string prefix =
                        to_string(method) + ',' + std::to_string(b) + ',' + std::to_string(id) + ',' + role + ',';
                    input_csv << prefix << fmt(input_2d(r, 0)) << ','
                              << fmt(input_2d.cols() > 1 ? input_2d(r, 1) : 0.0) << '\n';
                    grad_csv << prefix << fmt(grad_2d(r, 0)) << ',' << fmt(grad_2d(r, 1)) << '\n';
                }
            }
        }

        const fs::path dir = run_directory(cfg, opts) / "geometry";
        manifest.outputs = {"manifest.json", "geometry.json", "geometry_input.csv", "geometry_grad.csv"};
        const Json man = manifest.finish();
        write_text(dir / "geometry_input.csv", input_csv.str());
        write_text(dir / "geometry_grad.csv", grad_csv.str());
        write_text(dir / "geometry.json", dump({{"manifest", man},
                                                {"model_fingerprint", hash},
                                                {"initial_labeled", pool.labeled},
                                                {"acquisitions", acquisitions}}));
        write_text(dir / "manifest.json", dump(man));
        log_of(opts) << "dfal geometry: wrote " << dir.string() << '\n';
        return int(exit_ok);
    });
}

// ---------------------------------------------------------------------------
// shift
// ---------------------------------------------------------------------------

int cmd_shift(const CommandOptions& opts)
{
    return guarded(opts, "shift", [&] {
        const RunConfig cfg = load_checked_config(opts.config);
        Manifest manifest = start_manifest("shift", cfg);
        const auto& sh = cfg.shift;
        if (sh.shifted_size != sh.eval_size)
            throw ConfigError("shift.shifted_size: must equal shift.eval_size (" + std::to_string(sh.eval_size) + ")");

        const Dataset raw = build_dataset(cfg.dataset);
        const PreparedData prepared = prepare_data(raw, cfg.experiment);
        if (static_cast<Index>(prepared.split.test.size()) < sh.eval_size)
            throw std::runtime_error("shift: test split has " + std::to_string(prepared.split.test.size()) +
                                     " points, fewer than eval_size " + std::to_string(sh.eval_size));
        const IndexList eval(prepared.split.test.begin(), prepared.split.test.begin() + sh.eval_size);

        // Per-feature unit: the blob spread, or the training std for files.
        Vector unit;
        if (cfg.dataset.kind == "blobs") {
            unit = Vector::Constant(raw.n_features(), cfg.dataset.spread);
        } else {
            unit = Standardizer::fit(raw.features, prepared.split.train).stddev();
        }
        const Vector shift = sh.shift_sigma * unit;
        Matrix shifted = make_shifted(subset(raw, eval), shift).features;
        if (prepared.scaler)
            shifted = prepared.scaler->transform(shifted);
        const Matrix base = prepared.data.features(eval, Eigen::all);

        const double lr = select_learning_rate(prepared, cfg.experiment);
        const ArchSpec arch = arch_for(cfg.experiment.arch.hidden_widths, prepared.data);
        const IndexList& train_idx = prepared.split.train;

        std::ostringstream csv;
        csv << fingerprint_line(manifest.fingerprint) << "seed,set,index,score,pseudo_label\n";
        Json per_seed = Json::array();
        for (std::uint64_t seed : cfg.experiment.seeds) {
            TrainConfig tc = cfg.experiment.train;
            tc.learning_rate = lr;
            tc.seed = shuffle_seed(seed, 0);
            const ModelState model = train(init_model(arch, model_seed(seed, 0)), prepared.data, train_idx, tc);
            const Vector ref = mean_grad_embedding(model, prepared.data, train_idx, cfg.experiment.scope).values;
            const auto ref_size = static_cast<Index>(train_idx.size());
            Json summary = Json::object();
            for (const auto& [set, rows] : {std::pair<const char*, const Matrix*>{"in_distribution", &base},
                                            std::pair<const char*, const Matrix*>{"shifted", &shifted}}) {
                const auto scored = df_scores(model, ref, ref_size, *rows, eval, cfg.experiment.scope);
                std::vector<double> values;
                for (const auto& c : scored) {
                    values.push_back(c.score);
                    csv << seed << ',' << set << ',' << c.pool_index << ',' << fmt(c.score) << ',' << c.pseudo_label
                        << '\n';
                }
                summary[set] = {{"n", values.size()},
                                {"mean", mean_of(values)},
                                {"median", median_of(values)},
                                {"sd", sd_of(values)}};
            }
            per_seed.push_back({{"seed", seed},
                                {"model_fingerprint", model_hash(model)},
                                {"test_accuracy", evaluate_accuracy(model, prepared.data, prepared.split.test)},
                                {"summary", summary}});
        }

        const fs::path dir = run_directory(cfg, opts) / "shift";
        manifest.outputs = {"manifest.json", "shift_summary.json", "shift_scores.csv"};
        const Json man = manifest.finish();
        write_text(dir / "shift_scores.csv", csv.str());
        write_text(dir / "shift_summary.json", dump({{"manifest", man},
                                                     {"learning_rate", lr},
                                                     {"shift_sigma", sh.shift_sigma},
                                                     {"eval_size", sh.eval_size},
                                                     {"per_seed", per_seed}}));
        write_text(dir / "manifest.json", dump(man));
        log_of(opts) << "dfal shift: wrote " << dir.string() << '\n';
        return int(exit_ok);
    });
}

// ---------------------------------------------------------------------------
// contraction
// ---------------------------------------------------------------------------

int cmd_contraction(const CommandOptions& opts)
{
    return guarded(opts, "contraction", [&] {
        const RunConfig cfg = load_checked_config(opts.config);
        Manifest manifest = start_manifest("contraction", cfg);
        const Dataset dataset = build_dataset(cfg.dataset);
        const fs::path dir = run_directory(cfg, opts) / "contraction";
        manifest.outputs = {"manifest.json", "contraction.json"};

        Json runs = Json::array();
        for (std::uint64_t seed : cfg.contraction.seeds) {
            ContractionConfig cc = cfg.contraction.base;
            cc.seed = seed;
            const ContractionReport report = run_contraction_trace(cc, dataset);
            Json entry = to_json(report);
            entry["seed"] = seed;
            if (report.t0_estimate) {
                const BoundCheck check = cumulative_df_bound_check(report.df_norms, *report.t0_estimate);
                entry["bound_check"] = {{"lhs", check.lhs}, {"rhs", check.rhs}, {"holds", check.holds()}};
            } else {
                entry["bound_check"] = nullptr;
            }
            runs.push_back(entry);

            std::ostringstream csv;
            csv << fingerprint_line(manifest.fingerprint) << "epoch,df_norm\n";
            for (std::size_t t = 0; t < report.df_norms.size(); ++t)
                csv << t + 1 << ',' << fmt(report.df_norms[t]) << '\n';
            const std::string name = "contraction_seed" + std::to_string(seed) + ".csv";
            write_text(dir / name, csv.str());
            manifest.outputs.push_back(name);
        }

        const Json man = manifest.finish();
        write_text(dir / "contraction.json", dump({{"manifest", man}, {"dataset", dataset.name}, {"runs", runs}}));
        write_text(dir / "manifest.json", dump(man));
        log_of(opts) << "dfal contraction: wrote " << dir.string() << '\n';
        return int(exit_ok);
    });
}

// ---------------------------------------------------------------------------
// timing
// ---------------------------------------------------------------------------

int cmd_timing(const CommandOptions& opts)
{
    return guarded(opts, "timing", [&] {
        const RunConfig cfg = load_checked_config(opts.config);
        Manifest manifest = start_manifest("timing", cfg);
        const auto& tm = cfg.timing;
        std::ostream& log = log_of(opts);

        DatasetSpec spec = cfg.dataset;
        if (spec.kind == "blobs")
            spec.n_samples = tm.pool_size + tm.initial_size;
        Dataset data = build_dataset(spec);
        if (data.size() <= tm.initial_size)
            throw std::runtime_error("timing: dataset has no pool beyond the initial set");
        IndexList all(static_cast<std::size_t>(data.size()));
        std::iota(all.begin(), all.end(), Index{0});
        if (cfg.experiment.standardize)
            data.features = Standardizer::fit(data.features, all).transform(data.features);

        const ArchSpec arch = arch_for(cfg.experiment.arch.hidden_widths, data);
        TrainConfig tc = cfg.experiment.train;
        tc.learning_rate = cfg.fixed_learning_rate();
        tc.epochs = tm.epochs;

        // One shared trajectory: each round every method is timed on the
        // same model and pool; the first method's batch advances the pool.
        PoolState pool = init_pool(all, tm.initial_size, pool_seed(tm.seed));
        const std::size_t candidate_pool = pool.unlabeled.size();
        std::map<Method, std::vector<double>> seconds;
        auto now = [] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
        };
        for (int t = 0; t < tm.rounds && !pool.unlabeled.empty(); ++t) {
            tc.seed = shuffle_seed(tm.seed, t);
            const ModelState model = train(init_model(arch, model_seed(tm.seed, t)), data, pool.labeled, tc);
            const AcquisitionContext ctx = make_context(model, data, pool, cfg.experiment.scope);
            IndexList advance;
            for (Method method : tm.methods) {
                Rng rng(acquisition_seed(tm.seed, t));
                const double start = now();
                const AcquisitionBatch batch = select(method, ctx, tm.batch_size, rng);
                const double elapsed = now() - start;
                seconds[method].push_back(elapsed);
                if (advance.empty())
                    advance = batch.indices;
                log << "dfal timing: round " << t + 1 << ' ' << to_string(method) << ' ' << elapsed << " s\n";
            }
            pool.acquire(advance);
        }

        std::ostringstream csv;
        csv << fingerprint_line(manifest.fingerprint) << "method,mean_seconds,sd_seconds,rounds\n";
        Json rows = Json::array();
        for (Method method : tm.methods) {
            const auto& s = seconds[method];
            csv << to_string(method) << ',' << fmt(mean_of(s)) << ',' << fmt(sd_of(s)) << ',' << s.size() << '\n';
            rows.push_back({{"method", to_string(method)},
                            {"mean_seconds", mean_of(s)},
                            {"sd_seconds", sd_of(s)},
                            {"per_round_seconds", s}});
        }
        Json ordering = nullptr;
        if (seconds.count(Method::entropy) && seconds.count(Method::grad))
            ordering = mean_of(seconds[Method::entropy]) < mean_of(seconds[Method::grad]);

        const fs::path dir = run_directory(cfg, opts) / "timing";
        manifest.outputs = {"manifest.json", "timing.json", "timing.csv"};
        const Json man = manifest.finish();
        write_text(dir / "timing.csv", csv.str());
        write_text(dir / "timing.json", dump({{"manifest", man},
                                              {"pool_size", candidate_pool},
                                              {"batch_size", tm.batch_size},
                                              {"methods", rows},
                                              {"entropy_faster_than_grad", ordering}}));
        write_text(dir / "manifest.json", dump(man));
        log << "dfal timing: wrote " << dir.string() << '\n';
        return int(exit_ok);
    });
}

} // namespace dfal
