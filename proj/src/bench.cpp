#include "locallearn/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "locallearn/clustering.hpp"
#include "locallearn/codebook.hpp"
#include "locallearn/grn.hpp"
#include "locallearn/kernel.hpp"
#include "locallearn/rng.hpp"
#include "locallearn/svm.hpp"

namespace locallearn {

void BenchConfig::validate(std::size_t dataset_size) const {
    require(train_fraction > 0.0 && train_fraction < 1.0, "bench config: train fraction must be in (0,1)");
    require(test_fraction > 0.0 && test_fraction < 1.0, "bench config: test fraction must be in (0,1)");
    require(std::abs(train_fraction + test_fraction - 1.0) < 1e-9, "bench config: split fractions must sum to 1");
    require(!sigmas.empty(), "bench config: at least one sigma required");
    for (double s : sigmas) require(s > 0.0, "bench config: sigma must be positive");
    for (double b : boxes) require(b > 0.0, "bench config: box constraint must be positive");
    for (double r : rs) require(r >= 0.0 && std::isfinite(r), "bench config: r must be finite and non-negative");
    const auto train_size = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(dataset_size)));
    for (int k : ks) {
        require(k >= 1, "bench config: k must be positive");
        require(static_cast<std::size_t>(k) <= train_size, "bench config: k exceeds the training split");
    }
    for (int n_cb : codebook_ns) {
        require(n_cb >= 1, "bench config: codebook n must be positive");
        require(static_cast<std::size_t>(n_cb) <= train_size, "bench config: codebook n exceeds the training split");
    }
    require(smo_tol > 0.0 && smo_max_passes >= 1, "bench config: bad SMO settings");
}

namespace {

double json_box(const nlohmann::json& j) {
    if (j.is_string()) {
        require(j.get<std::string>() == "inf", "bench config: box entries must be numbers or \"inf\"");
        return std::numeric_limits<double>::infinity();
    }
    return j.get<double>();
}

nlohmann::json box_json(double b) {
    if (std::isinf(b)) return "inf";
    return b;
}

}  // namespace

BenchConfig bench_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bench config: ") + e.what());
    }
    BenchConfig cfg;
    try {
        const auto& ds = j.at("dataset");
        const auto type = ds.at("type").get<std::string>();
        if (type == "blobs") {
            cfg.source = BenchConfig::Source::blobs;
            cfg.n = ds.at("n").get<int>();
            cfg.d = ds.at("d").get<int>();
            cfg.classes = ds.value("classes", 2);
            cfg.separation = ds.at("separation").get<double>();
        } else if (type == "csv") {
            cfg.source = BenchConfig::Source::csv;
            cfg.csv_path = ds.at("path").get<std::string>();
        } else {
            throw ParseError("bench config: dataset type must be 'blobs' or 'csv'");
        }
        const auto& split = j.at("split");
        cfg.train_fraction = split.at("train").get<double>();
        cfg.test_fraction = split.at("test").get<double>();
        cfg.seed = j.at("seed").get<std::uint64_t>();

        const auto& grid = j.at("grid");
        cfg.sigmas = grid.at("sigma").get<std::vector<double>>();
        if (grid.contains("box_c"))
            for (const auto& b : grid.at("box_c")) cfg.boxes.push_back(json_box(b));
        if (grid.contains("k")) cfg.ks = grid.at("k").get<std::vector<int>>();
        if (grid.contains("r")) cfg.rs = grid.at("r").get<std::vector<double>>();
        if (grid.contains("codebook_n")) cfg.codebook_ns = grid.at("codebook_n").get<std::vector<int>>();
        if (j.contains("smo")) {
            cfg.smo_tol = j.at("smo").value("tol", cfg.smo_tol);
            cfg.smo_max_passes = j.at("smo").value("max_passes", cfg.smo_max_passes);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bench config: ") + e.what());
    }
    return cfg;
}

std::string bench_config_to_json(const BenchConfig& cfg) {
    nlohmann::json j;
    if (cfg.source == BenchConfig::Source::blobs) {
        j["dataset"] = {{"type", "blobs"}, {"n", cfg.n},        {"d", cfg.d},
                        {"classes", cfg.classes}, {"separation", cfg.separation}};
    } else {
        j["dataset"] = {{"type", "csv"}, {"path", cfg.csv_path}};
    }
    j["split"] = {{"train", cfg.train_fraction}, {"test", cfg.test_fraction}};
    j["seed"] = cfg.seed;
    nlohmann::json grid;
    grid["sigma"] = cfg.sigmas;
    auto boxes = nlohmann::json::array();
    for (double b : cfg.boxes) boxes.push_back(box_json(b));
    grid["box_c"] = boxes;
    grid["k"] = cfg.ks;
    grid["r"] = cfg.rs;
    grid["codebook_n"] = cfg.codebook_ns;
    j["grid"] = grid;
    j["smo"] = {{"tol", cfg.smo_tol}, {"max_passes", cfg.smo_max_passes}};
    return j.dump(2) + "\n";
}

namespace {

struct Split {
    Dataset train;
    Dataset test;
};

Split split_dataset(const Dataset& ds, const BenchConfig& cfg) {
    const std::size_t n = ds.size();
    require(n >= 2, "bench: dataset too small to split");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, 0x5917));
    rng.shuffle(order);
    std::size_t n_train = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n)));
    n_train = std::min(std::max<std::size_t>(n_train, 1), n - 1);

    std::vector<Sample> train, test;
    for (std::size_t i = 0; i < n; ++i)
        (i < n_train ? train : test).push_back(ds.samples[order[i]]);
    return {make_dataset(std::move(train)), make_dataset(std::move(test))};
}

template <typename Predict>
double accuracy(const Dataset& ds, Predict&& predict) {
    std::size_t hits = 0;
    for (const Sample& s : ds.samples)
        if (predict(s.features) == s.label) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

std::size_t grn_expansion_size(const GrnModel& model) {
    std::size_t total = 0;
    for (const auto& cls : model.classes) total += cls.centroids.rows();
    return total;
}

// Runs one grid point: trains via `train` (returning a predictor), then
// fills in accuracies and kernel counts. Errors are recorded on the row and
// the run continues.
template <typename Train>
void run_row(BenchRow& row, const Split& split, Train&& train) {
    using clock = std::chrono::steady_clock;
    try {
        reset_kernel_eval_count();
        const auto t0 = clock::now();
        auto predict = train();
        const auto t1 = clock::now();
        row.train_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        row.train_kernel_evals = kernel_eval_count();

        reset_kernel_eval_count();
        predict(split.test.samples.front().features);
        row.kernel_evals_per_prediction = kernel_eval_count();

        row.train_accuracy = accuracy(split.train, predict);
        row.test_accuracy = accuracy(split.test, predict);
    } catch (const ConvergenceError&) {
        row.error = "convergence_error";
    } catch (const ContractViolation&) {
        row.error = "contract_violation";
    }
}

}  // namespace

Report run_bench(const BenchConfig& cfg) {
    Dataset full = cfg.source == BenchConfig::Source::blobs
                       ? gen_blobs(cfg.n, cfg.d, cfg.classes, cfg.separation, derive_seed(cfg.seed, 0xb10b5))
                       : load_csv(cfg.csv_path);
    cfg.validate(full.size());
    const Split split = split_dataset(full, cfg);

    Report report;
    report.config = cfg;
    int row_index = 0;

    const auto sub_seed = [&](int row) { return derive_seed(cfg.seed, static_cast<std::uint64_t>(row) + 1); };

    const auto push_row = [&](BenchRow row) {
        report.rows.push_back(std::move(row));
        ++row_index;
    };

    // Cluster models and codebooks are trained per row inside run_row so
    // their cost lands in the row's wall time.
    for (double sigma : cfg.sigmas) {
        BenchRow row;
        row.row = row_index;
        row.model = "grn-full";
        row.sigma = sigma;
        run_row(row, split, [&] {
            auto model = fit_grn(split.train, {sigma});
            row.expansion_size = grn_expansion_size(model);
            return [model = std::move(model)](VecView x) { return grn_predict(model, x); };
        });
        push_row(std::move(row));
    }

    for (double sigma : cfg.sigmas) {
        for (double box : cfg.boxes) {
            BenchRow row;
            row.row = row_index;
            row.model = "svm-full";
            row.sigma = sigma;
            row.box_c = box;
            const auto seed = sub_seed(row_index);
            run_row(row, split, [&] {
                SmoOptions opts;
                opts.box_c = box;
                opts.tol = cfg.smo_tol;
                opts.max_passes = cfg.smo_max_passes;
                opts.seed = seed;
                auto model = train_smo(split.train, {sigma}, opts);
                row.expansion_size = model.support_index.size();
                return [model = std::move(model)](VecView x) { return decision(model, x).sign; };
            });
            push_row(std::move(row));
        }
    }

    for (double sigma : cfg.sigmas) {
        for (int k : cfg.ks) {
            for (double r : cfg.rs) {
                BenchRow row;
                row.row = row_index;
                row.model = "grn-semi-km";
                row.sigma = sigma;
                row.k = k;
                row.r = r;
                const auto seed = sub_seed(row_index);
                run_row(row, split, [&] {
                    const auto clusters =
                        fit_clusters(split.train.feature_matrix(), split.train.labels(), k, r, 300, 1e-8, seed);
                    auto model = fit_grn(split.train, {sigma}, clusters.assignment);
                    row.expansion_size = grn_expansion_size(model);
                    return [model = std::move(model)](VecView x) { return grn_predict(model, x); };
                });
                push_row(std::move(row));
            }
        }
    }

    for (double sigma : cfg.sigmas) {
        for (double box : cfg.boxes) {
            for (int k : cfg.ks) {
                for (double r : cfg.rs) {
                    BenchRow row;
                    row.row = row_index;
                    row.model = "svm-semi-km";
                    row.sigma = sigma;
                    row.box_c = box;
                    row.k = k;
                    row.r = r;
                    const auto seed = sub_seed(row_index);
                    run_row(row, split, [&] {
                        const auto clusters =
                            fit_clusters(split.train.feature_matrix(), split.train.labels(), k, r, 300, 1e-8, seed);
                        SmoOptions opts;
                        opts.box_c = box;
                        opts.tol = cfg.smo_tol;
                        opts.max_passes = cfg.smo_max_passes;
                        opts.seed = seed;
                        auto model = train_semi(split.train, clusters, {sigma}, opts);
                        row.expansion_size = model.centroids.rows();
                        row.gram_distinct_entries =
                            static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(k + 1) / 2;
                        return [model = std::move(model)](VecView x) { return decision(model, x).sign; };
                    });
                    push_row(std::move(row));
                }
            }
        }
    }

    for (double sigma : cfg.sigmas) {
        for (int n_cb : cfg.codebook_ns) {
            BenchRow row;
            row.row = row_index;
            row.model = "grn-semi-vq";
            row.sigma = sigma;
            row.codebook_n = n_cb;
            const auto seed = sub_seed(row_index);
            run_row(row, split, [&] {
                const Matrix x = split.train.feature_matrix();
                const Codebook cb = train_lbg(x, n_cb, 1e-4, seed);
                std::vector<int> assignment(x.rows());
                for (std::size_t i = 0; i < x.rows(); ++i)
                    assignment[i] = static_cast<int>(quantize(cb, x.row(i)));
                auto model = fit_grn(split.train, {sigma}, assignment);
                row.expansion_size = grn_expansion_size(model);
                return [model = std::move(model)](VecView x_) { return grn_predict(model, x_); };
            });
            push_row(std::move(row));
        }
    }

    for (double sigma : cfg.sigmas) {
        for (double box : cfg.boxes) {
            for (int n_cb : cfg.codebook_ns) {
                BenchRow row;
                row.row = row_index;
                row.model = "svm-semi-vq";
                row.sigma = sigma;
                row.box_c = box;
                row.codebook_n = n_cb;
                const auto seed = sub_seed(row_index);
                run_row(row, split, [&] {
                    const Matrix x = split.train.feature_matrix();
                    const Codebook cb = train_lbg(x, n_cb, 1e-4, seed);
                    std::vector<int> assignment(x.rows());
                    for (std::size_t i = 0; i < x.rows(); ++i)
                        assignment[i] = static_cast<int>(quantize(cb, x.row(i)));
                    SmoOptions opts;
                    opts.box_c = box;
                    opts.tol = cfg.smo_tol;
                    opts.max_passes = cfg.smo_max_passes;
                    opts.seed = seed;
                    auto model = train_semi(split.train, cb.codevectors, assignment, {sigma}, opts);
                    row.expansion_size = model.centroids.rows();
                    row.gram_distinct_entries =
                        static_cast<std::uint64_t>(n_cb) * static_cast<std::uint64_t>(n_cb + 1) / 2;
                    return [model = std::move(model)](VecView x_) { return decision(model, x_).sign; };
                });
                push_row(std::move(row));
            }
        }
    }

    return report;
}

namespace {

template <typename T>
std::string opt_str(const std::optional<T>& v) {
    if (!v) return "";
    if constexpr (std::is_same_v<T, double>)
        return std::isinf(*v) ? "inf" : format_double(*v);
    else
        return std::to_string(*v);
}

}  // namespace

std::string report_to_csv(const Report& report) {
    std::ostringstream out;
    out << "row,model,sigma,box_c,k,r,codebook_n,expansion_size,train_accuracy,test_accuracy,"
           "train_kernel_evals,kernel_evals_per_prediction,gram_distinct_entries,error\n";
    for (const BenchRow& r : report.rows) {
        out << r.row << ',' << r.model << ',' << format_double(r.sigma) << ',' << opt_str(r.box_c) << ','
            << opt_str(r.k) << ',' << opt_str(r.r) << ',' << opt_str(r.codebook_n) << ','
            << opt_str(r.expansion_size) << ',' << opt_str(r.train_accuracy) << ','
            << opt_str(r.test_accuracy) << ',' << opt_str(r.train_kernel_evals) << ','
            << opt_str(r.kernel_evals_per_prediction) << ',' << opt_str(r.gram_distinct_entries) << ','
            << r.error << '\n';
    }
    return out.str();
}

std::string report_to_json(const Report& report) {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(bench_config_to_json(report.config));
    auto& rows = j["rows"] = nlohmann::json::array();
    for (const BenchRow& r : report.rows) {
        nlohmann::json e;
        e["row"] = r.row;
        e["model"] = r.model;
        e["sigma"] = r.sigma;
        if (r.box_c) e["box_c"] = box_json(*r.box_c);
        if (r.k) e["k"] = *r.k;
        if (r.r) e["r"] = *r.r;
        if (r.codebook_n) e["codebook_n"] = *r.codebook_n;
        if (r.expansion_size) e["expansion_size"] = *r.expansion_size;
        if (r.train_accuracy) e["train_accuracy"] = *r.train_accuracy;
        if (r.test_accuracy) e["test_accuracy"] = *r.test_accuracy;
        if (r.train_kernel_evals) e["train_kernel_evals"] = *r.train_kernel_evals;
        if (r.kernel_evals_per_prediction) e["kernel_evals_per_prediction"] = *r.kernel_evals_per_prediction;
        if (r.gram_distinct_entries) e["gram_distinct_entries"] = *r.gram_distinct_entries;
        if (!r.error.empty()) e["error"] = r.error;
        rows.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

std::string report_timings_to_csv(const Report& report) {
    std::ostringstream out;
    out << "row,model,train_ms\n";
    for (const BenchRow& r : report.rows)
        out << r.row << ',' << r.model << ',' << format_double(r.train_ms) << '\n';
    return out.str();
}

void write_report(const Report& report, const std::string& prefix) {
    const auto write = [](const std::string& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ParseError("write_report: cannot open " + path);
        out << text;
        if (!out) throw ParseError("write_report: write failure on " + path);
    };
    write(prefix + ".csv", report_to_csv(report));
    write(prefix + ".json", report_to_json(report));
    write(prefix + "_timings.csv", report_timings_to_csv(report));
}

}  // namespace locallearn
