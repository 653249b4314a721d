#include "locallearn/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "locallearn/rng.hpp"

namespace locallearn {

namespace {

constexpr double kStepTol = 1e-12;

void check_binary(const Dataset& ds) {
    require(ds.is_binary(), "svm: dataset labels must be exactly {-1, +1}");
}

// Lazily filled Gram rows for the plain dual. row_fn(i) yields a callable
// j -> k(x_i, x_j) over the row computed once on first use.
class SampleGram {
  public:
    SampleGram(const Matrix& x, KernelSpec spec) : x_(x), spec_(spec), rows_(x.rows()) {}

    auto row_fn(std::size_t i) {
        auto& r = rows_[i];
        if (r.empty()) {
            r.resize(x_.rows());
            for (std::size_t j = 0; j < x_.rows(); ++j) r[j] = gaussian_kernel(x_.row(i), x_.row(j), spec_);
        }
        const double* p = r.data();
        return [p](std::size_t j) { return p[j]; };
    }

  private:
    const Matrix& x_;
    KernelSpec spec_;
    std::vector<std::vector<double>> rows_;
};

// Compressed Gram: every sample pair reads the k x k centroid cache, built
// once with k(k+1)/2 kernel evaluations.
class CentroidGram {
  public:
    CentroidGram(const Matrix& centroids, const std::vector<int>& assignment, KernelSpec spec)
        : assign_(assignment), cache_(centroids.rows(), centroids.rows()) {
        for (std::size_t p = 0; p < centroids.rows(); ++p)
            for (std::size_t q = p; q < centroids.rows(); ++q) {
                const double v = gaussian_kernel(centroids.row(p), centroids.row(q), spec);
                cache_(p, q) = v;
                cache_(q, p) = v;
            }
    }

    auto row_fn(std::size_t i) const {
        const double* cache_row = cache_.row(static_cast<std::size_t>(assign_[i])).data();
        const int* assign = assign_.data();
        return [cache_row, assign](std::size_t j) { return cache_row[assign[j]]; };
    }

  private:
    const std::vector<int>& assign_;
    Matrix cache_;
};

struct SmoResult {
    std::vector<double> alphas;
    double bias = 0.0;
};

// Sequential minimal optimization over either Gram representation.
template <typename Gram>
class SmoSolver {
  public:
    SmoSolver(const std::vector<int>& y, Gram& gram, const SmoOptions& opts)
        : y_(y), gram_(gram), opts_(opts), n_(y.size()), alphas_(n_, 0.0), errors_(n_) {
        for (std::size_t i = 0; i < n_; ++i) errors_[i] = -static_cast<double>(y_[i]);
        perm_.resize(n_);
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        Rng rng(opts.seed);
        rng.shuffle(perm_);
    }

    SmoResult solve() {
        bool examine_all = true;
        int passes = 0;
        for (;;) {
            if (++passes > opts_.max_passes) {
                throw SmoConvergenceError("train_smo: max_passes exhausted (max KKT violation " +
                                              std::to_string(max_violation()) + ")",
                                          SvmModel{}, max_violation());
            }
            int changed = 0;
            for (std::size_t idx = 0; idx < n_; ++idx) {
                const std::size_t i = perm_[idx];
                if (examine_all || (alphas_[i] > 0.0 && alphas_[i] < opts_.box_c)) changed += examine(i);
            }
            if (examine_all) {
                if (changed == 0) break;
                examine_all = false;
            } else if (changed == 0) {
                examine_all = true;
            }
        }
        return finish();
    }

    SmoResult finish() {
        // Final bias: mean over margin support vectors of y_i - g(x_i).
        double sum = 0.0;
        int margin_count = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!(alphas_[i] > 0.0 && alphas_[i] < opts_.box_c)) continue;
            double g = 0.0;
            const auto row = gram_.row_fn(i);
            for (std::size_t j = 0; j < n_; ++j)
                if (alphas_[j] > 0.0) g += y_[j] * alphas_[j] * row(j);
            sum += y_[i] - g;
            ++margin_count;
        }
        SmoResult res;
        res.alphas = alphas_;
        res.bias = margin_count > 0 ? sum / margin_count : bias_;
        return res;
    }

    double max_violation() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double yf = y_[i] * (errors_[i] + y_[i]);  // y_i * f(x_i)
            if (alphas_[i] <= 0.0)
                worst = std::max(worst, 1.0 - yf);
            else if (alphas_[i] >= opts_.box_c)
                worst = std::max(worst, yf - 1.0);
            else
                worst = std::max(worst, std::abs(yf - 1.0));
        }
        return worst;
    }

  private:
    // Exact error from the current expansion; also refreshes the cache entry,
    // which drifts after long runs of incremental updates and would otherwise
    // manufacture phantom KKT violators.
    double true_error(std::size_t i) {
        const auto row = gram_.row_fn(i);
        double g = bias_;
        for (std::size_t j = 0; j < n_; ++j)
            if (alphas_[j] > 0.0) g += y_[j] * alphas_[j] * row(j);
        errors_[i] = g - y_[i];
        return errors_[i];
    }

    int examine(std::size_t i1) {
        const double e1 = true_error(i1);
        const double r1 = e1 * y_[i1];
        const bool violated = (r1 < -opts_.tol && alphas_[i1] < opts_.box_c) || (r1 > opts_.tol && alphas_[i1] > 0.0);
        if (!violated) return 0;

        // Second choice: maximize the unconstrained subproblem gain
        // (E1 - E2)^2 / eta. The Gaussian kernel has a unit diagonal, so
        // eta = 2 (1 - K(x1, x2)) comes straight off the cached row.
        const auto row1 = gram_.row_fn(i1);
        std::size_t best = n_;
        double best_gain = 0.0;
        for (std::size_t j = 0; j < n_; ++j) {
            if (j == i1) continue;
            const double eta = 2.0 * (1.0 - row1(j));
            if (eta <= kStepTol) continue;
            const double gap = e1 - errors_[j];
            const double gain = gap * gap / eta;
            if (gain > best_gain) {
                best_gain = gain;
                best = j;
            }
        }
        if (best < n_ && take_step(i1, best)) return 1;
        for (std::size_t idx = 0; idx < n_; ++idx) {
            const std::size_t j = perm_[idx];
            if (j == i1 || j == best) continue;
            if (take_step(i1, j)) return 1;
        }
        return 0;
    }

    bool take_step(std::size_t i1, std::size_t i2) {
        if (i1 == i2) return false;
        const double a1 = alphas_[i1];
        const double a2 = alphas_[i2];
        const double y1 = y_[i1];
        const double y2 = y_[i2];
        const double s = y1 * y2;
        const double box = opts_.box_c;

        double lo, hi;
        if (y1 != y2) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(box, box + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - box);
            hi = std::min(box, a1 + a2);
        }
        if (!(hi - lo > kStepTol)) return false;

        const auto row1 = gram_.row_fn(i1);
        const auto row2 = gram_.row_fn(i2);
        const double k11 = row1(i1);
        const double k12 = row1(i2);
        const double k22 = row2(i2);
        const double eta = k11 + k22 - 2.0 * k12;
        if (!(eta > kStepTol)) return false;  // exact duplicates only, for a PSD kernel

        const double e1 = true_error(i1);
        const double e2 = true_error(i2);
        double a2_new = a2 + y2 * (e1 - e2) / eta;
        a2_new = std::clamp(a2_new, lo, hi);
        // Noise-scale moves are not progress; rejecting them forces the
        // selection to look for a productive pair instead of ping-ponging.
        if (std::abs(a2_new - a2) < kStepTol * std::max(1.0, a2_new + a2)) return false;
        // When a2 lands on a clipped bound the exact a1 is 0 or box; snap the
        // roundoff away so no phantom support vector survives.
        double a1_new = a1 + s * (a2 - a2_new);
        const double zero_snap = kStepTol * std::max(1.0, a1 + a2);
        if (std::abs(a1_new) <= zero_snap)
            a1_new = 0.0;
        else if (std::isfinite(box) && std::abs(a1_new - box) <= zero_snap)
            a1_new = box;
        a1_new = std::clamp(a1_new, 0.0, box);

        const double d1 = a1_new - a1;
        const double d2 = a2_new - a2;
        const double b1 = bias_ - e1 - y1 * d1 * k11 - y2 * d2 * k12;
        const double b2 = bias_ - e2 - y1 * d1 * k12 - y2 * d2 * k22;
        double b_new;
        if (a1_new > 0.0 && a1_new < box)
            b_new = b1;
        else if (a2_new > 0.0 && a2_new < box)
            b_new = b2;
        else
            b_new = 0.5 * (b1 + b2);

        const double db = b_new - bias_;
        for (std::size_t j = 0; j < n_; ++j) errors_[j] += y1 * d1 * row1(j) + y2 * d2 * row2(j) + db;
        alphas_[i1] = a1_new;
        alphas_[i2] = a2_new;
        bias_ = b_new;
        if (opts_.on_update) opts_.on_update(alphas_);
        return true;
    }

    const std::vector<int>& y_;
    Gram& gram_;
    const SmoOptions& opts_;
    std::size_t n_;
    std::vector<double> alphas_;
    std::vector<double> errors_;  // E_i = f(x_i) - y_i under the running bias
    std::vector<std::size_t> perm_;
    double bias_ = 0.0;
};

SvmModel build_model(const Dataset& ds, KernelSpec kernel, const SmoOptions& opts, SmoResult res) {
    SvmModel model;
    model.kernel = kernel;
    model.box_c = opts.box_c;
    model.bias = res.bias;
    model.alphas = std::move(res.alphas);
    for (std::size_t i = 0; i < model.alphas.size(); ++i)
        if (model.alphas[i] > 0.0) model.support_index.push_back(i);
    model.support_x = Matrix(model.support_index.size(), static_cast<std::size_t>(ds.dimension));
    for (std::size_t s = 0; s < model.support_index.size(); ++s) {
        const auto& sample = ds.samples[model.support_index[s]];
        std::copy(sample.features.begin(), sample.features.end(), model.support_x.row(s).begin());
        model.support_y.push_back(sample.label);
        model.support_alpha.push_back(model.alphas[model.support_index[s]]);
    }
    return model;
}

}  // namespace

double dual_objective(const std::vector<double>& alphas, const Dataset& ds, KernelSpec kernel) {
    check_binary(ds);
    require(alphas.size() == ds.size(), "dual_objective: alpha count mismatch");
    for (double a : alphas) require(a >= 0.0 && std::isfinite(a), "dual_objective: alphas must be non-negative");

    double linear = 0.0;
    for (double a : alphas) linear += a;
    double quad = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (alphas[i] == 0.0) continue;
        for (std::size_t j = 0; j < alphas.size(); ++j) {
            if (alphas[j] == 0.0) continue;
            quad += alphas[i] * alphas[j] * ds.samples[i].label * ds.samples[j].label *
                    gaussian_kernel(ds.samples[i].features, ds.samples[j].features, kernel);
        }
    }
    return linear - 0.5 * quad;
}

SvmModel train_smo(const Dataset& ds, KernelSpec kernel, const SmoOptions& opts) {
    ds.validate();
    check_binary(ds);
    require(opts.tol > 0.0, "train_smo: tol must be positive");
    require(opts.box_c > 0.0, "train_smo: box constraint must be positive");
    require(opts.max_passes >= 1, "train_smo: max_passes must be positive");
    require(kernel.sigma > 0.0, "train_smo: sigma must be positive");

    const Matrix x = ds.feature_matrix();
    const std::vector<int> y = ds.labels();
    SampleGram gram(x, kernel);
    SmoSolver<SampleGram> solver(y, gram, opts);
    try {
        return build_model(ds, kernel, opts, solver.solve());
    } catch (SmoConvergenceError& e) {
        e.best = build_model(ds, kernel, opts, solver.finish());
        throw;
    }
}

SvmModel train_smo(const Dataset& ds, KernelSpec kernel, double box_c, double tol, int max_passes,
                   std::uint64_t seed) {
    SmoOptions opts;
    opts.box_c = box_c;
    opts.tol = tol;
    opts.max_passes = max_passes;
    opts.seed = seed;
    return train_smo(ds, kernel, opts);
}

Decision decision(const SvmModel& model, VecView x) {
    require(x.size() == model.support_x.cols() || model.support_index.empty(),
            "decision: dimension mismatch");
    double margin = model.bias;
    for (std::size_t s = 0; s < model.support_index.size(); ++s)
        margin += model.support_y[s] * model.support_alpha[s] *
                  gaussian_kernel(x, model.support_x.row(s), model.kernel);
    return {margin >= 0.0 ? 1 : -1, margin};
}

Decision decision(const SemiSvmModel& model, VecView x) {
    require(x.size() == model.centroids.cols(), "decision: dimension mismatch");
    double margin = model.bias;
    for (std::size_t j = 0; j < model.centroids.rows(); ++j)
        margin += model.betas[j] * gaussian_kernel(x, model.centroids.row(j), model.kernel);
    return {margin >= 0.0 ? 1 : -1, margin};
}

SemiSvmModel semiparameterize(const SvmModel& model, const Matrix& centroids,
                              const std::vector<int>& assignment) {
    require(assignment.size() == model.alphas.size(),
            "semiparameterize: assignment does not cover the training set");
    SemiSvmModel semi;
    semi.kernel = model.kernel;
    semi.bias = model.bias;
    semi.centroids = centroids;
    semi.betas.assign(centroids.rows(), 0.0);
    for (std::size_t s = 0; s < model.support_index.size(); ++s) {
        const int j = assignment[model.support_index[s]];
        require(j >= 0 && static_cast<std::size_t>(j) < centroids.rows(),
                "semiparameterize: assignment index out of range");
        semi.betas[static_cast<std::size_t>(j)] += model.support_y[s] * model.support_alpha[s];
    }
    return semi;
}

SemiSvmModel semiparameterize(const SvmModel& model, const ClusterModel& clusters) {
    auto semi = semiparameterize(model, clusters.centroids, clusters.assignment);
    semi.provenance = "kmeans k=" + std::to_string(clusters.k()) + " r=" + format_double(clusters.scaling);
    return semi;
}

SemiSvmModel train_semi(const Dataset& ds, const Matrix& centroids, const std::vector<int>& assignment,
                        KernelSpec kernel, const SmoOptions& opts) {
    ds.validate();
    check_binary(ds);
    require(assignment.size() == ds.size(), "train_semi: assignment does not cover the dataset");
    for (int a : assignment)
        require(a >= 0 && static_cast<std::size_t>(a) < centroids.rows(),
                "train_semi: assignment index out of range");
    require(opts.tol > 0.0 && opts.box_c > 0.0 && opts.max_passes >= 1, "train_semi: bad options");
    require(kernel.sigma > 0.0, "train_semi: sigma must be positive");

    const std::vector<int> y = ds.labels();
    CentroidGram gram(centroids, assignment, kernel);
    SmoSolver<CentroidGram> solver(y, gram, opts);

    const auto aggregate = [&](const SmoResult& res) {
        SemiSvmModel semi;
        semi.kernel = kernel;
        semi.bias = res.bias;
        semi.centroids = centroids;
        semi.betas.assign(centroids.rows(), 0.0);
        for (std::size_t i = 0; i < res.alphas.size(); ++i)
            semi.betas[static_cast<std::size_t>(assignment[i])] += y[i] * res.alphas[i];
        return semi;
    };

    try {
        return aggregate(solver.solve());
    } catch (SmoConvergenceError& e) {
        e.best_semi = aggregate(solver.finish());
        throw;
    }
}

SemiSvmModel train_semi(const Dataset& ds, const ClusterModel& clusters, KernelSpec kernel,
                        const SmoOptions& opts) {
    auto semi = train_semi(ds, clusters.centroids, clusters.assignment, kernel, opts);
    semi.provenance = "kmeans k=" + std::to_string(clusters.k()) + " r=" + format_double(clusters.scaling);
    return semi;
}

namespace {

nlohmann::json box_to_json(double box) {
    if (std::isinf(box)) return "inf";
    return box;
}

double box_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ParseError("svm model JSON: bad box constraint");
    }
    return j.get<double>();
}

}  // namespace

std::string svm_model_to_json(const SvmModel& model) {
    nlohmann::json j;
    j["sigma"] = model.kernel.sigma;
    j["c"] = box_to_json(model.box_c);
    j["b"] = model.bias;
    auto& support = j["support"] = nlohmann::json::array();
    for (std::size_t s = 0; s < model.support_index.size(); ++s) {
        nlohmann::json e;
        const auto row = model.support_x.row(s);
        e["x"] = std::vector<double>(row.begin(), row.end());
        e["y"] = model.support_y[s];
        e["alpha"] = model.support_alpha[s];
        support.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

SvmModel svm_model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("svm model JSON: ") + e.what());
    }
    SvmModel model;
    try {
        model.kernel.sigma = j.at("sigma").get<double>();
        model.box_c = box_from_json(j.at("c"));
        model.bias = j.at("b").get<double>();
        const auto& support = j.at("support");
        const std::size_t s_count = support.size();
        const std::size_t dim = s_count == 0 ? 0 : support.at(0).at("x").size();
        model.support_x = Matrix(s_count, dim);
        for (std::size_t s = 0; s < s_count; ++s) {
            const auto x = support.at(s).at("x").get<std::vector<double>>();
            if (x.size() != dim) throw ParseError("svm model JSON: ragged support vectors");
            std::copy(x.begin(), x.end(), model.support_x.row(s).begin());
            model.support_y.push_back(support.at(s).at("y").get<int>());
            model.support_alpha.push_back(support.at(s).at("alpha").get<double>());
            model.support_index.push_back(s);
            model.alphas.push_back(model.support_alpha.back());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("svm model JSON: ") + e.what());
    }
    return model;
}

std::string semi_svm_model_to_json(const SemiSvmModel& model) {
    nlohmann::json j;
    j["sigma"] = model.kernel.sigma;
    j["b"] = model.bias;
    auto& cents = j["centroids"] = nlohmann::json::array();
    for (std::size_t i = 0; i < model.centroids.rows(); ++i) {
        const auto row = model.centroids.row(i);
        cents.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["betas"] = model.betas;
    if (!model.provenance.empty()) j["provenance"] = model.provenance;
    return j.dump(2) + "\n";
}

SemiSvmModel semi_svm_model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("semi svm model JSON: ") + e.what());
    }
    SemiSvmModel model;
    try {
        model.kernel.sigma = j.at("sigma").get<double>();
        model.bias = j.at("b").get<double>();
        const auto& cents = j.at("centroids");
        const std::size_t k = cents.size();
        const std::size_t dim = k == 0 ? 0 : cents.at(0).size();
        model.centroids = Matrix(k, dim);
        for (std::size_t i = 0; i < k; ++i) {
            const auto row = cents.at(i).get<std::vector<double>>();
            if (row.size() != dim) throw ParseError("semi svm model JSON: ragged centroids");
            std::copy(row.begin(), row.end(), model.centroids.row(i).begin());
        }
        model.betas = j.at("betas").get<std::vector<double>>();
        if (model.betas.size() != k) throw ParseError("semi svm model JSON: betas length mismatch");
        if (j.contains("provenance")) model.provenance = j.at("provenance").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("semi svm model JSON: ") + e.what());
    }
    return model;
}

}  // namespace locallearn
