#include "locallearn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "locallearn/clustering.hpp"
#include "locallearn/rng.hpp"

namespace locallearn {

std::vector<double> softmax(VecView logits) {
    require(!logits.empty(), "softmax: empty logits");
    require(all_finite(logits), "softmax: non-finite logits");
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        p[j] = std::exp(logits[j] - top);
        total += p[j];
    }
    for (double& v : p) v /= total;
    return p;
}

double cross_entropy(VecView target, VecView probs) {
    require(target.size() == probs.size(), "cross_entropy: length mismatch");
    constexpr double p_floor = 1e-15;
    double sum_d = 0.0;
    double c = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) {
        require(target[j] >= 0.0, "cross_entropy: target must be a probability vector");
        require(probs[j] >= 0.0, "cross_entropy: probabilities must be non-negative");
        sum_d += target[j];
        if (target[j] > 0.0) c -= target[j] * std::log(std::max(probs[j], p_floor));
    }
    require(std::abs(sum_d - 1.0) < 1e-9, "cross_entropy: target must sum to 1");
    return std::max(c, 0.0);
}

std::vector<double> softmax_cross_entropy_grad(VecView logits, VecView target) {
    auto p = softmax(logits);
    require(target.size() == p.size(), "softmax_cross_entropy_grad: length mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= target[j];
    return p;
}

namespace {

struct ForwardPass {
    std::vector<std::vector<double>> activations;  // per layer, activations[0] = input
};

// Activations per layer; the last entry holds the raw output logits.
ForwardPass run_forward(const MlpModel& model, VecView x) {
    ForwardPass fp;
    fp.activations.reserve(model.sizes.size());
    fp.activations.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const Matrix& w = model.weights[l];
        const auto& b = model.biases[l];
        const auto& in = fp.activations.back();
        std::vector<double> z(w.rows());
        for (std::size_t r = 0; r < w.rows(); ++r) {
            double acc = b[r];
            const auto wr = w.row(r);
            for (std::size_t c = 0; c < w.cols(); ++c) acc += wr[c] * in[c];
            z[r] = acc;
        }
        const bool last = l + 1 == model.weights.size();
        if (!last)
            for (double& v : z) v = std::tanh(v);
        fp.activations.push_back(std::move(z));
    }
    return fp;
}

}  // namespace

std::vector<double> MlpModel::logits(VecView x) const {
    require(static_cast<int>(x.size()) == sizes.front(), "mlp: input dimension mismatch");
    return run_forward(*this, x).activations.back();
}

std::vector<double> MlpModel::forward(VecView x) const {
    require(static_cast<int>(x.size()) == sizes.front(), "mlp: input dimension mismatch");
    return softmax(run_forward(*this, x).activations.back());
}

double mlp_loss(const MlpModel& model, const Matrix& x, const Matrix& targets) {
    require(x.rows() == targets.rows() && x.rows() > 0, "mlp_loss: batch shape mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto fp = run_forward(model, x.row(i));
        total += cross_entropy(targets.row(i), softmax(fp.activations.back()));
    }
    return total / static_cast<double>(x.rows());
}

MlpGradients mlp_backprop(const MlpModel& model, const Matrix& x, const Matrix& targets) {
    require(x.rows() == targets.rows() && x.rows() > 0, "mlp_backprop: batch shape mismatch");
    MlpGradients g;
    g.weights.reserve(model.weights.size());
    g.biases.reserve(model.biases.size());
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        g.weights.emplace_back(model.weights[l].rows(), model.weights[l].cols());
        g.biases.emplace_back(model.biases[l].size(), 0.0);
    }

    const double inv_batch = 1.0 / static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto fp = run_forward(model, x.row(i));
        const auto probs = softmax(fp.activations.back());
        // Output delta: p - d, then walk the layers backwards.
        std::vector<double> delta(probs.size());
        const auto target = targets.row(i);
        for (std::size_t j = 0; j < delta.size(); ++j) delta[j] = probs[j] - target[j];

        for (std::size_t l = model.weights.size(); l-- > 0;) {
            const auto& in = fp.activations[l];
            Matrix& gw = g.weights[l];
            auto& gb = g.biases[l];
            for (std::size_t r = 0; r < gw.rows(); ++r) {
                const double d = delta[r] * inv_batch;
                gb[r] += d;
                auto gwr = gw.row(r);
                for (std::size_t c = 0; c < gw.cols(); ++c) gwr[c] += d * in[c];
            }
            if (l == 0) break;
            const Matrix& w = model.weights[l];
            std::vector<double> prev(w.cols(), 0.0);
            for (std::size_t r = 0; r < w.rows(); ++r) {
                const auto wr = w.row(r);
                for (std::size_t c = 0; c < w.cols(); ++c) prev[c] += wr[c] * delta[r];
            }
            // tanh'(z) = 1 - a^2 with a the stored activation.
            for (std::size_t c = 0; c < prev.size(); ++c) prev[c] *= 1.0 - in[c] * in[c];
            delta = std::move(prev);
        }
    }
    return g;
}

MlpModel init_mlp(const std::vector<int>& sizes, std::uint64_t seed) {
    require(sizes.size() >= 2, "init_mlp: need at least input and output layers");
    for (int s : sizes) require(s >= 1, "init_mlp: layer sizes must be positive");
    MlpModel model;
    model.sizes = sizes;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const auto rows = static_cast<std::size_t>(sizes[l + 1]);
        const auto cols = static_cast<std::size_t>(sizes[l]);
        Matrix w(rows, cols);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) w(r, c) = scale * rng.normal();
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(rows, 0.0);
    }
    return model;
}

namespace {

Matrix one_hot_targets(const Dataset& ds) {
    Matrix t(ds.size(), ds.class_ids.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto it = std::lower_bound(ds.class_ids.begin(), ds.class_ids.end(), ds.samples[i].label);
        t(i, static_cast<std::size_t>(it - ds.class_ids.begin())) = 1.0;
    }
    return t;
}

}  // namespace

MlpTrainResult train_mlp(const Dataset& ds, const std::vector<int>& hidden_sizes, const MlpTrainOptions& opts) {
    ds.validate();
    require(opts.epochs >= 0, "train_mlp: epochs must be non-negative");
    require(opts.batch_size >= 1, "train_mlp: batch_size must be positive");
    require(std::isfinite(opts.learning_rate) && opts.learning_rate >= 0.0, "train_mlp: bad learning rate");
    require(ds.class_ids.size() >= 2, "train_mlp: need at least two classes");

    std::vector<int> sizes;
    sizes.push_back(ds.dimension);
    for (int h : hidden_sizes) sizes.push_back(h);
    sizes.push_back(static_cast<int>(ds.class_ids.size()));

    MlpTrainResult result;
    result.class_ids = ds.class_ids;
    result.model = init_mlp(sizes, mix_seed(opts.seed));

    const Matrix x = ds.feature_matrix();
    const Matrix targets = one_hot_targets(ds);
    const std::size_t n = ds.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffler(opts.seed);

    const auto evaluate = [&](int epoch) {
        TrainingCurvePoint pt;
        pt.epoch = epoch;
        double total = 0.0;
        int hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto logits = result.model.logits(x.row(i));
            if (!all_finite(logits))
                throw DivergenceError("train_mlp: non-finite network output at epoch " + std::to_string(epoch),
                                      epoch);
            const auto probs = softmax(logits);
            total += cross_entropy(targets.row(i), probs);
            std::size_t best = 0;
            for (std::size_t j = 1; j < probs.size(); ++j)
                if (probs[j] > probs[best]) best = j;
            if (result.class_ids[best] == ds.samples[i].label) ++hits;
        }
        pt.loss = total / static_cast<double>(n);
        pt.accuracy = static_cast<double>(hits) / static_cast<double>(n);
        if (!std::isfinite(pt.loss))
            throw DivergenceError("train_mlp: non-finite loss at epoch " + std::to_string(epoch), epoch);
        result.curve.push_back(pt);
    };

    evaluate(0);
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        shuffler.shuffle(order);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(opts.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(opts.batch_size));
            Matrix bx(stop - start, x.cols());
            Matrix bt(stop - start, targets.cols());
            for (std::size_t r = start; r < stop; ++r) {
                std::copy(x.row(order[r]).begin(), x.row(order[r]).end(), bx.row(r - start).begin());
                std::copy(targets.row(order[r]).begin(), targets.row(order[r]).end(), bt.row(r - start).begin());
            }
            MlpGradients g;
            try {
                g = mlp_backprop(result.model, bx, bt);
            } catch (const ContractViolation&) {
                // The forward pass left double range: the run has diverged.
                throw DivergenceError("train_mlp: non-finite network output at epoch " + std::to_string(epoch),
                                      epoch);
            }
            for (std::size_t l = 0; l < result.model.weights.size(); ++l) {
                auto& w = result.model.weights[l].data();
                const auto& gw = g.weights[l].data();
                for (std::size_t t = 0; t < w.size(); ++t) w[t] -= opts.learning_rate * gw[t];
                auto& b = result.model.biases[l];
                const auto& gb = g.biases[l];
                for (std::size_t t = 0; t < b.size(); ++t) b[t] -= opts.learning_rate * gb[t];
            }
        }
        evaluate(epoch);
    }
    return result;
}

int mlp_predict(const MlpModel& model, const std::vector<int>& class_ids, VecView x) {
    const auto p = model.forward(x);
    require(p.size() == class_ids.size(), "mlp_predict: class id count mismatch");
    std::size_t best = 0;
    for (std::size_t j = 1; j < p.size(); ++j)
        if (p[j] > p[best]) best = j;  // ties keep the lowest class id
    return class_ids[best];
}

CentroidSoftmaxResult centroid_softmax(const Matrix& logits, const std::vector<int>& assignment,
                                       const Matrix& centroid_logits) {
    require(centroid_logits.rows() >= 1, "centroid_softmax: empty centroid set");
    require(assignment.size() == logits.rows(), "centroid_softmax: assignment does not cover the examples");
    require(logits.cols() == centroid_logits.cols(), "centroid_softmax: logit width mismatch");

    // Softmax per centroid, computed once.
    Matrix centroid_probs(centroid_logits.rows(), centroid_logits.cols());
    for (std::size_t c = 0; c < centroid_logits.rows(); ++c) {
        const auto p = softmax(centroid_logits.row(c));
        std::copy(p.begin(), p.end(), centroid_probs.row(c).begin());
    }

    CentroidSoftmaxResult result;
    result.probabilities = Matrix(logits.rows(), logits.cols());
    double total_tv = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const int a = assignment[i];
        require(a >= 0 && static_cast<std::size_t>(a) < centroid_logits.rows(),
                "centroid_softmax: assignment index out of range");
        const auto approx = centroid_probs.row(static_cast<std::size_t>(a));
        std::copy(approx.begin(), approx.end(), result.probabilities.row(i).begin());
        const auto exact = softmax(logits.row(i));
        double l1 = 0.0;
        for (std::size_t j = 0; j < exact.size(); ++j) l1 += std::abs(approx[j] - exact[j]);
        const double tv = 0.5 * l1;
        result.report.max_total_variation = std::max(result.report.max_total_variation, tv);
        total_tv += tv;
    }
    result.report.mean_total_variation = total_tv / static_cast<double>(logits.rows());
    return result;
}

CentroidSoftmaxResult centroid_softmax_by_clustering(const Matrix& logits, int k, std::uint64_t seed) {
    require(k >= 1 && static_cast<std::size_t>(k) <= logits.rows(), "centroid_softmax: need 1 <= k <= examples");
    // Plain k-means on the logit vectors: R = 0 makes the labels irrelevant.
    const std::vector<int> dummy_labels(logits.rows(), 1);
    const ClusterModel clusters = fit_clusters(logits, dummy_labels, k, 0.0, 300, 1e-8, seed);
    return centroid_softmax(logits, clusters.assignment, clusters.centroids);
}

std::string mlp_model_to_json(const MlpModel& model, const std::vector<int>& class_ids) {
    nlohmann::json j;
    j["sizes"] = model.sizes;
    j["class_ids"] = class_ids;
    auto& weights = j["weights"] = nlohmann::json::array();
    for (const Matrix& w : model.weights) weights.push_back(w.data());  // row-major
    auto& biases = j["biases"] = nlohmann::json::array();
    for (const auto& b : model.biases) biases.push_back(b);
    return j.dump(2) + "\n";
}

MlpTrainResult mlp_model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("mlp model JSON: ") + e.what());
    }
    MlpTrainResult result;
    try {
        result.model.sizes = j.at("sizes").get<std::vector<int>>();
        result.class_ids = j.at("class_ids").get<std::vector<int>>();
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (result.model.sizes.size() < 2 || weights.size() != result.model.sizes.size() - 1 ||
            biases.size() != weights.size())
            throw ParseError("mlp model JSON: inconsistent layer counts");
        for (std::size_t l = 0; l + 1 < result.model.sizes.size(); ++l) {
            const auto rows = static_cast<std::size_t>(result.model.sizes[l + 1]);
            const auto cols = static_cast<std::size_t>(result.model.sizes[l]);
            const auto flat = weights.at(l).get<std::vector<double>>();
            if (flat.size() != rows * cols) throw ParseError("mlp model JSON: weight size mismatch");
            Matrix w(rows, cols);
            w.data() = flat;
            result.model.weights.push_back(std::move(w));
            result.model.biases.push_back(biases.at(l).get<std::vector<double>>());
            if (result.model.biases.back().size() != rows)
                throw ParseError("mlp model JSON: bias size mismatch");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("mlp model JSON: ") + e.what());
    }
    return result;
}

std::string training_curve_to_csv(const std::vector<TrainingCurvePoint>& curve) {
    std::ostringstream out;
    out << "epoch,loss,accuracy\n";
    for (const auto& pt : curve)
        out << pt.epoch << ',' << format_double(pt.loss) << ',' << format_double(pt.accuracy) << '\n';
    return out.str();
}

}  // namespace locallearn
