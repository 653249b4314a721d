// locallearn command line: dataset generation, clustering, vector
// quantization, SVM/GRN training in full and compressed form, the Bayes
// stump-ensemble demo, MLP training, and the benchmark harness.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "locallearn/bayes.hpp"
#include "locallearn/bench.hpp"
#include "locallearn/clustering.hpp"
#include "locallearn/codebook.hpp"
#include "locallearn/dataset.hpp"
#include "locallearn/grn.hpp"
#include "locallearn/kernel.hpp"
#include "locallearn/mlp.hpp"
#include "locallearn/rng.hpp"
#include "locallearn/svm.hpp"

namespace ll = locallearn;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ll::ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ll::ParseError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw ll::ParseError("write failure on " + path);
}

double parse_box(const std::string& text) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    try {
        return std::stod(text);
    } catch (const std::exception&) {
        throw ll::ContractViolation("--c must be a positive number or 'inf'");
    }
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ll::ContractViolation("bad integer list entry '" + item + "'");
        }
    }
    return out;
}

// Assignment + centroids shared by the train-semi paths: either a cluster
// model or a codebook quantization of the training set.
struct Compression {
    ll::Matrix centroids;
    std::vector<int> assignment;
    std::string provenance;
};

Compression load_compression(const std::string& clusters_path, const std::string& codebook_path,
                             const ll::Dataset& train) {
    if (!clusters_path.empty()) {
        const auto model = ll::cluster_model_from_json(read_file(clusters_path));
        if (model.assignment.size() != train.size())
            throw ll::ContractViolation("cluster model does not cover the training set");
        return {model.centroids, model.assignment, "kmeans k=" + std::to_string(model.k())};
    }
    const auto cb = ll::codebook_from_json(read_file(codebook_path));
    std::vector<int> assignment(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        assignment[i] = static_cast<int>(ll::quantize(cb, train.samples[i].features));
    return {cb.codevectors, assignment, "codebook n=" + std::to_string(cb.size())};
}

int run(int argc, char** argv) {
    CLI::App app{"semiparametric local-learning toolkit"};
    app.require_subcommand(1);

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate Gaussian blob data as CSV");
    int gen_n = 1000, gen_d = 2, gen_classes = 2;
    double gen_sep = 6.0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--n", gen_n, "sample count");
    gen->add_option("--d", gen_d, "feature dimension");
    gen->add_option("--classes", gen_classes, "class count");
    gen->add_option("--separation", gen_sep, "distance between class means");
    gen->add_option("--seed", gen_seed, "rng seed");
    gen->add_option("--out", gen_out, "output CSV path")->required();
    gen->callback([&] { ll::save_csv(ll::gen_blobs(gen_n, gen_d, gen_classes, gen_sep, gen_seed), gen_out); });

    // ---- cluster ----
    auto* cluster = app.add_subcommand("cluster", "class-balanced k-means");
    std::string cl_input, cl_out;
    int cl_k = 2, cl_max_iter = 300;
    double cl_r = 0.0, cl_tol = 1e-8;
    std::uint64_t cl_seed = 0;
    cluster->add_option("--input", cl_input, "training CSV")->required();
    cluster->add_option("--k", cl_k, "cluster count")->required();
    cluster->add_option("--r", cl_r, "class-skew weight")->required();
    cluster->add_option("--max-iter", cl_max_iter, "iteration cap");
    cluster->add_option("--tol", cl_tol, "relative objective tolerance");
    cluster->add_option("--seed", cl_seed, "rng seed");
    cluster->add_option("--out", cl_out, "output model JSON")->required();
    cluster->callback([&] {
        const auto ds = ll::load_csv(cl_input);
        const auto model =
            ll::fit_clusters(ds.feature_matrix(), ds.labels(), cl_k, cl_r, cl_max_iter, cl_tol, cl_seed);
        write_file(cl_out, ll::cluster_model_to_json(model));
        std::cout << "objective " << ll::format_double(model.objective_trace.back()) << " after "
                  << model.objective_trace.size() << " iterations\n";
    });

    // ---- vq ----
    auto* vq = app.add_subcommand("vq", "LBG codebook training");
    std::string vq_input, vq_out;
    int vq_n = 16;
    double vq_eps = 1e-4;
    std::uint64_t vq_seed = 0;
    vq->add_option("--input", vq_input, "training CSV")->required();
    vq->add_option("--n", vq_n, "codevector count")->required();
    vq->add_option("--eps", vq_eps, "relative distortion tolerance");
    vq->add_option("--seed", vq_seed, "rng seed");
    vq->add_option("--out", vq_out, "output codebook JSON")->required();
    vq->callback([&] {
        const auto ds = ll::load_csv(vq_input);
        const auto cb = ll::train_lbg(ds.feature_matrix(), vq_n, vq_eps, vq_seed);
        write_file(vq_out, ll::codebook_to_json(cb));
        std::cout << "distortion " << ll::format_double(cb.distortion_trace.back()) << "\n";
    });

    // ---- vq-demo ----
    auto* vq_demo = app.add_subcommand("vq-demo", "2D quantization picture: codebook + region grid CSV");
    std::string vqd_input, vqd_out, vqd_cb_out;
    int vqd_n = 16, vqd_res = 100;
    double vqd_eps = 1e-4, vqd_margin = 1.0;
    std::uint64_t vqd_seed = 0;
    vq_demo->add_option("--input", vqd_input, "training CSV (2D features)")->required();
    vq_demo->add_option("--n", vqd_n, "codevector count");
    vq_demo->add_option("--eps", vqd_eps, "relative distortion tolerance");
    vq_demo->add_option("--resolution", vqd_res, "grid cells per axis");
    vq_demo->add_option("--margin", vqd_margin, "padding around the data bounding box");
    vq_demo->add_option("--seed", vqd_seed, "rng seed");
    vq_demo->add_option("--out", vqd_out, "output grid CSV")->required();
    vq_demo->add_option("--codebook-out", vqd_cb_out, "optional codebook JSON path");
    vq_demo->callback([&] {
        const auto ds = ll::load_csv(vqd_input);
        if (ds.dimension != 2) throw ll::ContractViolation("vq-demo: input must be 2D");
        const ll::Matrix x = ds.feature_matrix();
        const auto cb = ll::train_lbg(x, vqd_n, vqd_eps, vqd_seed);
        double x0 = x(0, 0), x1 = x(0, 0), y0 = x(0, 1), y1 = x(0, 1);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            x0 = std::min(x0, x(i, 0));
            x1 = std::max(x1, x(i, 0));
            y0 = std::min(y0, x(i, 1));
            y1 = std::max(y1, x(i, 1));
        }
        const auto grid = ll::voronoi_grid(cb, x0 - vqd_margin, x1 + vqd_margin, y0 - vqd_margin,
                                           y1 + vqd_margin, vqd_res);
        write_file(vqd_out, ll::voronoi_grid_to_csv(grid));
        if (!vqd_cb_out.empty()) write_file(vqd_cb_out, ll::codebook_to_json(cb));
    });

    // ---- svm ----
    auto* svm = app.add_subcommand("svm", "binary kernel SVM");
    svm->require_subcommand(1);

    auto* svm_train = svm->add_subcommand("train", "train by SMO on the full dual");
    std::string st_input, st_out, st_box = "inf";
    double st_sigma = 1.0, st_tol = 1e-3;
    int st_max_passes = 1000;
    std::uint64_t st_seed = 0;
    svm_train->add_option("--input", st_input, "training CSV")->required();
    svm_train->add_option("--sigma", st_sigma, "kernel width")->required();
    svm_train->add_option("--c", st_box, "box constraint (number or 'inf')");
    svm_train->add_option("--tol", st_tol, "KKT tolerance");
    svm_train->add_option("--max-passes", st_max_passes, "SMO sweep cap");
    svm_train->add_option("--seed", st_seed, "rng seed");
    svm_train->add_option("--out", st_out, "output model JSON")->required();
    svm_train->callback([&] {
        const auto ds = ll::load_csv(st_input);
        ll::SmoOptions opts;
        opts.box_c = parse_box(st_box);
        opts.tol = st_tol;
        opts.max_passes = st_max_passes;
        opts.seed = st_seed;
        const auto model = ll::train_smo(ds, {st_sigma}, opts);
        write_file(st_out, ll::svm_model_to_json(model));
        std::cout << model.support_index.size() << " support vectors\n";
    });

    auto* svm_semi = svm->add_subcommand("train-semi", "train the compressed (centroid) dual");
    std::string ss_input, ss_out, ss_clusters, ss_codebook, ss_box = "inf";
    double ss_sigma = 1.0, ss_tol = 1e-3;
    int ss_max_passes = 1000;
    std::uint64_t ss_seed = 0;
    svm_semi->add_option("--input", ss_input, "training CSV")->required();
    auto* ss_c_opt = svm_semi->add_option("--clusters", ss_clusters, "cluster model JSON");
    auto* ss_cb_opt = svm_semi->add_option("--codebook", ss_codebook, "codebook JSON");
    ss_c_opt->excludes(ss_cb_opt);
    svm_semi->add_option("--sigma", ss_sigma, "kernel width")->required();
    svm_semi->add_option("--c", ss_box, "box constraint (number or 'inf')");
    svm_semi->add_option("--tol", ss_tol, "KKT tolerance");
    svm_semi->add_option("--max-passes", ss_max_passes, "SMO sweep cap");
    svm_semi->add_option("--seed", ss_seed, "rng seed");
    svm_semi->add_option("--out", ss_out, "output model JSON")->required();
    svm_semi->callback([&] {
        if (ss_clusters.empty() && ss_codebook.empty())
            throw ll::ContractViolation("train-semi needs --clusters or --codebook");
        const auto ds = ll::load_csv(ss_input);
        const auto comp = load_compression(ss_clusters, ss_codebook, ds);
        ll::SmoOptions opts;
        opts.box_c = parse_box(ss_box);
        opts.tol = ss_tol;
        opts.max_passes = ss_max_passes;
        opts.seed = ss_seed;
        auto model = ll::train_semi(ds, comp.centroids, comp.assignment, {ss_sigma}, opts);
        model.provenance = comp.provenance;
        write_file(ss_out, ll::semi_svm_model_to_json(model));
        std::cout << model.centroids.rows() << " centroids\n";
    });

    auto* svm_predict = svm->add_subcommand("predict", "score a CSV with a trained model");
    std::string sp_model, sp_input, sp_out;
    svm_predict->add_option("--model", sp_model, "model JSON (full or semi)")->required();
    svm_predict->add_option("--input", sp_input, "CSV to score")->required();
    svm_predict->add_option("--out", sp_out, "optional prediction CSV");
    svm_predict->callback([&] {
        const auto ds = ll::load_csv(sp_input);
        const std::string text = read_file(sp_model);
        const auto json_head = nlohmann::json::parse(text);
        std::ostringstream preds;
        preds << "prediction,margin\n";
        std::size_t hits = 0;
        const auto score = [&](auto&& model) {
            for (const auto& s : ds.samples) {
                const auto d = ll::decision(model, s.features);
                preds << d.sign << ',' << ll::format_double(d.margin) << '\n';
                if (d.sign == s.label) ++hits;
            }
        };
        if (json_head.contains("support"))
            score(ll::svm_model_from_json(text));
        else
            score(ll::semi_svm_model_from_json(text));
        std::cout << "accuracy " << ll::format_double(static_cast<double>(hits) / ds.size()) << "\n";
        if (!sp_out.empty()) write_file(sp_out, preds.str());
    });

    // ---- grn ----
    auto* grn = app.add_subcommand("grn", "general regression network classifier");
    grn->require_subcommand(1);

    auto* grn_train = grn->add_subcommand("train", "fit the full or compressed GRN");
    std::string gt_input, gt_out, gt_clusters, gt_codebook;
    double gt_sigma = 0.0;
    grn_train->add_option("--input", gt_input, "training CSV")->required();
    grn_train->add_option("--sigma", gt_sigma, "kernel width (default: median heuristic)");
    auto* gt_c_opt = grn_train->add_option("--clusters", gt_clusters, "cluster model JSON (compressed mode)");
    auto* gt_cb_opt = grn_train->add_option("--codebook", gt_codebook, "codebook JSON (compressed mode)");
    gt_c_opt->excludes(gt_cb_opt);
    grn_train->add_option("--out", gt_out, "output model JSON")->required();
    grn_train->callback([&] {
        const auto ds = ll::load_csv(gt_input);
        const double sigma = gt_sigma > 0.0 ? gt_sigma : ll::median_heuristic_sigma(ds);
        ll::GrnModel model;
        if (gt_clusters.empty() && gt_codebook.empty()) {
            model = ll::fit_grn(ds, {sigma});
        } else {
            const auto comp = load_compression(gt_clusters, gt_codebook, ds);
            model = ll::fit_grn(ds, {sigma}, comp.assignment);
        }
        write_file(gt_out, ll::grn_model_to_json(model));
        std::cout << "sigma " << ll::format_double(sigma) << "\n";
    });

    auto* grn_predict_cmd = grn->add_subcommand("predict", "classify a CSV with a trained GRN");
    std::string gp_model, gp_input, gp_out;
    grn_predict_cmd->add_option("--model", gp_model, "model JSON")->required();
    grn_predict_cmd->add_option("--input", gp_input, "CSV to score")->required();
    grn_predict_cmd->add_option("--out", gp_out, "optional prediction CSV");
    grn_predict_cmd->callback([&] {
        const auto ds = ll::load_csv(gp_input);
        const auto model = ll::grn_model_from_json(read_file(gp_model));
        std::ostringstream preds;
        preds << "prediction\n";
        std::size_t hits = 0;
        for (const auto& s : ds.samples) {
            const int p = ll::grn_predict(model, s.features);
            preds << p << '\n';
            if (p == s.label) ++hits;
        }
        std::cout << "accuracy " << ll::format_double(static_cast<double>(hits) / ds.size()) << "\n";
        if (!gp_out.empty()) write_file(gp_out, preds.str());
    });

    // ---- bayes-demo ----
    auto* bayes = app.add_subcommand("bayes-demo", "stump-ensemble posterior table and accuracy");
    std::string bd_input;
    int bd_thresholds = 8;
    double bd_eps = 0.1;
    bayes->add_option("--input", bd_input, "training CSV")->required();
    bayes->add_option("--thresholds", bd_thresholds, "thresholds per feature");
    bayes->add_option("--noise-eps", bd_eps, "label-noise likelihood parameter");
    bayes->callback([&] {
        const auto ds = ll::load_csv(bd_input);
        const auto space = ll::enumerate_stumps(ds, bd_thresholds);
        const auto table = ll::posterior_table(space, ds, bd_eps);
        const auto posterior = table.normalized();
        std::cout << "hypothesis,feature,threshold,polarity,prior,posterior\n";
        for (std::size_t h = 0; h < space.hypotheses.size(); ++h) {
            const auto& st = space.hypotheses[h];
            std::cout << h << ',' << st.feature << ',' << ll::format_double(st.threshold) << ','
                      << st.polarity << ',' << ll::format_double(space.priors[h]) << ','
                      << ll::format_double(posterior[h]) << '\n';
        }
        const auto acc = [&](auto&& predict) {
            std::size_t hits = 0;
            for (const auto& s : ds.samples)
                if (predict(s.features) == s.label) ++hits;
            return static_cast<double>(hits) / ds.size();
        };
        const double ensemble_acc =
            acc([&](ll::VecView x) { return ll::bayes_predict(space, ds, x, ds.class_ids, bd_eps); });
        double best_stump_acc = 0.0;
        for (const auto& st : space.hypotheses)
            best_stump_acc = std::max(best_stump_acc, acc([&](ll::VecView x) { return st.predict(x); }));
        std::cout << "metric,value\n";
        std::cout << "ensemble_train_accuracy," << ll::format_double(ensemble_acc) << '\n';
        std::cout << "best_stump_train_accuracy," << ll::format_double(best_stump_acc) << '\n';
    });

    // ---- mlp ----
    auto* mlp = app.add_subcommand("mlp", "feed-forward softmax network");
    mlp->require_subcommand(1);

    auto* mlp_train_cmd = mlp->add_subcommand("train", "mini-batch gradient descent");
    std::string mt_input, mt_out, mt_curve, mt_hidden = "8";
    double mt_lr = 0.1;
    int mt_epochs = 200, mt_batch = 32;
    std::uint64_t mt_seed = 0;
    mlp_train_cmd->add_option("--input", mt_input, "training CSV")->required();
    mlp_train_cmd->add_option("--hidden", mt_hidden, "hidden layer sizes, comma separated");
    mlp_train_cmd->add_option("--lr", mt_lr, "learning rate");
    mlp_train_cmd->add_option("--epochs", mt_epochs, "epoch count");
    mlp_train_cmd->add_option("--batch", mt_batch, "mini-batch size");
    mlp_train_cmd->add_option("--seed", mt_seed, "rng seed");
    mlp_train_cmd->add_option("--out", mt_out, "output model JSON")->required();
    mlp_train_cmd->add_option("--curve", mt_curve, "optional training-curve CSV");
    mlp_train_cmd->callback([&] {
        const auto ds = ll::load_csv(mt_input);
        ll::MlpTrainOptions opts;
        opts.learning_rate = mt_lr;
        opts.epochs = mt_epochs;
        opts.batch_size = mt_batch;
        opts.seed = mt_seed;
        const auto result = ll::train_mlp(ds, parse_int_list(mt_hidden), opts);
        write_file(mt_out, ll::mlp_model_to_json(result.model, result.class_ids));
        if (!mt_curve.empty()) write_file(mt_curve, ll::training_curve_to_csv(result.curve));
        std::cout << "final loss " << ll::format_double(result.curve.back().loss) << ", accuracy "
                  << ll::format_double(result.curve.back().accuracy) << "\n";
    });

    auto* mlp_gradcheck = mlp->add_subcommand("gradcheck", "finite-difference gradient check");
    std::uint64_t mg_seed = 1;
    mlp_gradcheck->add_option("--seed", mg_seed, "rng seed");
    mlp_gradcheck->callback([&] {
        ll::Rng rng(mg_seed);
        auto model = ll::init_mlp({2, 2, 2}, rng.next_u64());
        ll::Matrix x(4, 2), t(4, 2);
        for (std::size_t i = 0; i < 4; ++i) {
            x(i, 0) = rng.normal();
            x(i, 1) = rng.normal();
            t(i, i % 2) = 1.0;
        }
        const auto grads = ll::mlp_backprop(model, x, t);
        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            for (std::size_t idx = 0; idx < model.weights[l].data().size(); ++idx) {
                double& w = model.weights[l].data()[idx];
                const double keep = w;
                w = keep + h;
                const double up = ll::mlp_loss(model, x, t);
                w = keep - h;
                const double down = ll::mlp_loss(model, x, t);
                w = keep;
                const double fd = (up - down) / (2 * h);
                const double analytic = grads.weights[l].data()[idx];
                worst = std::max(worst, std::abs(fd - analytic) / std::max({1.0, std::abs(fd), std::abs(analytic)}));
            }
        }
        std::cout << "max relative gradient error " << ll::format_double(worst) << "\n";
        if (!(worst < 1e-6)) throw ll::ConvergenceError("gradient check failed");
    });

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "full-vs-semiparametric accuracy/compute grid");
    std::string bn_config, bn_out;
    bench->add_option("--config", bn_config, "bench config JSON")->required();
    bench->add_option("--out", bn_out, "output prefix (<out>.csv, <out>.json, <out>_timings.csv)")->required();
    bench->callback([&] {
        const auto cfg = ll::bench_config_from_json(read_file(bn_config));
        const auto report = ll::run_bench(cfg);
        ll::write_report(report, bn_out);
        std::cout << report.rows.size() << " rows -> " << bn_out << ".csv\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ll::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
