#include "locallearn/grn.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

namespace locallearn {

std::vector<int> GrnModel::class_ids() const {
    std::vector<int> ids;
    ids.reserve(classes.size());
    for (const auto& c : classes) ids.push_back(c.id);
    return ids;
}

namespace {

std::vector<double> scores(const GrnModel& model, VecView x) {
    std::vector<double> out;
    out.reserve(model.classes.size());
    for (const auto& cls : model.classes) {
        double s = 0.0;
        for (std::size_t i = 0; i < cls.centroids.rows(); ++i)
            s += static_cast<double>(cls.counts[i]) * gaussian_kernel(x, cls.centroids.row(i), model.kernel);
        out.push_back(s);
    }
    return out;
}

}  // namespace

std::vector<double> grn_scores_full(const GrnModel& model, VecView x) {
    require(model.mode == GrnMode::full, "grn_scores_full: model is not in full mode");
    return scores(model, x);
}

std::vector<double> grn_scores_semi(const GrnModel& model, VecView x) {
    require(model.mode == GrnMode::semiparametric, "grn_scores_semi: model is not semiparametric");
    return scores(model, x);
}

int grn_predict(const GrnModel& model, VecView x) {
    require(!model.classes.empty(), "grn_predict: empty model");
    const auto s = scores(model, x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i] > s[best]) best = i;  // ties keep the lowest class id
    return model.classes[best].id;
}

GrnModel fit_grn(const Dataset& ds, KernelSpec kernel) {
    ds.validate();
    require(kernel.sigma > 0.0, "fit_grn: sigma must be positive");
    GrnModel model;
    model.mode = GrnMode::full;
    model.kernel = kernel;
    for (int id : ds.class_ids) {
        GrnClass cls;
        cls.id = id;
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.samples[i].label == id) members.push_back(i);
        cls.centroids = Matrix(members.size(), static_cast<std::size_t>(ds.dimension));
        cls.counts.assign(members.size(), 1);
        for (std::size_t r = 0; r < members.size(); ++r)
            std::copy(ds.samples[members[r]].features.begin(), ds.samples[members[r]].features.end(),
                      cls.centroids.row(r).begin());
        model.classes.push_back(std::move(cls));
    }
    return model;
}

GrnModel fit_grn(const Dataset& ds, KernelSpec kernel, const std::vector<int>& cluster_assignment) {
    ds.validate();
    require(kernel.sigma > 0.0, "fit_grn: sigma must be positive");
    require(cluster_assignment.size() == ds.size(), "fit_grn: assignment does not cover the dataset");

    GrnModel model;
    model.mode = GrnMode::semiparametric;
    model.kernel = kernel;
    const std::size_t dim = static_cast<std::size_t>(ds.dimension);

    for (int id : ds.class_ids) {
        // Group this class's members by cluster; keys iterate in ascending
        // cluster order so the expansion order is deterministic.
        std::map<int, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < ds.size(); ++i)
            if (ds.samples[i].label == id) groups[cluster_assignment[i]].push_back(i);
        require(!groups.empty(), "fit_grn: class has no members");

        GrnClass cls;
        cls.id = id;
        cls.centroids = Matrix(groups.size(), dim);
        cls.counts.reserve(groups.size());
        std::size_t r = 0;
        for (const auto& [cluster, members] : groups) {
            auto row = cls.centroids.row(r);
            for (std::size_t i : members) {
                const auto& f = ds.samples[i].features;
                for (std::size_t j = 0; j < dim; ++j) row[j] += f[j];
            }
            for (std::size_t j = 0; j < dim; ++j) row[j] /= static_cast<double>(members.size());
            cls.counts.push_back(static_cast<long long>(members.size()));
            ++r;
        }
        model.classes.push_back(std::move(cls));
    }
    return model;
}

std::string grn_model_to_json(const GrnModel& model) {
    nlohmann::json j;
    j["mode"] = model.mode == GrnMode::full ? "full" : "semiparametric";
    j["sigma"] = model.kernel.sigma;
    auto& classes = j["classes"] = nlohmann::json::array();
    for (const auto& cls : model.classes) {
        nlohmann::json jc;
        jc["id"] = cls.id;
        auto& cents = jc["centroids"] = nlohmann::json::array();
        for (std::size_t i = 0; i < cls.centroids.rows(); ++i) {
            const auto row = cls.centroids.row(i);
            cents.push_back(std::vector<double>(row.begin(), row.end()));
        }
        jc["counts"] = cls.counts;
        classes.push_back(std::move(jc));
    }
    return j.dump(2) + "\n";
}

GrnModel grn_model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("GRN model JSON: ") + e.what());
    }
    GrnModel model;
    try {
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "full")
            model.mode = GrnMode::full;
        else if (mode == "semiparametric")
            model.mode = GrnMode::semiparametric;
        else
            throw ParseError("GRN model JSON: unknown mode '" + mode + "'");
        model.kernel.sigma = j.at("sigma").get<double>();
        for (const auto& jc : j.at("classes")) {
            GrnClass cls;
            cls.id = jc.at("id").get<int>();
            const auto& cents = jc.at("centroids");
            const std::size_t rows = cents.size();
            const std::size_t dim = rows == 0 ? 0 : cents.at(0).size();
            cls.centroids = Matrix(rows, dim);
            for (std::size_t i = 0; i < rows; ++i) {
                const auto row = cents.at(i).get<std::vector<double>>();
                if (row.size() != dim) throw ParseError("GRN model JSON: ragged centroids");
                std::copy(row.begin(), row.end(), cls.centroids.row(i).begin());
            }
            cls.counts = jc.at("counts").get<std::vector<long long>>();
            if (cls.counts.size() != rows) throw ParseError("GRN model JSON: counts length mismatch");
            model.classes.push_back(std::move(cls));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("GRN model JSON: ") + e.what());
    }
    return model;
}

}  // namespace locallearn
