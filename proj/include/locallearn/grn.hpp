#pragma once

#include <string>
#include <vector>

#include "locallearn/common.hpp"
#include "locallearn/dataset.hpp"
#include "locallearn/kernel.hpp"

namespace locallearn {

// General regression network classifier: each class is scored by a sum of
// Gaussian bumps. Full mode keeps every training vector (unit weight);
// semiparametric mode keeps one class-pure centroid per (cluster, class)
// group, weighted by the group size.
enum class GrnMode { full, semiparametric };

struct GrnClass {
    int id = 0;
    Matrix centroids;            // rows are expansion vectors of this class
    std::vector<long long> counts;  // weight per row; all 1 in full mode
};

struct GrnModel {
    GrnMode mode = GrnMode::full;
    KernelSpec kernel;
    std::vector<GrnClass> classes;  // ordered by ascending class id

    std::vector<int> class_ids() const;
};

// Per-class scores, ordered as model.classes. Each op is gated on its mode.
std::vector<double> grn_scores_full(const GrnModel& model, VecView x);
std::vector<double> grn_scores_semi(const GrnModel& model, VecView x);

// Argmax class; ties resolve to the lowest class id.
int grn_predict(const GrnModel& model, VecView x);

// Full nonparametric model: stores every training sample.
GrnModel fit_grn(const Dataset& ds, KernelSpec kernel);

// Semiparametric model from a cluster assignment (k-means assignment or a
// codebook quantization): each cluster is split by class, and every
// class-pure group contributes its mean with the member count as weight.
GrnModel fit_grn(const Dataset& ds, KernelSpec kernel, const std::vector<int>& cluster_assignment);

std::string grn_model_to_json(const GrnModel& model);
GrnModel grn_model_from_json(const std::string& text);

}  // namespace locallearn
