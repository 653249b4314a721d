#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locallearn/common.hpp"
#include "locallearn/dataset.hpp"

namespace locallearn {

// Feed-forward network: tanh hidden layers, softmax output, trained by
// mini-batch gradient descent on mean cross-entropy.
struct MlpModel {
    std::vector<int> sizes;       // input, hidden..., output
    std::vector<Matrix> weights;  // weights[l] has shape sizes[l+1] x sizes[l]
    std::vector<std::vector<double>> biases;

    // Output probabilities for one input.
    std::vector<double> forward(VecView x) const;
    // Output-layer logits (total inputs before softmax).
    std::vector<double> logits(VecView x) const;
};

// Numerically stable softmax (max subtraction); sums to 1 within 1e-12.
std::vector<double> softmax(VecView logits);

// -sum_j d_j log(p_j) with p clamped at 1e-15; zero iff p matches d exactly
// on d's support.
double cross_entropy(VecView target, VecView probs);

// d(loss)/d(logits) for softmax + cross-entropy: p - d.
std::vector<double> softmax_cross_entropy_grad(VecView logits, VecView target);

struct MlpGradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

// Mean cross-entropy over the batch (rows of x, one-hot rows of targets).
double mlp_loss(const MlpModel& model, const Matrix& x, const Matrix& targets);
// Backprop gradients of mlp_loss.
MlpGradients mlp_backprop(const MlpModel& model, const Matrix& x, const Matrix& targets);

struct MlpTrainOptions {
    double learning_rate = 0.1;
    int epochs = 100;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainingCurvePoint {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct MlpTrainResult {
    MlpModel model;
    std::vector<TrainingCurvePoint> curve;
    std::vector<int> class_ids;  // output unit -> class id
};

// Thrown when the training loss stops being finite.
struct DivergenceError : ConvergenceError {
    DivergenceError(const std::string& what, int at_epoch) : ConvergenceError(what), epoch(at_epoch) {}
    int epoch = 0;
};

MlpModel init_mlp(const std::vector<int>& sizes, std::uint64_t seed);
MlpTrainResult train_mlp(const Dataset& ds, const std::vector<int>& hidden_sizes, const MlpTrainOptions& opts);

int mlp_predict(const MlpModel& model, const std::vector<int>& class_ids, VecView x);

// Centroid approximation of the softmax layer: each example's softmax is
// replaced by the softmax of its cluster's centroid logits.
struct CentroidSoftmaxReport {
    double max_total_variation = 0.0;
    double mean_total_variation = 0.0;
};

struct CentroidSoftmaxResult {
    Matrix probabilities;  // per example, softmax of the assigned centroid logits
    CentroidSoftmaxReport report;
};

// logits: per-example logit vectors; assignment maps each example to a row
// of centroid_logits.
CentroidSoftmaxResult centroid_softmax(const Matrix& logits, const std::vector<int>& assignment,
                                       const Matrix& centroid_logits);

// Convenience: cluster the logit vectors with plain k-means (R = 0) and
// apply centroid_softmax.
CentroidSoftmaxResult centroid_softmax_by_clustering(const Matrix& logits, int k, std::uint64_t seed);

std::string mlp_model_to_json(const MlpModel& model, const std::vector<int>& class_ids);
MlpTrainResult mlp_model_from_json(const std::string& text);
std::string training_curve_to_csv(const std::vector<TrainingCurvePoint>& curve);

}  // namespace locallearn
