#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locallearn/common.hpp"

namespace locallearn {

struct Sample {
    std::vector<double> features;
    int label = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

// Immutable labeled dataset. class_ids holds the sorted distinct labels
// actually present; binary tasks use {-1, +1}.
struct Dataset {
    std::vector<Sample> samples;
    int dimension = 0;
    std::vector<int> class_ids;

    std::size_t size() const { return samples.size(); }

    // Row i = features of sample i.
    Matrix feature_matrix() const;
    std::vector<int> labels() const;

    bool is_binary() const { return class_ids == std::vector<int>{-1, 1}; }

    // Checks every structural invariant; throws ContractViolation.
    void validate() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

Dataset make_dataset(std::vector<Sample> samples);

// sqrt of the summed squared component differences.
double euclidean_distance(VecView x, VecView c);
double squared_distance(VecView x, VecView c);

// Isotropic unit-variance Gaussian blobs, one per class, class means
// `separation` apart (adjacent means for 3+ classes). Two-class datasets
// are labeled {-1,+1}; otherwise labels are 0..classes-1.
Dataset gen_blobs(int n, int d, int classes, double separation, std::uint64_t seed);

// CSV schema: header "f0,f1,...,f{d-1},label", one sample per row,
// feature text chosen to round-trip exactly, integer labels, LF newlines.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace locallearn
