#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "locallearn/common.hpp"
#include "locallearn/dataset.hpp"

namespace locallearn {

// Experiment grid: every full/semiparametric model combination drawn from
// the lists below, trained on the train split and scored on the test split
// with instrumented kernel-evaluation counts.
struct BenchConfig {
    enum class Source { blobs, csv };
    Source source = Source::blobs;
    int n = 1000;
    int d = 2;
    int classes = 2;
    double separation = 6.0;
    std::string csv_path;

    double train_fraction = 0.8;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;

    std::vector<double> sigmas;
    std::vector<double> boxes;        // SVM box constraints; may hold infinity
    std::vector<int> ks;              // k-means cluster counts
    std::vector<double> rs;           // skew weights, paired with every k
    std::vector<int> codebook_ns;     // VQ codebook sizes

    double smo_tol = 1e-3;
    int smo_max_passes = 1000;

    void validate(std::size_t dataset_size) const;
};

BenchConfig bench_config_from_json(const std::string& text);
std::string bench_config_to_json(const BenchConfig& config);

struct BenchRow {
    int row = 0;
    std::string model;  // grn-full, svm-full, grn-semi-km, svm-semi-km, grn-semi-vq, svm-semi-vq
    double sigma = 0.0;
    std::optional<double> box_c;
    std::optional<int> k;
    std::optional<double> r;
    std::optional<int> codebook_n;
    std::optional<std::size_t> expansion_size;  // stored expansion vectors
    std::optional<double> train_accuracy;
    std::optional<double> test_accuracy;
    std::optional<std::uint64_t> train_kernel_evals;
    std::optional<std::uint64_t> kernel_evals_per_prediction;
    std::optional<std::uint64_t> gram_distinct_entries;
    double train_ms = 0.0;  // reported separately; excluded from determinism
    std::string error;
};

struct Report {
    BenchConfig config;
    std::vector<BenchRow> rows;
};

Report run_bench(const BenchConfig& config);

// Deterministic artifacts: <prefix>.csv and <prefix>.json. Wall times go to
// <prefix>_timings.csv, which is environment-dependent by nature.
void write_report(const Report& report, const std::string& prefix);

std::string report_to_csv(const Report& report);
std::string report_to_json(const Report& report);
std::string report_timings_to_csv(const Report& report);

}  // namespace locallearn
