#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "locallearn/bench.hpp"

using namespace locallearn;

namespace {

BenchConfig small_config() {
    BenchConfig cfg;
    cfg.source = BenchConfig::Source::blobs;
    cfg.n = 100;
    cfg.d = 2;
    cfg.classes = 2;
    cfg.separation = 6.0;
    cfg.train_fraction = 0.8;
    cfg.test_fraction = 0.2;
    cfg.seed = 11;
    cfg.sigmas = {1.5};
    cfg.boxes = {std::numeric_limits<double>::infinity()};
    cfg.ks = {4};
    cfg.rs = {0.0};
    cfg.codebook_ns = {4};
    return cfg;
}

const BenchRow& find_row(const Report& report, const std::string& model) {
    for (const auto& r : report.rows)
        if (r.model == model) return r;
    REQUIRE(false);
    return report.rows.front();
}

}  // namespace

TEST_CASE("bench runs every grid family and instruments the kernel counts") {
    const auto report = run_bench(small_config());
    REQUIRE(report.rows.size() == 6);  // one of each model family

    const auto& svm_full = find_row(report, "svm-full");
    CHECK(svm_full.error.empty());
    REQUIRE(svm_full.test_accuracy.has_value());
    CHECK(*svm_full.test_accuracy >= 0.9);
    // Full-model prediction cost is the nonzero-alpha count.
    CHECK(*svm_full.kernel_evals_per_prediction == *svm_full.expansion_size);

    const auto& svm_semi = find_row(report, "svm-semi-km");
    CHECK(svm_semi.error.empty());
    CHECK(*svm_semi.kernel_evals_per_prediction == 4);
    CHECK(*svm_semi.gram_distinct_entries == 10);  // 4*5/2

    // Structural speedup identity.
    CHECK(static_cast<double>(*svm_full.kernel_evals_per_prediction) /
              static_cast<double>(*svm_semi.kernel_evals_per_prediction) ==
          doctest::Approx(static_cast<double>(*svm_full.expansion_size) / 4.0));

    const auto& grn_full = find_row(report, "grn-full");
    CHECK(*grn_full.kernel_evals_per_prediction == *grn_full.expansion_size);
    CHECK(*grn_full.expansion_size == 80);  // whole training split

    const auto& grn_semi = find_row(report, "grn-semi-km");
    CHECK(*grn_semi.kernel_evals_per_prediction == *grn_semi.expansion_size);
    CHECK(*grn_semi.expansion_size <= 8);

    const auto& vq_semi = find_row(report, "svm-semi-vq");
    CHECK(*vq_semi.kernel_evals_per_prediction == 4);
}

TEST_CASE("reruns are byte-identical") {
    const auto cfg = small_config();
    const auto a = run_bench(cfg);
    const auto b = run_bench(cfg);
    CHECK(report_to_csv(a) == report_to_csv(b));
    CHECK(report_to_json(a) == report_to_json(b));
}

TEST_CASE("a k = training-size semiparametric entry matches the full model") {
    BenchConfig cfg = small_config();
    cfg.n = 50;
    cfg.ks = {40};  // exactly the training split size
    cfg.codebook_ns.clear();
    const auto report = run_bench(cfg);

    const auto& full = find_row(report, "svm-full");
    const auto& semi = find_row(report, "svm-semi-km");
    REQUIRE(semi.error.empty());
    CHECK(*semi.train_accuracy == *full.train_accuracy);
    CHECK(*semi.test_accuracy == *full.test_accuracy);
}

TEST_CASE("config JSON round trip and validation") {
    const auto cfg = small_config();
    const auto back = bench_config_from_json(bench_config_to_json(cfg));
    CHECK(back.n == cfg.n);
    CHECK(back.sigmas == cfg.sigmas);
    CHECK(back.boxes.size() == 1);
    CHECK(std::isinf(back.boxes[0]));
    CHECK(back.ks == cfg.ks);
    CHECK(back.rs == cfg.rs);
    CHECK(back.codebook_ns == cfg.codebook_ns);
    CHECK(back.seed == cfg.seed);

    CHECK_THROWS_AS(bench_config_from_json("{"), ParseError);
    CHECK_THROWS_AS(bench_config_from_json("{\"dataset\": {\"type\": \"nope\"}}"), ParseError);

    BenchConfig bad = cfg;
    bad.train_fraction = 0.5;  // fractions no longer sum to 1
    CHECK_THROWS_AS(run_bench(bad), ContractViolation);

    BenchConfig too_many = cfg;
    too_many.ks = {1000};
    CHECK_THROWS_AS(run_bench(too_many), ContractViolation);
}

TEST_CASE("sub-model errors are recorded per row and the run continues") {
    BenchConfig cfg = small_config();
    cfg.separation = 0.0;   // heavily overlapping classes
    cfg.smo_max_passes = 1; // guaranteed convergence failure
    cfg.codebook_ns.clear();
    const auto report = run_bench(cfg);
    const auto& svm_full = find_row(report, "svm-full");
    CHECK(svm_full.error == "convergence_error");
    CHECK_FALSE(svm_full.test_accuracy.has_value());
    // GRN rows have no SMO and still succeed.
    CHECK(find_row(report, "grn-full").error.empty());
}

TEST_CASE("CSV report has the pinned column header") {
    const auto report = run_bench(small_config());
    const std::string csv = report_to_csv(report);
    CHECK(csv.rfind("row,model,sigma,box_c,k,r,codebook_n,expansion_size,train_accuracy,test_accuracy,"
                    "train_kernel_evals,kernel_evals_per_prediction,gram_distinct_entries,error\n",
                    0) == 0);
    const std::string timings = report_timings_to_csv(report);
    CHECK(timings.rfind("row,model,train_ms\n", 0) == 0);
}
