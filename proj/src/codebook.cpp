#include "locallearn/codebook.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "locallearn/dataset.hpp"

namespace locallearn {

std::size_t quantize(const Codebook& cb, VecView x) {
    require(cb.size() >= 1, "quantize: empty codebook");
    require(x.size() == cb.dim(), "quantize: dimension mismatch");
    std::size_t best = 0;
    double best_d = squared_distance(x, cb.codevectors.row(0));
    for (std::size_t n = 1; n < cb.size(); ++n) {
        const double d = squared_distance(x, cb.codevectors.row(n));
        if (d < best_d) {
            best_d = d;
            best = n;
        }
    }
    return best;
}

double average_distortion(const Codebook& cb, const Matrix& training) {
    require(training.rows() > 0, "average_distortion: empty training set");
    require(training.cols() == cb.dim(), "average_distortion: dimension mismatch");
    double total = 0.0;
    for (std::size_t m = 0; m < training.rows(); ++m) {
        const std::size_t n = quantize(cb, training.row(m));
        total += squared_distance(training.row(m), cb.codevectors.row(n));
    }
    return total / (static_cast<double>(training.rows()) * static_cast<double>(cb.dim()));
}

namespace {

std::vector<double> global_mean(const Matrix& t) {
    std::vector<double> mean(t.cols(), 0.0);
    for (std::size_t m = 0; m < t.rows(); ++m) {
        const auto row = t.row(m);
        for (std::size_t j = 0; j < t.cols(); ++j) mean[j] += row[j];
    }
    for (double& v : mean) v /= static_cast<double>(t.rows());
    return mean;
}

// Per-dimension standard deviation, the data scale for split perturbations.
std::vector<double> split_delta(const Matrix& t, const std::vector<double>& mean) {
    std::vector<double> var(t.cols(), 0.0);
    for (std::size_t m = 0; m < t.rows(); ++m) {
        const auto row = t.row(m);
        for (std::size_t j = 0; j < t.cols(); ++j) {
            const double d = row[j] - mean[j];
            var[j] += d * d;
        }
    }
    std::vector<double> delta(t.cols());
    for (std::size_t j = 0; j < t.cols(); ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(t.rows()));
        delta[j] = 1e-3 * (sd > 0.0 ? sd : 1.0);
    }
    return delta;
}

struct LloydState {
    std::vector<std::size_t> assign;
    std::vector<double> per_region_sq_error;
    std::vector<std::size_t> counts;
    double distortion = 0.0;  // D_ave
    bool any_empty = false;
};

LloydState partition(const Matrix& t, const Matrix& code) {
    LloydState s;
    const std::size_t m_count = t.rows();
    s.assign.resize(m_count);
    s.per_region_sq_error.assign(code.rows(), 0.0);
    s.counts.assign(code.rows(), 0);
    double total = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
        std::size_t best = 0;
        double best_d = squared_distance(t.row(m), code.row(0));
        for (std::size_t n = 1; n < code.rows(); ++n) {
            const double d = squared_distance(t.row(m), code.row(n));
            if (d < best_d) {
                best_d = d;
                best = n;
            }
        }
        s.assign[m] = best;
        s.per_region_sq_error[best] += best_d;
        ++s.counts[best];
        total += best_d;
    }
    s.distortion = total / (static_cast<double>(m_count) * static_cast<double>(t.cols()));
    for (std::size_t n = 0; n < code.rows(); ++n)
        if (s.counts[n] == 0) s.any_empty = true;
    return s;
}

// Region means; an empty region is re-seeded by splitting the codevector of
// the highest-distortion region (a fresh copy offset by +delta), which
// cannot increase distortion since the empty slot served no vectors.
bool region_means(const Matrix& t, const LloydState& s, const std::vector<double>& delta, Matrix& code) {
    const std::size_t n_code = code.rows();
    const std::size_t dim = t.cols();
    Matrix sums(n_code, dim);
    std::vector<std::size_t> counts(n_code, 0);
    for (std::size_t m = 0; m < t.rows(); ++m) {
        const std::size_t n = s.assign[m];
        const auto row = t.row(m);
        for (std::size_t j = 0; j < dim; ++j) sums(n, j) += row[j];
        ++counts[n];
    }
    bool reseeded = false;
    for (std::size_t n = 0; n < n_code; ++n) {
        if (counts[n] > 0) {
            for (std::size_t j = 0; j < dim; ++j) code(n, j) = sums(n, j) / static_cast<double>(counts[n]);
        } else {
            const std::size_t hot = static_cast<std::size_t>(
                std::max_element(s.per_region_sq_error.begin(), s.per_region_sq_error.end()) -
                s.per_region_sq_error.begin());
            for (std::size_t j = 0; j < dim; ++j) code(n, j) = code(hot, j) + delta[j];
            reseeded = true;
        }
    }
    return reseeded;
}

// Lloyd rounds at a fixed codebook size. Appends D_ave per round to trace
// (when given) and stops at an exact fixed point or when the relative
// improvement falls below eps. The eps stop is suppressed while a region is
// empty so the re-seed splits always get a chance to run.
void lloyd_until_converged(const Matrix& t, Matrix& code, double eps, const std::vector<double>& delta,
                           std::vector<double>* trace) {
    constexpr int kMaxRounds = 10000;
    double prev = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> prev_assign;
    for (int round = 0; round < kMaxRounds; ++round) {
        LloydState s = partition(t, code);
        if (trace) trace->push_back(s.distortion);
        const bool fixed_assign = s.assign == prev_assign;
        if (s.distortion == 0.0) {
            region_means(t, s, delta, code);
            break;
        }
        if (!s.any_empty && (fixed_assign || prev - s.distortion < eps * prev)) {
            // One final mean refresh keeps the centroid condition exact when
            // the partition has stabilized.
            if (fixed_assign) region_means(t, s, delta, code);
            break;
        }
        prev = s.distortion;
        const bool reseeded = region_means(t, s, delta, code);
        prev_assign = std::move(s.assign);
        if (reseeded) prev_assign.clear();  // reseed voids the fixed point
    }
}

}  // namespace

Codebook train_lbg(const Matrix& training, int n_codevectors, double eps, std::uint64_t /*seed*/) {
    const std::size_t m_count = training.rows();
    require(m_count > 0, "train_lbg: empty training set");
    require(n_codevectors >= 1 && static_cast<std::size_t>(n_codevectors) <= m_count,
            "train_lbg: need 1 <= N <= M");
    require(eps > 0.0, "train_lbg: eps must be positive");
    require(training.all_finite(), "train_lbg: non-finite training vector");

    const std::size_t n_target = static_cast<std::size_t>(n_codevectors);
    const std::size_t dim = training.cols();
    const auto mean = global_mean(training);
    const auto delta = split_delta(training, mean);

    Matrix code(1, dim);
    std::copy(mean.begin(), mean.end(), code.row(0).begin());

    while (code.rows() < n_target) {
        Matrix grown(std::min(code.rows() * 2, n_target), dim);
        for (std::size_t n = 0; n < grown.rows(); ++n) {
            const auto parent = code.row(n / 2);
            const double sign = n % 2 == 0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < dim; ++j) grown(n, j) = parent[j] + sign * delta[j];
        }
        code = std::move(grown);
        const bool final_size = code.rows() == n_target;
        lloyd_until_converged(training, code, eps, delta, nullptr);
        if (final_size) break;
    }

    Codebook cb;
    cb.codevectors = std::move(code);
    // The recorded trace belongs to the final-size optimization; rerun the
    // rounds from the converged codebook so the trace is present even when
    // the loop above already finished the work (these rounds are cheap and
    // monotone from a converged start).
    lloyd_until_converged(training, cb.codevectors, eps, delta, &cb.distortion_trace);
    return cb;
}

VoronoiGrid voronoi_grid(const Codebook& cb, double x0, double x1, double y0, double y1, int resolution) {
    require(cb.dim() == 2, "voronoi_grid: codebook must be 2D");
    require(resolution >= 1, "voronoi_grid: resolution must be positive");
    require(x1 > x0 && y1 > y0, "voronoi_grid: degenerate bounds");
    VoronoiGrid grid;
    grid.resolution = resolution;
    grid.x0 = x0;
    grid.x1 = x1;
    grid.y0 = y0;
    grid.y1 = y1;
    grid.region.resize(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution));
    for (int iy = 0; iy < resolution; ++iy) {
        for (int ix = 0; ix < resolution; ++ix) {
            const double cell[2] = {grid.cell_x(ix), grid.cell_y(iy)};
            grid.region[static_cast<std::size_t>(iy) * resolution + ix] =
                static_cast<int>(quantize(cb, std::span<const double>(cell, 2)));
        }
    }
    return grid;
}

std::string voronoi_grid_to_csv(const VoronoiGrid& grid) {
    std::ostringstream out;
    out << "x,y,region\n";
    for (int iy = 0; iy < grid.resolution; ++iy)
        for (int ix = 0; ix < grid.resolution; ++ix)
            out << format_double(grid.cell_x(ix)) << ',' << format_double(grid.cell_y(iy)) << ','
                << grid.region[static_cast<std::size_t>(iy) * grid.resolution + ix] << '\n';
    return out.str();
}

std::string codebook_to_json(const Codebook& cb) {
    nlohmann::json j;
    j["n"] = cb.size();
    j["dim"] = cb.dim();
    auto& vecs = j["codevectors"] = nlohmann::json::array();
    for (std::size_t n = 0; n < cb.size(); ++n) {
        const auto row = cb.codevectors.row(n);
        vecs.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return j.dump(2) + "\n";
}

Codebook codebook_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("codebook JSON: ") + e.what());
    }
    Codebook cb;
    try {
        const std::size_t n = j.at("n").get<std::size_t>();
        const std::size_t dim = j.at("dim").get<std::size_t>();
        const auto& vecs = j.at("codevectors");
        if (vecs.size() != n) throw ParseError("codebook JSON: n does not match codevector count");
        cb.codevectors = Matrix(n, dim);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = vecs.at(i).get<std::vector<double>>();
            if (row.size() != dim) throw ParseError("codebook JSON: ragged codevectors");
            std::copy(row.begin(), row.end(), cb.codevectors.row(i).begin());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("codebook JSON: ") + e.what());
    }
    return cb;
}

}  // namespace locallearn
