#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "locallearn/common.hpp"

namespace locallearn {

// LBG-trained vector quantizer: N codevectors satisfying the
// nearest-neighbor and centroid optimality conditions on the training set.
struct Codebook {
    Matrix codevectors;                    // N x dim
    std::vector<double> distortion_trace;  // D_ave per round at the final size

    std::size_t size() const { return codevectors.rows(); }
    std::size_t dim() const { return codevectors.cols(); }
};

// Index of the nearest codevector (squared Euclidean), ties to the lowest
// index. The codevector itself is cb.codevectors.row(index).
std::size_t quantize(const Codebook& cb, VecView x);

// Mean squared reconstruction error per vector component:
//   D_ave = (1 / (M * dim)) * sum_m ||X_m - Q(X_m)||^2
double average_distortion(const Codebook& cb, const Matrix& training);

// Binary-splitting LBG: grow from the global mean by +-delta splits, then
// alternate nearest-neighbor partitioning and centroid updates until the
// relative distortion improvement drops below eps. The trace records rounds
// at the final codebook size. seed is accepted for interface stability; the
// procedure is deterministic and does not consume it.
Codebook train_lbg(const Matrix& training, int n_codevectors, double eps, std::uint64_t seed);

struct VoronoiGrid {
    int resolution = 0;  // cells per axis
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    std::vector<int> region;  // row-major, region[iy * resolution + ix]

    double cell_x(int ix) const { return x0 + (ix + 0.5) * (x1 - x0) / resolution; }
    double cell_y(int iy) const { return y0 + (iy + 0.5) * (y1 - y0) / resolution; }
};

// Rasterizes the partition of a 2D codebook: each cell is labeled with the
// quantizer index of its center.
VoronoiGrid voronoi_grid(const Codebook& cb, double x0, double x1, double y0, double y1, int resolution);

std::string voronoi_grid_to_csv(const VoronoiGrid& grid);

std::string codebook_to_json(const Codebook& cb);
Codebook codebook_from_json(const std::string& text);

}  // namespace locallearn
