#pragma once

#include <cstddef>
#include <vector>

#include "flexenc/rng.hpp"

namespace flexenc {

// Row-major dense matrix of doubles. Unit oracles and all loss/gradient
// arithmetic run at this precision; model parameters are stored separately
// as 32-bit floats.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Standard product. Throws ShapeError naming both shapes on a mismatch.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// Inverted-dropout mask: each entry is 0 with probability p, else 1/(1-p),
// so the expected value of every entry is 1 and evaluation needs no rescale.
// Throws on p outside [0, 1).
std::vector<double> dropout_mask(RngStream& rng, double p, std::size_t len);

}  // namespace flexenc
