#include "flexenc/matrix.hpp"

#include <algorithm>
#include <string>

#include "flexenc/errors.hpp"

namespace flexenc {

namespace {
std::string shape_str(const DenseMatrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}
}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " * " + shape_str(b));
    }
    DenseMatrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

std::vector<double> dropout_mask(RngStream& rng, double p, std::size_t len) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw ConfigError("dropout_mask: invalid probability " + std::to_string(p) +
                          " (want 0 <= p < 1)");
    }
    std::vector<double> mask(len);
    const double keep_scale = 1.0 / (1.0 - p);
    for (std::size_t i = 0; i < len; ++i) {
        mask[i] = (rng.uniform() < p) ? 0.0 : keep_scale;
    }
    return mask;
}

}  // namespace flexenc
