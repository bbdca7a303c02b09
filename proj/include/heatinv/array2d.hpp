#pragma once

#include <cstddef>
#include <vector>

#include "heatinv/errors.hpp"

namespace heatinv {

/// Dense row-major 2D array of doubles, indexed (i, j) with i the x index.
class Array2D {
public:
    Array2D() : nx_(0), ny_(0) {}
    Array2D(std::size_t nx, std::size_t ny, double fill = 0.0)
        : nx_(nx), ny_(ny), data_(nx * ny, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data_[i * ny_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * ny_ + j]; }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    const std::vector<double>& flat() const { return data_; }

private:
    std::size_t nx_, ny_;
    std::vector<double> data_;
};

}  // namespace heatinv
