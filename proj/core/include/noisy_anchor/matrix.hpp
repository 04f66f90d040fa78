// Copyright (c) 2026 the noisy-anchors authors.
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace na {

/// Dense row-major matrix of doubles. Small helper shared by the IoU
/// matrix, per-anchor feature blocks and the linear head.
struct MatrixD {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    MatrixD() = default;
    MatrixD(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double& at(std::size_t i, std::size_t j) {
        if (i >= rows || j >= cols) throw std::out_of_range("MatrixD::at");
        return data[i * cols + j];
    }

    bool empty() const { return rows == 0 || cols == 0; }
    std::size_t size() const { return data.size(); }

    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double* row(std::size_t i) { return data.data() + i * cols; }
};

}  // namespace na
