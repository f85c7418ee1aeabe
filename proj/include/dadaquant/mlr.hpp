#pragma once

#include <cstdint>
#include <span>

#include "dadaquant/quantize.hpp"

namespace dadaquant::mlr {

inline constexpr std::size_t kClasses = 10;
inline constexpr std::size_t kFeatures = 60;
// weights flattened row-major (class-major), bias appended
inline constexpr std::size_t kParams = kClasses * kFeatures + kClasses;

/// Mean softmax cross-entropy over n samples. X is row-major n x kFeatures.
double loss(const DenseVector& params, const float* X, const std::uint8_t* y, std::size_t n);

/// Loss and exact analytic gradient over the samples selected by idx.
/// grad must hold kParams entries; it is overwritten.
double loss_grad(const DenseVector& params, const float* X, const std::uint8_t* y,
                 std::span<const std::uint32_t> idx, std::span<double> grad);

/// Convenience overload over a contiguous batch.
double loss_grad(const DenseVector& params, const float* X, const std::uint8_t* y,
                 std::size_t n, std::span<double> grad);

std::size_t correct_count(const DenseVector& params, const float* X, const std::uint8_t* y,
                          std::size_t n);

}  // namespace dadaquant::mlr
