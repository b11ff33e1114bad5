#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bevfuse/geometry.hpp"

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP variant; the parallel variants keep the serial summation order so
// both produce bit-identical results for any thread count.
namespace bevfuse::kernels {

enum class Execution { serial, parallel };

struct ArgMax {
  std::size_t index = 0;
  double value = 0.0;
};

namespace serial {

// Softmax over positions of key . f_p, then pooled[c] = sum_p k_p f_p[c].
void context_pool(std::span<const double> features, std::size_t positions, std::size_t channels,
                  std::span<const double> key, std::span<double> pooled);

// Row-major |a| x |b| matrix of rotated IoUs.
std::vector<double> iou_matrix(std::span<const RotatedRect> a, std::span<const RotatedRect> b);

// For each query row, the key row with the largest dot product (lowest index on ties).
std::vector<ArgMax> dot_argmax(std::span<const double> queries, std::span<const double> keys, std::size_t length);

std::size_t count_points_in_box(std::span<const Vec3> points, const Box3D& box);

}  // namespace serial

namespace parallel {

void context_pool(std::span<const double> features, std::size_t positions, std::size_t channels,
                  std::span<const double> key, std::span<double> pooled);
std::vector<double> iou_matrix(std::span<const RotatedRect> a, std::span<const RotatedRect> b);
std::vector<ArgMax> dot_argmax(std::span<const double> queries, std::span<const double> keys, std::size_t length);
std::size_t count_points_in_box(std::span<const Vec3> points, const Box3D& box);

}  // namespace parallel

// Dispatchers.
void context_pool(Execution exec, std::span<const double> features, std::size_t positions, std::size_t channels,
                  std::span<const double> key, std::span<double> pooled);
std::vector<double> iou_matrix(Execution exec, std::span<const RotatedRect> a, std::span<const RotatedRect> b);
std::vector<ArgMax> dot_argmax(Execution exec, std::span<const double> queries, std::span<const double> keys,
                               std::size_t length);

// Sets the OpenMP team size; a no-op without OpenMP.
void set_thread_count(int threads);
int thread_count();

}  // namespace bevfuse::kernels
