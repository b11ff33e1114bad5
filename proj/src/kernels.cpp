#include "bevfuse/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bevfuse::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

ArgMax best_row(const double* query, std::span<const double> keys, std::size_t length) {
  ArgMax best{0, -std::numeric_limits<double>::infinity()};
  const std::size_t rows = keys.size() / length;
  for (std::size_t t = 0; t < rows; ++t) {
    const double d = dot(query, keys.data() + t * length, length);
    if (d > best.value) best = {t, d};
  }
  return best;
}

// Logits, their max and the exponentials; shared by both variants so the
// normalization is computed identically.
double softmax_denominator(std::span<double> e) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : e) mx = std::max(mx, v);
  double denom = 0.0;
  for (double& v : e) {
    v = std::exp(v - mx);
    denom += v;
  }
  return denom;
}

}  // namespace

namespace serial {

void context_pool(std::span<const double> features, std::size_t positions, std::size_t channels,
                  std::span<const double> key, std::span<double> pooled) {
  std::vector<double> weight(positions);
  for (std::size_t p = 0; p < positions; ++p) weight[p] = dot(features.data() + p * channels, key.data(), channels);
  const double denom = softmax_denominator(weight);
  std::fill(pooled.begin(), pooled.end(), 0.0);
  for (std::size_t p = 0; p < positions; ++p) {
    const double k = weight[p] / denom;
    const double* f = features.data() + p * channels;
    for (std::size_t c = 0; c < channels; ++c) pooled[c] += k * f[c];
  }
}

std::vector<double> iou_matrix(std::span<const RotatedRect> a, std::span<const RotatedRect> b) {
  std::vector<double> out(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i * b.size() + j] = rotated_iou_2d(a[i], b[j]);
  }
  return out;
}

std::vector<ArgMax> dot_argmax(std::span<const double> queries, std::span<const double> keys, std::size_t length) {
  std::vector<ArgMax> out;
  if (length == 0 || keys.empty()) return out;
  const std::size_t rows = queries.size() / length;
  out.resize(rows);
  for (std::size_t q = 0; q < rows; ++q) out[q] = best_row(queries.data() + q * length, keys, length);
  return out;
}

std::size_t count_points_in_box(std::span<const Vec3> points, const Box3D& box) { return points_in_box(points, box); }

}  // namespace serial

namespace parallel {

void context_pool(std::span<const double> features, std::size_t positions, std::size_t channels,
                  std::span<const double> key, std::span<double> pooled) {
  std::vector<double> weight(positions);
  const auto n = static_cast<std::ptrdiff_t>(positions);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    weight[static_cast<std::size_t>(p)] =
        dot(features.data() + static_cast<std::size_t>(p) * channels, key.data(), channels);
  }
  const double denom = softmax_denominator(weight);
  for (double& w : weight) w /= denom;
  // Each thread owns a block of channels and walks positions in order, so
  // every channel sees the serial summation order.
  std::fill(pooled.begin(), pooled.end(), 0.0);
#pragma omp parallel
  {
    std::size_t begin = 0;
    std::size_t end = channels;
#ifdef _OPENMP
    const auto team = static_cast<std::size_t>(omp_get_num_threads());
    const auto me = static_cast<std::size_t>(omp_get_thread_num());
    begin = channels * me / team;
    end = channels * (me + 1) / team;
#endif
    for (std::size_t p = 0; p < positions; ++p) {
      const double k = weight[p];
      const double* f = features.data() + p * channels;
      for (std::size_t c = begin; c < end; ++c) pooled[c] += k * f[c];
    }
  }
}

std::vector<double> iou_matrix(std::span<const RotatedRect> a, std::span<const RotatedRect> b) {
  std::vector<double> out(a.size() * b.size());
  const auto na = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < na; ++i) {
    const auto row = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < b.size(); ++j) out[row * b.size() + j] = rotated_iou_2d(a[row], b[j]);
  }
  return out;
}

std::vector<ArgMax> dot_argmax(std::span<const double> queries, std::span<const double> keys, std::size_t length) {
  std::vector<ArgMax> out;
  if (length == 0 || keys.empty()) return out;
  const std::size_t rows = queries.size() / length;
  out.resize(rows);
  const auto n = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    const auto row = static_cast<std::size_t>(q);
    out[row] = best_row(queries.data() + row * length, keys, length);
  }
  return out;
}

std::size_t count_points_in_box(std::span<const Vec3> points, const Box3D& box) {
  std::size_t total = 0;
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for reduction(+ : total) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) total += point_in_box(points[static_cast<std::size_t>(i)], box) ? 1 : 0;
  return total;
}

}  // namespace parallel

void context_pool(Execution exec, std::span<const double> features, std::size_t positions, std::size_t channels,
                  std::span<const double> key, std::span<double> pooled) {
  if (exec == Execution::parallel) {
    parallel::context_pool(features, positions, channels, key, pooled);
  } else {
    serial::context_pool(features, positions, channels, key, pooled);
  }
}

std::vector<double> iou_matrix(Execution exec, std::span<const RotatedRect> a, std::span<const RotatedRect> b) {
  return exec == Execution::parallel ? parallel::iou_matrix(a, b) : serial::iou_matrix(a, b);
}

std::vector<ArgMax> dot_argmax(Execution exec, std::span<const double> queries, std::span<const double> keys,
                               std::size_t length) {
  return exec == Execution::parallel ? parallel::dot_argmax(queries, keys, length)
                                     : serial::dot_argmax(queries, keys, length);
}

void set_thread_count(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bevfuse::kernels
