#pragma once

// Reference implementations shared by unit and acceptance tests. They are
// deliberately naive and written independently of the library code.

#include <cmath>
#include <deque>
#include <utility>
#include <vector>

#include "satstack/grid.hpp"

namespace satstack::oracle {

/// Breadth-first flood fill with 8-connectivity; labels issued in row-major
/// order of each component's first cell.
inline std::vector<int> flood_fill_labels(const std::vector<bool>& on, int rows, int cols, int* count = nullptr) {
  std::vector<int> label(on.size(), 0);
  int next = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r * cols + c);
      if (!on[i] || label[i]) continue;
      label[i] = ++next;
      std::deque<std::pair<int, int>> q{{r, c}};
      while (!q.empty()) {
        const auto [qr, qc] = q.front();
        q.pop_front();
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = qr + dr, nc = qc + dc;
            if (nr < 0 || nc < 0 || nr >= rows || nc >= cols) continue;
            const std::size_t j = static_cast<std::size_t>(nr * cols + nc);
            if (on[j] && !label[j]) {
              label[j] = next;
              q.emplace_back(nr, nc);
            }
          }
        }
      }
    }
  }
  if (count) *count = next;
  return label;
}

using LD = long double;

/// Thin-plate spline assembled in caller coordinates and solved by Gaussian
/// elimination with partial pivoting in extended precision.
struct TpsFit {
  std::vector<LD> w;
  LD a0 = 0, ax = 0, ay = 0;
  std::vector<Point> knots;

  LD predict(Point p) const {
    LD f = a0 + ax * p.x + ay * p.y;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      const LD r = std::hypot(static_cast<LD>(p.x) - knots[i].x, static_cast<LD>(p.y) - knots[i].y);
      if (r > 0) f += w[i] * r * r * std::log(r);
    }
    return f;
  }
};

inline TpsFit tps_fit(const std::vector<Point>& knots, const std::vector<double>& z, double lambda) {
  const std::size_t n = knots.size(), dim = n + 3;
  std::vector<std::vector<LD>> a(dim, std::vector<LD>(dim + 1, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const LD r = std::hypot(static_cast<LD>(knots[i].x) - knots[j].x, static_cast<LD>(knots[i].y) - knots[j].y);
      a[i][j] = r > 0 ? r * r * std::log(r) : 0;
    }
    a[i][i] += lambda;
    a[i][n] = a[n][i] = 1;
    a[i][n + 1] = a[n + 1][i] = knots[i].x;
    a[i][n + 2] = a[n + 2][i] = knots[i].y;
    a[i][dim] = z[i];
  }
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < dim; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    for (std::size_t r = col + 1; r < dim; ++r) {
      const LD f = a[r][col] / a[col][col];
      if (f == 0) continue;
      for (std::size_t c = col; c <= dim; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<LD> x(dim);
  for (std::size_t i = dim; i-- > 0;) {
    LD s = a[i][dim];
    for (std::size_t c = i + 1; c < dim; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  TpsFit fit;
  fit.w.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  fit.a0 = x[n];
  fit.ax = x[n + 1];
  fit.ay = x[n + 2];
  fit.knots = knots;
  return fit;
}

}  // namespace satstack::oracle
