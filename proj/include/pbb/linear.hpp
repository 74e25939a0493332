#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pbb/rational.hpp"

namespace pbb {

/// An exact-rational linear feasibility problem: find x >= 0 with A x = b.
/// Rows are built incrementally from sparse (column, coefficient) terms.
class LinearSystem {
 public:
  int add_var() { return num_vars_++; }

  void add_vars(int n) { num_vars_ += n; }

  int num_vars() const { return num_vars_; }
  std::size_t num_rows() const { return rows_.size(); }

  void add_row(std::vector<std::pair<int, Rat>> terms, Rat rhs) {
    rows_.push_back({std::move(terms), std::move(rhs)});
  }

  /// Phase-1 simplex with Bland's rule; exact arithmetic throughout.
  /// Returns a feasible point or nullopt when the system is infeasible.
  std::optional<std::vector<Rat>> solve() const {
    const int n = num_vars_;
    const int m = static_cast<int>(rows_.size());
    if (m == 0) return std::vector<Rat>(n, Rat(0));

    // tableau: m rows, columns = n structural + m artificial + rhs
    const int cols = n + m + 1;
    std::vector<std::vector<Rat>> t(m, std::vector<Rat>(cols, Rat(0)));
    for (int i = 0; i < m; ++i) {
      for (const auto& [j, c] : rows_[i].terms) {
        if (j < 0 || j >= n) throw std::logic_error("LinearSystem: column out of range");
        t[i][j] += c;
      }
      t[i][cols - 1] = rows_[i].rhs;
      if (t[i][cols - 1] < 0) {
        for (auto& v : t[i]) v = -v;
      }
      t[i][n + i] = 1;
    }

    // objective: minimize the sum of artificials (stored negated, as the
    // sum of the constraint rows, so reduced costs read directly)
    std::vector<Rat> obj(cols, Rat(0));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < cols; ++j) obj[j] += t[i][j];
    for (int i = 0; i < m; ++i) obj[n + i] = 0;

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    while (true) {
      // Bland: smallest-index column with positive reduced cost
      int pivot_col = -1;
      for (int j = 0; j < n + m; ++j) {
        if (obj[j] > 0) {
          pivot_col = j;
          break;
        }
      }
      if (pivot_col < 0) break;

      int pivot_row = -1;
      Rat best_ratio;
      for (int i = 0; i < m; ++i) {
        if (t[i][pivot_col] > 0) {
          Rat ratio = t[i][cols - 1] / t[i][pivot_col];
          if (pivot_row < 0 || ratio < best_ratio ||
              (ratio == best_ratio && basis[i] < basis[pivot_row])) {
            pivot_row = i;
            best_ratio = ratio;
          }
        }
      }
      if (pivot_row < 0) break;  // unbounded column cannot happen in phase 1, but stay safe

      Rat p = t[pivot_row][pivot_col];
      for (int j = 0; j < cols; ++j) t[pivot_row][j] /= p;
      for (int i = 0; i < m; ++i) {
        if (i == pivot_row) continue;
        Rat f = t[i][pivot_col];
        if (f == 0) continue;
        for (int j = 0; j < cols; ++j) t[i][j] -= f * t[pivot_row][j];
      }
      Rat f = obj[pivot_col];
      if (f != 0) {
        for (int j = 0; j < cols; ++j) obj[j] -= f * t[pivot_row][j];
      }
      basis[pivot_row] = pivot_col;
    }

    // feasible iff all artificials are zero, i.e. the residual objective is 0
    if (obj[cols - 1] != 0) return std::nullopt;

    std::vector<Rat> x(n, Rat(0));
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n) x[basis[i]] = t[i][cols - 1];
    }
    return x;
  }

  /// Compact description used by refusal reports.
  std::string describe() const {
    return std::to_string(rows_.size()) + " equations over " + std::to_string(num_vars_) +
           " non-negative unknowns";
  }

 private:
  struct Row {
    std::vector<std::pair<int, Rat>> terms;
    Rat rhs;
  };
  int num_vars_ = 0;
  std::vector<Row> rows_;
};

}  // namespace pbb
