#include <gtest/gtest.h>

#include <random>

#include "pbb/linear.hpp"

using namespace pbb;

TEST(Linear, EmptySystem) {
  LinearSystem s;
  s.add_vars(3);
  auto x = s.solve();
  ASSERT_TRUE(x.has_value());
  EXPECT_EQ(x->size(), 3u);
}

TEST(Linear, SimpleFeasible) {
  // x0 + x1 = 1, x0 - x1 = 0  ->  x = (1/2, 1/2)
  LinearSystem s;
  int a = s.add_var(), b = s.add_var();
  s.add_row({{a, Rat(1)}, {b, Rat(1)}}, Rat(1));
  s.add_row({{a, Rat(1)}, {b, Rat(-1)}}, Rat(0));
  auto x = s.solve();
  ASSERT_TRUE(x.has_value());
  EXPECT_EQ((*x)[a], Rat(1, 2));
  EXPECT_EQ((*x)[b], Rat(1, 2));
}

TEST(Linear, InfeasibleBySign) {
  // x0 + x1 = -1 has no non-negative solution
  LinearSystem s;
  int a = s.add_var(), b = s.add_var();
  s.add_row({{a, Rat(1)}, {b, Rat(1)}}, Rat(-1));
  EXPECT_FALSE(s.solve().has_value());
}

TEST(Linear, InfeasibleByConflict) {
  LinearSystem s;
  int a = s.add_var();
  s.add_row({{a, Rat(1)}}, Rat(1));
  s.add_row({{a, Rat(1)}}, Rat(2));
  EXPECT_FALSE(s.solve().has_value());
}

TEST(Linear, RedundantRowsAndZeroRhs) {
  LinearSystem s;
  int a = s.add_var(), b = s.add_var();
  s.add_row({{a, Rat(1)}, {b, Rat(1)}}, Rat(1));
  s.add_row({{a, Rat(2)}, {b, Rat(2)}}, Rat(2));
  s.add_row({}, Rat(0));
  ASSERT_TRUE(s.solve().has_value());
}

TEST(Linear, ExactRationalsNoDrift) {
  // convex-combination membership with awkward denominators
  LinearSystem s;
  int l1 = s.add_var(), l2 = s.add_var();
  s.add_row({{l1, Rat(1)}, {l2, Rat(1)}}, Rat(1));
  s.add_row({{l1, Rat(1, 2)}, {l2, Rat(1, 3)}}, Rat(5, 12));
  auto x = s.solve();
  ASSERT_TRUE(x.has_value());
  EXPECT_EQ((*x)[l1], Rat(1, 2));
  EXPECT_EQ((*x)[l2], Rat(1, 2));
}

TEST(Linear, RandomizedAgainstConstruction) {
  // Build systems with a known solution, check solvability; then add a
  // contradictory row and check infeasibility.
  std::mt19937_64 rng(4242);
  for (int iter = 0; iter < 200; ++iter) {
    LinearSystem s;
    int n = 2 + static_cast<int>(rng() % 5);
    int m = 1 + static_cast<int>(rng() % 4);
    s.add_vars(n);
    std::vector<Rat> sol(n);
    for (auto& v : sol) v = Rat(rng() % 5, 1 + rng() % 3);
    std::vector<std::vector<Rat>> rows;
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, Rat>> terms;
      Rat rhs(0);
      std::vector<Rat> coef(n);
      for (int j = 0; j < n; ++j) {
        Rat c(static_cast<long>(rng() % 7) - 3);
        coef[j] = c;
        if (c != 0) terms.emplace_back(j, c);
        rhs += c * sol[j];
      }
      rows.push_back(coef);
      s.add_row(std::move(terms), rhs);
    }
    auto x = s.solve();
    ASSERT_TRUE(x.has_value());
    // verify the returned point satisfies every row exactly
    for (int i = 0; i < m; ++i) {
      Rat lhs(0), rhs(0);
      for (int j = 0; j < n; ++j) {
        lhs += rows[i][j] * (*x)[j];
        rhs += rows[i][j] * sol[j];
      }
      EXPECT_EQ(lhs, rhs);
    }
  }
}
