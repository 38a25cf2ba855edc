#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "fdrhs/baselines.hpp"
#include "test_oracles.hpp"

using namespace fdrhs;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<int> bh_oracle(const Eigen::VectorXd& p, double q) {
  return oracle::bh_reference(p, q);
}

}  // namespace

TEST_CASE("t-test selector basics", "[baselines]") {
  SECTION("central statistic is never selected") {
    Eigen::VectorXd t(1);
    t << 0.0;
    const BaselineResult r = ttest_select(t, 10, 0.9999);
    CHECK_THAT(r.scores[0], WithinAbs(1.0, 1e-12));
    CHECK(r.selected.empty());
  }
  SECTION("huge statistics are always selected") {
    Eigen::VectorXd t(2);
    t << 1e6, -1e6;
    const BaselineResult r = ttest_select(t, 10, 1e-6);
    CHECK(r.selected == std::vector<int>{0, 1});
  }
  SECTION("frozen reference value near the 5 percent critical point") {
    Eigen::VectorXd t(1);
    t << 2.228;
    const BaselineResult r = ttest_select(t, 10, 0.05);
    CHECK_THAT(r.scores[0], WithinAbs(0.0500117718, 1e-8));
    CHECK(r.selected.empty());  // 0.05001 is not < 0.05
  }
  SECTION("selection is symmetric in the sign of t") {
    std::mt19937 rng(4);
    std::normal_distribution<double> tdist(0.0, 2.0);
    Eigen::VectorXd t(200);
    for (int i = 0; i < 200; ++i) t[i] = tdist(rng);
    const BaselineResult a = ttest_select(t, 14, 0.07);
    const BaselineResult b = ttest_select(Eigen::VectorXd(-t), 14, 0.07);
    CHECK(a.selected == b.selected);
  }
  SECTION("threshold bounds") {
    Eigen::VectorXd t(1);
    t << 1.0;
    CHECK_THROWS_AS(ttest_select(t, 10, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ttest_select(t, 10, 1.0), std::invalid_argument);
  }
}

TEST_CASE("BH step-up on fixed examples", "[baselines]") {
  SECTION("all ones rejects nothing") {
    const BaselineResult r = bh_select(Eigen::VectorXd::Ones(8), 0.1);
    CHECK(r.selected.empty());
  }
  SECTION("textbook five-value example rejects all") {
    Eigen::VectorXd p(5);
    p << 0.01, 0.02, 0.03, 0.04, 0.05;
    const BaselineResult r = bh_select(p, 0.05);
    CHECK(r.selected == std::vector<int>{0, 1, 2, 3, 4});
  }
  SECTION("ties at the cutoff are all rejected") {
    Eigen::VectorXd p(4);
    p << 0.01, 0.01, 0.01, 0.9;
    const BaselineResult r = bh_select(p, 0.05);
    CHECK(r.selected == std::vector<int>{0, 1, 2});
  }
  SECTION("p-value range is validated") {
    Eigen::VectorXd p(1);
    p << 1.5;
    CHECK_THROWS_AS(bh_select(p, 0.1), std::invalid_argument);
  }
}

TEST_CASE("BH matches an independent oracle on 1000 random vectors", "[baselines][oracle]") {
  std::mt19937 rng(600613);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> mdist(1, 60);
  std::uniform_real_distribution<double> qdist(0.01, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = mdist(rng);
    Eigen::VectorXd p(m);
    for (int i = 0; i < m; ++i) {
      const double v = u(rng);
      p[i] = v < 0.3 ? v * 0.05 : v;  // mix in small p-values
    }
    const double q = qdist(rng);
    CHECK(bh_select(p, q).selected == bh_oracle(p, q));
  }
}

TEST_CASE("BH rejection count is monotone in q", "[baselines]") {
  std::mt19937 rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p(80);
  for (int i = 0; i < 80; ++i) p[i] = std::pow(u(rng), 2.0);
  std::size_t prev = 0;
  for (double q : {0.01, 0.05, 0.1, 0.2, 0.4}) {
    const std::size_t n = bh_select(p, q).selected.size();
    CHECK(n >= prev);
    prev = n;
  }
}

TEST_CASE("localfdr equals the constant-prior posterior", "[baselines]") {
  // model with a right-shifted alternative
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(301, -8.0, 8.0);
  TabulatedDensity marg, f1;
  marg.grid = f1.grid = grid;
  marg.values = Eigen::VectorXd::Constant(grid.size(), 0.1);
  f1.values.resize(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    f1.values[i] = std::exp(-0.5 * (grid[i] - 2.5) * (grid[i] - 2.5)) / std::sqrt(2.0 * M_PI);
  const TwoGroupsModel model(0.0, 1.0, 0.1, marg, f1, 1.0);

  std::mt19937 rng(42);
  std::normal_distribution<double> zdist;
  Eigen::VectorXd z(500);
  for (int i = 0; i < 500; ++i) z[i] = zdist(rng) + (i % 10 == 0 ? 2.5 : 0.0);

  const BaselineResult r = localfdr_select(z, model, 0.3);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(z.size(), logit(model.cbar()));
  const Eigen::VectorXd lfdr = posterior_null(beta, z, model);
  for (int i = 0; i < 500; ++i) CHECK(r.scores[i] == lfdr[i]);

  const Selection sel = select_features(lfdr, z, 0.3);
  CHECK(r.selected == sel.selected);
}

TEST_CASE("localfdr arithmetic examples", "[baselines]") {
  SECTION("uninformative likelihood gives 1 - cbar") {
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(101, -6.0, 6.0);
    TabulatedDensity marg, f1;
    marg.grid = f1.grid = grid;
    marg.values = Eigen::VectorXd::Constant(grid.size(), 0.1);
    // f1 equal to f0 at z = 0: f0(0) for sigma0 chosen below
    const double f0_at_zero = 0.2;
    const double sigma0 = 1.0 / (f0_at_zero * std::sqrt(2.0 * M_PI));
    f1.values = Eigen::VectorXd::Constant(grid.size(), f0_at_zero);
    const TwoGroupsModel model(0.0, sigma0, 0.35, marg, f1, 1.0);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(3);
    const BaselineResult r = localfdr_select(z, model, 0.5);
    for (int i = 0; i < 3; ++i) CHECK_THAT(r.scores[i], WithinAbs(0.65, 1e-10));
  }
  SECTION("direct arithmetic value 0.6") {
    // cbar = 0.1, f0(0) = 0.05, f1(0) = 0.30
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(101, -6.0, 6.0);
    TabulatedDensity marg, f1;
    marg.grid = f1.grid = grid;
    marg.values = Eigen::VectorXd::Constant(grid.size(), 0.1);
    f1.values = Eigen::VectorXd::Constant(grid.size(), 0.30);
    const double sigma0 = 1.0 / (0.05 * std::sqrt(2.0 * M_PI));
    const TwoGroupsModel model(0.0, sigma0, 0.1, marg, f1, 1.0);
    const BaselineResult r = localfdr_select(Eigen::VectorXd::Zero(1), model, 0.5);
    CHECK_THAT(r.scores[0], WithinAbs(0.6, 1e-10));  // 0.045 / 0.075
  }
}
