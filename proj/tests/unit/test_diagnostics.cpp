#include <doctest.h>

#include <cmath>

#include "cvgae/diagnostics.hpp"

using namespace cvgae;

namespace {

// Reference variance: mean first, then squared deviations.
double two_pass_variance(const Dense& m, std::size_t col) {
  double mean = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) mean += m(i, col);
  mean /= static_cast<double>(m.rows());
  double ss = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) ss += (m(i, col) - mean) * (m(i, col) - mean);
  return ss / static_cast<double>(m.rows() - 1);
}

}  // namespace

TEST_CASE("cosine examples") {
  const std::vector<double> a{1.0, 2.0, -1.0}, neg{-1.0, -2.0, 1.0}, orth{2.0, -1.0, 0.0}, zero{0, 0, 0};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(cosine_similarity(a, orth) == 0.0);
  CHECK(cosine_similarity(a, zero) == 0.0);
  CHECK_THROWS(cosine_similarity(a, std::vector<double>{1.0}));

  const Dense g(2, 2, {1, 2, 3, 4});
  Dense h = g;
  h *= -1.0;
  CHECK(lambda_fr(g, g) == doctest::Approx(1.0));
  CHECK(lambda_fd(g, h) == doctest::Approx(-1.0));
  CHECK_THROWS(lambda_fd(g, Dense(1, 4)));
}

TEST_CASE("lambda values are bounded and scale invariant") {
  auto rng = rng_stream(51, Stream::kTestData);
  for (int t = 0; t < 200; ++t) {
    Dense a(5, 3), b(5, 3);
    for (double& x : a.values()) x = rng.normal();
    for (double& x : b.values()) x = rng.normal();
    const double base = lambda_fr(a, b);
    CHECK(base >= -1.0);
    CHECK(base <= 1.0);
    Dense a2 = a, b2 = b;
    a2 *= rng.uniform(1e-3, 1e3);
    b2 *= rng.uniform(1e-3, 1e3);
    CHECK(lambda_fr(a2, b) == doctest::Approx(base).epsilon(1e-12));
    CHECK(lambda_fd(a, b2) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("active unit variance") {
  SUBCASE("constant and alternating columns") {
    Dense m(1000, 2);
    for (std::size_t i = 0; i < 1000; ++i) {
      m(i, 0) = 3.0;
      m(i, 1) = i % 2 == 0 ? -1.0 : 1.0;
    }
    const ActiveUnits au = active_units(m);
    CHECK(au.variance[0] == 0.0);
    CHECK_FALSE(au.active[0]);
    CHECK(au.variance[1] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(au.active[1]);
    CHECK(au.count() == 1);
  }
  SUBCASE("matches a two-pass reference") {
    auto rng = rng_stream(52, Stream::kTestData);
    for (int t = 0; t < 50; ++t) {
      Dense m(2 + rng.below(200), 1 + rng.below(8));
      const double offset = rng.uniform(-1e3, 1e3);
      for (double& x : m.values()) x = offset + rng.normal() * rng.uniform(0.01, 5.0);
      const ActiveUnits au = active_units(m);
      for (std::size_t u = 0; u < m.cols(); ++u) {
        const double ref = two_pass_variance(m, u);
        CHECK(std::abs(au.variance[u] - ref) <= 1e-12 * std::max(1.0, ref));
      }
    }
  }
  SUBCASE("raising delta never activates a unit") {
    auto rng = rng_stream(53, Stream::kTestData);
    Dense m(40, 6);
    for (std::size_t i = 0; i < 40; ++i) {
      for (std::size_t u = 0; u < 6; ++u) m(i, u) = rng.normal() * 0.05 * static_cast<double>(u);
    }
    std::size_t last = m.cols();
    for (double delta : {0.0, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 1.0}) {
      const ActiveUnits au = active_units(m, delta);
      CHECK(au.count() <= last);
      last = au.count();
    }
  }
  CHECK_THROWS(active_units(Dense(1, 3)));
}

TEST_CASE("cumulative differences") {
  const std::vector<double> a{1, 2, 3, 4}, b{0, 2, 5};
  CHECK(cumulative_difference(a, b) == std::vector<double>{1, 1, -1});

  const std::vector<std::vector<double>> ua{{1, 0}, {2, 1}}, ub{{0, 0}, {1, 3}};
  const auto d = cumulative_difference(ua, ub);
  CHECK(d.size() == 2);
  CHECK(d[1] == std::vector<double>{2, -2});
}
