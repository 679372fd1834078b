#include <doctest.h>

#include "toporag/budget.hpp"
#include "toporag/error.hpp"

using namespace toporag;

TEST_CASE("difficulty hand values") {
  CHECK(difficulty({1.0, 2, 1, 1}) == doctest::Approx(0.028125).epsilon(1e-12));
  CHECK(difficulty({-1.0, 32, 64, 8}) == doctest::Approx(1.0));
  CHECK(difficulty({-1.0, 100, 500, 99}) == doctest::Approx(1.0).epsilon(1e-12));
  Calibration sim_only{1.0, 0.0, 0.0, 0.0};
  CHECK(difficulty({0.0, 5, 4, 2}, sim_only) == doctest::Approx(0.5));
}

TEST_CASE("envelope anchors") {
  const BudgetEnvelope lo = envelope(0.0);
  CHECK(lo.max_iterations == 4);
  CHECK(lo.token_cap_per_call == 1024);
  const BudgetEnvelope hi = envelope(1.0);
  CHECK(hi.max_iterations == 20);
  CHECK(hi.token_cap_per_call == 4096);
  CHECK(envelope(0.028125).max_iterations == 4);
  CHECK(envelope(0.5).max_iterations == 12);
  CHECK(envelope(0.5).token_cap_per_call == 2560);
  CHECK_THROWS_AS(envelope(1.5), Error);
  CHECK_THROWS_AS(envelope(-0.1), Error);
}

TEST_CASE("difficulty is monotone in every input") {
  for (int s = 0; s <= 20; ++s) {
    for (int v = 2; v <= 40; v += 2) {
      for (int e = 0; e <= 70; e += 7) {
        for (int d = 0; d <= std::min(v - 1, 10); ++d) {
          const double s_star = -1.0 + 0.1 * s;
          const double base = difficulty({s_star, v, e, d});
          CHECK(base >= 0.0);
          CHECK(base <= 1.0);
          if (s < 20) CHECK(difficulty({-1.0 + 0.1 * (s + 1), v, e, d}) <= base);
          CHECK(difficulty({s_star, v + 1, e, d}) >= base);
          CHECK(difficulty({s_star, v, e + 1, d}) >= base);
          if (d + 1 <= v - 1) CHECK(difficulty({s_star, v, e, d + 1}) >= base);
        }
      }
    }
  }
}

TEST_CASE("envelope is monotone and bounded") {
  BudgetEnvelope prev = envelope(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const BudgetEnvelope cur = envelope(i / 1000.0);
    CHECK(cur.max_iterations >= prev.max_iterations);
    CHECK(cur.token_cap_per_call >= prev.token_cap_per_call);
    CHECK(cur.max_iterations >= kMinIterations);
    CHECK(cur.max_iterations <= kMaxIterations);
    prev = cur;
  }
}

TEST_CASE("bad inputs and calibrations are rejected") {
  CHECK_THROWS_AS(difficulty({2.0, 2, 1, 1}), Error);
  CHECK_THROWS_AS(difficulty({0.0, 0, 0, 0}), Error);
  CHECK_THROWS_AS(difficulty({0.0, 3, 2, 3}), Error);
  try {
    difficulty({0.0, 3, 2, 1}, Calibration{0.5, 0.5, 0.5, 0.0});
    FAIL("expected BadCalibration");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BadCalibration);
  }
  CHECK_THROWS_AS(difficulty({0.0, 3, 2, 1}, Calibration{0.5, 0.2, 0.2, 0.1, 0.0}), Error);
}
