#include <cmath>

#include "doctest.h"
#include "rkm/activation.hpp"
#include "rkm/error.hpp"
#include "rkm/hardness.hpp"
#include "support.hpp"

using namespace rkm;

namespace {

HalfspaceFamily single(std::vector<std::int64_t> w, std::int64_t b, std::int64_t budget) {
  HalfspaceFamily hs;
  hs.d = static_cast<int>(w.size());
  hs.w = {std::move(w)};
  hs.b = {b};
  hs.budget = budget;
  return hs;
}

}  // namespace

TEST_SUITE("hardness") {
  TEST_CASE("halfspace intersection indicator") {
    const auto hs = single({1, 1}, 0, 2);
    CHECK(eval_halfspaces(hs, std::vector<int>{1, 1}) == 1);
    CHECK(eval_halfspaces(hs, std::vector<int>{-1, -1}) == -1);
    CHECK(eval_halfspaces(hs, std::vector<int>{1, -1}) == -1);
    CHECK_THROWS_AS(eval_halfspaces(hs, std::vector<int>{1, 0}), InputError);

    HalfspaceFamily contra;
    contra.d = 2;
    contra.w = {{1, 1}, {-1, -1}};
    contra.b = {0, 0};
    contra.budget = 2;
    for (int a : {-1, 1}) {
      for (int b : {-1, 1}) CHECK(eval_halfspaces(contra, std::vector<int>{a, b}) == -1);
    }
  }

  TEST_CASE("family validation") {
    auto hs = single({3, 1}, 1, 4);
    CHECK_THROWS_AS(check_family(hs), InputError);
    hs.budget = 5;
    CHECK_NOTHROW(check_family(hs));
    for (std::uint64_t seed = 0; seed < 10; ++seed) CHECK_NOTHROW(check_family(random_halfspaces(5, 3, 8, seed)));
  }

  TEST_CASE("extended inputs are unit vectors") {
    for (int d = 1; d <= 8; ++d) {
      for (std::uint32_t mask = 0; mask < (1u << d); ++mask) {
        std::vector<int> x(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] = (mask >> i) & 1 ? 1 : -1;
        const auto xt = extend_input(x);
        CHECK(test::dot(xt, xt) == doctest::Approx(1.0).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("margin selection saturates the unit") {
    for (const char* name : {"shifted_erf", "smoothed_hinge"}) {
      const auto act = builtin_activation(name);
      for (int T = 1; T <= 4; ++T) {
        const double lam = select_margin(act, T);
        CHECK(margin_saturates(act, T, lam));
        CHECK_FALSE(margin_saturates(act, T, lam * 0.999));
      }
    }
  }

  TEST_CASE("single halfspace over the square") {
    const auto hs = single({1, 1}, 0, 2);
    const auto act = builtin_activation("shifted_erf");
    const auto hn = build_hardness_net(hs, act, select_margin(act, 1));
    const auto s = enumerate_hypercube(hs, hn.net);
    CHECK(s.inputs == 4);
    CHECK(s.positives == 1);
    CHECK(s.min_margin >= 1.0);
    CHECK(s.max_hinge == 0.0);
  }

  TEST_CASE("two random halfspaces in four dimensions") {
    for (const char* name : {"shifted_erf", "smoothed_hinge"}) {
      const auto act = builtin_activation(name);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto hs = random_halfspaces(4, 2, 8, seed);
        const auto hn = build_hardness_net(hs, act, select_margin(act, 2));
        const auto s = enumerate_hypercube(hs, hn.net);
        CHECK(s.inputs == 16);
        CHECK(s.max_hinge == 0.0);
        CHECK(s.min_margin >= 1.0);
        CHECK(validate(hn.net, hn.budget).ok());
      }
    }
  }

  TEST_CASE("relu-like nets use paired neurons") {
    const auto hs = random_halfspaces(3, 2, 6, 1);
    const auto act = builtin_activation("smoothed_hinge");
    const auto hn = build_hardness_net(hs, act, select_margin(act, 2));
    CHECK(hn.net.widths[1] == 2 * (hs.T() + 1));
    const auto erf = build_hardness_net(hs, builtin_activation("shifted_erf"), 4.0);
    CHECK(erf.net.widths[1] == hs.T() + 1);
  }

  TEST_CASE("construction errors") {
    const auto hs = single({1, 1}, 0, 2);
    const auto act = builtin_activation("shifted_erf");
    try {
      build_hardness_net(hs, act, 0.1);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("unit(lambda)") != std::string::npos);
    }
    CHECK_THROWS_AS(build_hardness_net(hs, builtin_activation("quadratic"), 3.0), UsageError);
    CHECK_THROWS_AS(enumerate_hypercube(random_halfspaces(25, 1, 30, 1), NeuralNet{}), InputError);
  }
}
