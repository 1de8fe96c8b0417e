#include "causal_lab/metric_models.hpp"

#include <cmath>

#include "doctest.h"

using namespace causal_lab;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("minkowski classification covers every character") {
  auto m = make_model("minkowski2d");
  const Vec2 o{0.0, 0.0};
  CHECK(causal_character(*m, o, {1.0, 0.0}) == CausalCharacter::TimelikeFuture);
  CHECK(causal_character(*m, o, {-1.0, 0.0}) == CausalCharacter::TimelikePast);
  CHECK(causal_character(*m, o, {1.0, 1.0}) == CausalCharacter::NullFuture);
  CHECK(causal_character(*m, o, {1.0, -1.0}) == CausalCharacter::NullFuture);
  CHECK(causal_character(*m, o, {-1.0, 1.0}) == CausalCharacter::NullPast);
  CHECK(causal_character(*m, o, {0.0, 1.0}) == CausalCharacter::Spacelike);
  CHECK(causal_character(*m, o, {0.0, 0.0}) == CausalCharacter::Zero);
  CHECK(causal_character(*m, o, {2.0, 1.0}) == CausalCharacter::TimelikeFuture);
  CHECK(causal_character(*m, o, {1.0, 2.0}) == CausalCharacter::Spacelike);
}

TEST_CASE("minkowski proper time matches the closed form") {
  auto m = make_model("minkowski2d");
  const double tau = segment_proper_time(*m, {0.0, 0.0}, {2.0, 1.0});
  CHECK(std::abs(tau - std::sqrt(3.0)) < 1e-12);
  CHECK(segment_proper_time(*m, {0.0, 0.0}, {1.0, 1.0}) == doctest::Approx(0.0));
  const double back = segment_proper_time(*m, {2.0, 1.0}, {-2.0, -1.0});
  CHECK(std::abs(back - std::sqrt(3.0)) < 1e-12);
}

TEST_CASE("minkowski segment causality") {
  auto m = make_model("minkowski2d");
  CHECK(segment_future_causal(*m, {0.0, 0.0}, {1.0, 0.5}));
  CHECK(segment_future_causal(*m, {0.0, 0.0}, {1.0, 1.0}));
  CHECK_FALSE(segment_future_causal(*m, {0.0, 0.0}, {0.5, 1.0}));
  CHECK_FALSE(segment_future_causal(*m, {0.0, 0.0}, {-1.0, 0.0}));
  CHECK_FALSE(segment_future_causal(*m, {0.0, 0.0}, {0.0, 0.0}));
}

TEST_CASE("slit model blocks segments through the slit only") {
  auto m = make_model("slit_minkowski");
  CHECK(m->time_axis() == 1);
  CHECK_FALSE(m->contains({0.0, 0.0}));
  CHECK_FALSE(m->contains({1.0, 0.0}));
  CHECK_FALSE(m->contains({-1.0, 0.0}));
  CHECK(m->contains({1.1, 0.0}));
  CHECK(m->contains({0.0, 0.1}));

  // crossing t = 0 at x = 0: blocked
  CHECK_FALSE(m->segment_visible({-2.0, -0.5}, {4.0, 1.0}));
  // crossing at x = -1.75: clear
  CHECK(m->segment_visible({-2.0, -0.5}, {0.5, 1.0}));
  // crossing exactly outside the tip
  CHECK(m->segment_visible({1.2, -0.5}, {0.0, 1.0}));
  CHECK_FALSE(m->segment_visible({0.9, -0.5}, {0.0, 1.0}));
  // along the slit line
  CHECK_FALSE(m->segment_visible({-2.0, 0.0}, {4.0, 0.0}));
  CHECK(m->segment_visible({-3.0, 0.0}, {1.5, 0.0}));
  // same side, no crossing
  CHECK(m->segment_visible({-2.0, 0.5}, {4.0, 0.0}));

  // time axis is x1 here
  CHECK(causal_character(*m, {0.0, 1.0}, {0.0, 1.0}) == CausalCharacter::TimelikeFuture);
  CHECK(causal_character(*m, {0.0, 1.0}, {1.0, 1.0}) == CausalCharacter::NullFuture);
  CHECK(causal_character(*m, {0.0, 1.0}, {1.0, 0.0}) == CausalCharacter::Spacelike);
}

TEST_CASE("singular wedge domain and metric") {
  auto m = make_model("singular_wedge");
  CHECK_FALSE(m->contains({0.0, 0.0}));
  CHECK_FALSE(m->contains({0.5, 0.25}));   // wedge boundary is removed
  CHECK_FALSE(m->contains({-1.0001, 5.0}));
  CHECK(m->contains({-0.99, 0.001}));
  CHECK(m->contains({0.0, 1.0}));
  CHECK(m->contains({0.0, -1.0}));

  const Metric2 g1 = m->metric_at({0.0, 1.0});
  CHECK(g1.eval({0.0, 1.0}, {0.0, 1.0}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(g1.eval({1.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
  const Metric2 g2 = m->metric_at({0.0, 2.0});
  CHECK(g2.eval({0.0, 1.0}, {0.0, 1.0}) == doctest::Approx(-0.25).epsilon(1e-12));

  // future means increasing y
  CHECK(causal_character(*m, {0.0, -1.0}, {0.0, 1.0}) == CausalCharacter::TimelikeFuture);
  CHECK(causal_character(*m, {0.0, -1.0}, {0.0, -1.0}) == CausalCharacter::TimelikePast);
  CHECK(causal_character(*m, {0.0, -1.0}, {1.0, 0.0}) == CausalCharacter::Spacelike);
}

TEST_CASE("singular wedge visibility clips against the removed cone") {
  auto m = make_model("singular_wedge");
  CHECK(m->segment_visible({-0.3, 0.2}, {0.8, 0.2}));
  // straight shot from lower sector to upper sector through the tip region
  CHECK_FALSE(m->segment_visible({0.2, -0.3}, {0.0, 0.6}));
  // same move further left passes in front of the wedge apex
  CHECK(m->segment_visible({-0.2, -0.3}, {0.0, 0.6}));
  // hugging the wedge boundary from below stays blocked at the boundary itself
  CHECK_FALSE(m->segment_visible({0.4, -0.2}, {0.0, 0.4}));
}

TEST_CASE("axis proper time in the singular model is log(1/eps)") {
  auto m = make_model("singular_wedge");
  const double eps = 0.1;
  const double tau = segment_proper_time(*m, {0.0, eps}, {0.0, 1.0 - eps}, 20000);
  CHECK(std::abs(tau - std::log(1.0 / eps)) < 1e-5);

  const CausalPath path{{0.0, eps}, {0.0, 1.0}};
  const double len = curve_length(*m, path, 20000);
  CHECK(std::abs(len - std::log(1.0 / eps)) < 1e-5);
}

TEST_CASE("cylinder wrapping, domain and barriers") {
  auto m = make_model("slit_cylinder");
  const Vec2 w = m->canonical({kPi + 0.1, 0.0});
  CHECK(w.x0 == doctest::Approx(-kPi + 0.1).epsilon(1e-12));
  CHECK(m->canonical({-kPi, 2.0}).x0 == doctest::Approx(-kPi));

  CHECK_FALSE(m->contains({kPi / 4.0, 0.0}));
  CHECK(m->contains({kPi / 4.0, 1.0}));
  CHECK_FALSE(m->contains({-kPi / 4.0, 1.0}));
  CHECK(m->contains({-kPi / 4.0, -1.0}));
  CHECK_FALSE(m->contains({kPi / 4.0 + 2.0 * kPi, 0.0}));  // wraps onto the barrier

  CHECK(m->segment_visible({0.0, 1.0}, {kPi / 2.0, 0.0}));
  CHECK_FALSE(m->segment_visible({0.0, 0.0}, {kPi / 2.0, 0.0}));
  CHECK(m->segment_visible({0.0, -1.0}, {-kPi / 2.0, 0.0}));
  CHECK_FALSE(m->segment_visible({0.0, 0.0}, {-kPi / 2.0, 0.0}));
  // crossing the identification seam sees no barrier
  CHECK(m->segment_visible({kPi - 0.1, 0.0}, {0.2, 0.0}));

  const auto lifts = m->displacements({kPi - 0.1, 0.0}, {-kPi + 0.1, 0.0});
  REQUIRE(lifts.size() == 3);
  bool has_short = false;
  for (const auto& d : lifts) {
    if (std::abs(d.x0 - 0.2) < 1e-12) has_short = true;
  }
  CHECK(has_short);
}

TEST_CASE("widened cones admit vectors just outside the base cone") {
  auto base = make_model("minkowski2d");
  auto same = widen_cones(base, 0.0);
  const Metric2 g0 = same->metric_at({0.0, 0.0});
  CHECK(g0.g00 == -1.0);
  CHECK(g0.g11 == 1.0);

  auto wide = widen_cones(base, 0.1);
  const Metric2 gw = wide->metric_at({0.0, 0.0});
  CHECK(gw.g00 == doctest::Approx(-1.1).epsilon(1e-12));
  CHECK(gw.g11 == doctest::Approx(1.0).epsilon(1e-12));

  const Vec2 v{1.0, 1.02};
  CHECK(causal_character(*base, {0.0, 0.0}, v) == CausalCharacter::Spacelike);
  CHECK(causal_character(*wide, {0.0, 0.0}, v) == CausalCharacter::TimelikeFuture);

  CHECK_THROWS_AS(widen_cones(base, -0.5), ArgumentError);
}

TEST_CASE("steep frame matches the flat space example") {
  auto m = make_model("minkowski2d");
  const SteepFrame f = build_steep_frame(*m, {0.0, 0.0}, {0.5});
  CHECK(f.e0.x0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.e0.x1 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(f.e1.x0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.e1.x1 == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(build_steep_frame(*m, {0.0, 0.0}, {0.0}), ArgumentError);
  CHECK_THROWS_AS(build_steep_frame(*m, {0.0, 0.0}, {1.0}), ArgumentError);
}

TEST_CASE("steep frame gram relations hold on every model") {
  const struct {
    const char* id;
    Vec2 p;
  } cases[] = {
      {"minkowski2d", {0.3, -0.2}},
      {"slit_minkowski", {0.4, 1.3}},
      {"singular_wedge", {0.1, 0.7}},
      {"slit_cylinder", {0.0, 2.0}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.id);
    auto m = make_model(c.id);
    for (const double eps : {0.1, 0.5, 0.9}) {
      const SteepFrame f = build_steep_frame(*m, c.p, {eps});
      const Metric2 g = m->metric_at(c.p);
      CHECK(g.eval(f.e0, f.e0) == doctest::Approx(-1.0).epsilon(1e-12));
      CHECK(g.eval(f.e0, f.e1) == doctest::Approx(-1.0).epsilon(1e-12));
      const double want = (1.0 - eps) * (1.0 - eps) - 1.0;
      CHECK(g.eval(f.e1, f.e1) == doctest::Approx(want).epsilon(1e-12));
      CHECK(causal_character(*m, c.p, f.e0) == CausalCharacter::TimelikeFuture);
      CHECK(causal_character(*m, c.p, f.e1) == CausalCharacter::TimelikeFuture);
    }
  }
}

TEST_CASE("curve length rejects what it should") {
  auto m = make_model("minkowski2d");
  CHECK_THROWS_AS(curve_length(*m, {{0.0, 0.0}}), ArgumentError);
  CHECK_THROWS_AS(curve_length(*m, {{0.0, 0.0}, {0.1, 2.0}}), CausalityError);

  auto slit = make_model("slit_minkowski");
  const CausalPath through{{0.0, -1.0}, {0.0, 1.0}};
  CHECK_THROWS_AS(curve_length(*slit, through, 16), DomainError);

  // two-leg detour around the slit, both legs timelike
  const CausalPath around{{0.0, -2.0}, {1.5, 0.0}, {0.0, 2.0}};
  const double len = curve_length(*slit, around, 256);
  const double leg = std::sqrt(4.0 - 2.25);
  CHECK(len == doctest::Approx(2.0 * leg).epsilon(1e-12));

  // reversal gives the same length
  const CausalPath rev{{0.0, 2.0}, {1.5, 0.0}, {0.0, -2.0}};
  CHECK(curve_length(*slit, rev, 256) == doctest::Approx(len).epsilon(1e-12));
}

TEST_CASE("unknown model ids are rejected") {
  CHECK_THROWS_AS(make_model("klein_bottle"), ArgumentError);
}
