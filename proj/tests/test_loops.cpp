#include "oracle.hpp"

#include <geoloop/errors.hpp>
#include <geoloop/loops.hpp>
#include <geoloop/sampling.hpp>

#include <doctest.h>

#include <cmath>

using namespace geoloop;

namespace {

constexpr double kE = 2.718281828459045;
constexpr double kE2 = 7.3890560989306495;

double dist(const Point& p, const Vec& q) { return (p.coords - q).norm(); }
double dist(const Point& p, const Point& q) { return (p.coords - q.coords).norm(); }

LoopContext context(const char* name, double radius) {
  const CatalogEntry e = catalog(name);
  return LoopContext(e.connection, e.center, radius);
}

/// Constant coefficients with torsion: Gamma^0_01 != Gamma^0_10.
Connection twisted() {
  return Connection("twisted", 2, [](const Vec&) {
    Christoffel g(2);
    g(0, 0, 1) = 0.3;
    g(0, 1, 0) = -0.1;
    g(1, 0, 0) = 0.2;
    g(1, 1, 1) = -0.25;
    return g;
  }, 1.0);
}

}  // namespace

TEST_CASE("flat loop is chart translation") {
  const LoopContext ctx = context("flat2", 5.0);
  CHECK(dist(loop_multiply(ctx, Point{1.0, 0.0}, Point{0.0, 2.0}), make_vec({1.0, 2.0})) < 1e-12);
  CHECK(dist(loop_add(ctx, Point{1.0, 0.0}, Point{0.0, 2.0}), make_vec({1.0, 2.0})) < 1e-12);
  CHECK(dist(loop_scale(ctx, 0.5, Point{2.0, 2.0}), make_vec({1.0, 1.0})) < 1e-12);
  CHECK(dist(left_divide(ctx, Point{1.0, 0.5}, Point{-1.0, 2.0}), make_vec({-2.0, 1.5})) < 1e-10);
  CHECK(dist(right_divide(ctx, Point{-1.0, 2.0}, Point{1.0, 0.5}), make_vec({-2.0, 1.5})) < 1e-10);
  for (const Point& x : {Point{0.3, 0.1}, Point{-2.0, 1.0}})
    CHECK((left_fundamental_field(ctx, x) - Mat::Identity(2, 2)).norm() < 1e-10);
  CHECK(dist(loop_exponential(ctx, make_vec({1.0, 2.0})).end, make_vec({1.0, 2.0})) < 1e-10);
  CHECK(dist(canonical_sum(ctx, Point{1.0, 0.0}, Point{0.0, 2.0}), make_vec({1.0, 2.0})) < 1e-9);
  CHECK(monoassociativity_residual(ctx, 0.3, 0.7, Point{1.0, -1.0}) < 1e-12);
}

TEST_CASE("neutral axioms on every catalog entry") {
  BallSampler rng(8);
  for (auto name : catalog_names()) {
    const CatalogEntry e = catalog(name);
    const double r = std::min(0.3, e.connection.trust_radius());
    const LoopContext ctx(e.connection, e.center, r);
    for (int i = 0; i < 4; ++i) {
      const Point x(rng.point(e.center.coords, r));
      CHECK_MESSAGE(dist(loop_multiply(ctx, e.center, x), x) < 1e-9, name);
      CHECK_MESSAGE(dist(loop_multiply(ctx, x, e.center), x) < 1e-9, name);
      CHECK_MESSAGE(dist(loop_scale(ctx, 1.0, x), x) < 1e-9, name);
      CHECK_MESSAGE(dist(loop_scale(ctx, 0.0, x), e.center) < 1e-12, name);
    }
  }
}

TEST_CASE("half-plane scaling along the vertical geodesic") {
  const LoopContext ctx(catalog("hyperbolic-halfplane").connection, Point{0.0, 1.0}, 0.5);
  // The loop radius bounds arguments, not results: e^2 lies far outside.
  const CatalogEntry e = catalog("hyperbolic-halfplane");
  const OdularStructure s(e.connection);
  const Point z2 = s.scale(2.0, Point{0.0, 1.0}, Point{0.0, kE});
  CHECK(std::abs(z2.coords(0)) < 1e-9);
  CHECK(z2.coords(1) == doctest::Approx(kE2).epsilon(1e-9));
  CHECK_THROWS_AS(loop_scale(ctx, 2.0, Point{0.0, kE}), PreconditionError);
}

TEST_CASE("sphere operations agree with the half-step oracle") {
  const CatalogEntry e = catalog("sphere2-stereographic");
  const LoopContext ctx(e.connection, e.center, 0.3);
  const Vec a = e.center.coords, x = make_vec({0.2, 0.0}), y = make_vec({0.0, 0.2});
  CHECK(dist(loop_multiply(ctx, Point(x), Point(y)), oracle::multiply(e.connection, x, a, y)) < 1e-7);
  CHECK(dist(loop_add(ctx, Point(x), Point(y)), oracle::add(e.connection, x, a, y)) < 1e-7);
  const Mat field = left_fundamental_field(ctx, Point(x));
  CHECK((field - oracle::left_field(e.connection, x, a)).norm() < 1e-6);
}

TEST_CASE("loop multiplication is not associative on the sphere but is on flat charts") {
  const CatalogEntry e = catalog("sphere2-stereographic");
  const LoopContext ctx(e.connection, e.center, 0.3);
  const Point x{0.08, 0.0}, y{0.0, 0.08}, z{-0.05, 0.05};
  const Point left = loop_multiply(ctx, loop_multiply(ctx, x, y), z);
  const Point right = loop_multiply(ctx, x, loop_multiply(ctx, y, z));
  CHECK(dist(left, right) > 1e-6);
}

TEST_CASE("linear structure: Lambda is commutative and associative, omega is homogeneous and distributive") {
  const LoopContext ctx = context("poly-perturbed2", 0.3);
  const Point x{0.05, 0.04}, y{-0.06, 0.03}, z{0.02, -0.07};
  CHECK(dist(loop_add(ctx, x, y), loop_add(ctx, y, x)) < 1e-10);
  CHECK(dist(loop_add(ctx, loop_add(ctx, x, y), z), loop_add(ctx, x, loop_add(ctx, y, z))) < 1e-8);
  CHECK(dist(loop_scale(ctx, 0.5, loop_scale(ctx, -1.5, z)), loop_scale(ctx, -0.75, z)) < 1e-8);
  CHECK(dist(loop_scale(ctx, 1.5, loop_add(ctx, x, y)),
             loop_add(ctx, loop_scale(ctx, 1.5, x), loop_scale(ctx, 1.5, y))) < 1e-8);
}

TEST_CASE("divisions invert multiplication") {
  BallSampler rng(13);
  // Quotients of points at radius 0.2 can reach 0.4 from the neutral.
  const LoopContext ctx = context("sphere2-stereographic", 0.6);
  for (int i = 0; i < 3; ++i) {
    const Point x(rng.point(ctx.neutral().coords, 0.2));
    const Point z(rng.point(ctx.neutral().coords, 0.2));
    const Point y = left_divide(ctx, x, z);
    CHECK(dist(loop_multiply(ctx, x, y), z) < 1e-8);
    const Point w = right_divide(ctx, z, x);
    CHECK(dist(loop_multiply(ctx, w, x), z) < 1e-8);
  }
  const Point x{0.1, -0.05}, y{0.02, 0.12};
  CHECK(dist(left_divide(ctx, x, loop_multiply(ctx, x, y)), y) < 1e-8);
}

TEST_CASE("fundamental fields at the neutral are the identity") {
  for (auto name : catalog_names()) {
    const CatalogEntry e = catalog(name);
    const LoopContext ctx(e.connection, e.center, std::min(0.3, e.connection.trust_radius()));
    const int n = e.connection.dim();
    CHECK_MESSAGE((left_fundamental_field(ctx, e.center) - Mat::Identity(n, n)).norm() < 1e-8, name);
    CHECK_MESSAGE((right_fundamental_field(ctx, e.center) - Mat::Identity(n, n)).norm() < 1e-8, name);
  }
}

TEST_CASE("loop exponential") {
  SUBCASE("zero vector stays at the neutral") {
    const LoopContext ctx = context("sphere2-stereographic", 0.3);
    CHECK(loop_exponential(ctx, make_vec({0.0, 0.0})).end.coords == ctx.neutral().coords);
  }
  SUBCASE("agrees with the geodesic exponential") {
    for (const char* name : {"sphere2-stereographic", "hyperbolic-halfplane"}) {
      const LoopContext ctx = context(name, 0.3);
      const Vec x = make_vec({0.12, -0.09});
      const LoopExponential le = loop_exponential(ctx, x);
      CHECK(le.path.size() == static_cast<std::size_t>(kLoopExponentialSteps) + 1);
      CHECK(dist(le.end, exp_map(ctx.connection(), TangentVector{ctx.neutral(), x})) < 1e-6);
    }
  }
  SUBCASE("leaving the loop radius is a domain exit") {
    const LoopContext ctx = context("sphere2-stereographic", 0.1);
    CHECK_THROWS_AS(loop_exponential(ctx, make_vec({0.5, 0.0})), DomainExitError);
  }
}

TEST_CASE("canonical operations coincide with omega and Lambda on the sphere") {
  const LoopContext ctx = context("sphere2-stereographic", 0.3);
  const Point x{0.1, 0.04};
  CHECK(dist(canonical_scalar(ctx, 1.0, x), x) < 1e-9);
  for (double t : {-0.5, 0.5, 2.0}) CHECK(dist(canonical_scalar(ctx, t, x), loop_scale(ctx, t, x)) < 1e-6);
  const Point y{-0.03, 0.08};
  CHECK(dist(canonical_sum(ctx, x, y), loop_add(ctx, x, y)) < 1e-6);
  CHECK(loop_logarithm(ctx, ctx.neutral()).norm() == 0.0);
}

TEST_CASE("monoassociativity") {
  const LoopContext ctx = context("sphere2-stereographic", 0.5);
  const Point x{0.3, 0.0};
  CHECK(monoassociativity_residual(ctx, 0.3, 0.4, x) < 1e-7);
  CHECK(monoassociativity_residual(ctx, 0.0, 0.4, x) < 1e-9);
  CHECK(monoassociativity_residual(ctx, 0.3, 0.0, x) < 1e-9);
}

TEST_CASE("connection recovered from the loop") {
  SUBCASE("flat") {
    const OdularStructure s(catalog("flat2").connection);
    CHECK(reconstruct_connection(s, Point{0.4, -1.0}).max_abs() < 1e-8);
  }
  SUBCASE("curved catalog entries") {
    const std::pair<const char*, Point> cases[] = {{"hyperbolic-halfplane", Point{0.0, 1.0}},
                                                   {"sphere2-stereographic", Point{0.2, 0.1}},
                                                   {"poly-perturbed2", Point{-0.3, 0.2}}};
    for (const auto& [name, a] : cases) {
      const OdularStructure s(catalog(name).connection);
      const Christoffel rebuilt = reconstruct_connection(s, a);
      CHECK_MESSAGE(rebuilt.max_abs_diff(eval_gamma(s.connection(), a)) < 5e-4, name);
    }
  }
  SUBCASE("torsion survives the reconstruction") {
    const OdularStructure s(twisted());
    const Christoffel rebuilt = reconstruct_connection(s, Point{0.0, 0.0});
    CHECK(rebuilt(0, 0, 1) == doctest::Approx(0.3).epsilon(1e-5));
    CHECK(rebuilt(0, 1, 0) == doctest::Approx(-0.1).epsilon(1e-5));
    CHECK(rebuilt.max_abs_diff(eval_gamma(s.connection(), Point{0.0, 0.0})) < 1e-5);
  }
  SUBCASE("report") {
    const OdularStructure s(catalog("sphere2-stereographic").connection);
    const ResidualReport r = verify_connection_reconstruction(s, {Point{0.1, 0.1}, Point{-0.2, 0.05}});
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].id == "connection-rebuild.max-error");
    CHECK(r.entries[0].pass);
    CHECK(r.entries[0].tolerance == 5e-4);
  }
}

TEST_CASE("interpolated reconstruction reproduces lattice nodes") {
  const OdularStructure s(catalog("poly-perturbed2").connection);
  const Point anchor{0.0, 0.0};
  const Connection rebuilt = interpolated_reconstruction(s, anchor, 0.05);
  CHECK(rebuilt.dim() == 2);
  const Point node{0.05, -0.1};
  CHECK(eval_gamma(rebuilt, node).max_abs_diff(reconstruct_connection(s, node)) < 1e-12);
  // Between nodes the interpolant is close to the true coefficients.
  CHECK(eval_gamma(rebuilt, Point{0.023, 0.041}).max_abs_diff(eval_gamma(s.connection(), Point{0.023, 0.041})) < 1e-3);
}

TEST_CASE("structure rebuilt from the recovered connection") {
  const OdularStructure flat(catalog("flat2").connection);
  const std::vector<StructureSample> samples = {{Point{0.1, 0.0}, Point{0.0, 0.1}, 0.5},
                                                {Point{-0.1, 0.05}, Point{0.07, 0.02}, -1.0}};
  const ResidualReport r = verify_structure_reconstruction(flat, Point{0.0, 0.0}, samples);
  CHECK(r.entries.size() == 3);
  for (const auto& e : r.entries) CHECK(e.residual < 1e-8);
  const OdularStructure poly(catalog("poly-perturbed2").connection);
  const ResidualReport rp = verify_structure_reconstruction(poly, Point{0.0, 0.0}, samples);
  for (const auto& e : rp.entries) CHECK_MESSAGE(e.pass, e.id);
}

TEST_CASE("loop context preconditions") {
  const Connection c = catalog("hyperbolic-halfplane").connection;
  CHECK_THROWS_AS(LoopContext(c, Point{0.0, 1.0}, 0.6), PreconditionError);
  CHECK_THROWS_AS(LoopContext(c, Point{0.0, 1.0}, 0.0), PreconditionError);
  CHECK_THROWS_AS(LoopContext(c, Point{0.0, -1.0}, 0.2), PreconditionError);
  const LoopContext ctx(c, Point{0.0, 1.0}, 0.2);
  CHECK_THROWS_AS(loop_multiply(ctx, Point{0.3, 1.0}, Point{0.0, 1.0}), PreconditionError);
  CHECK_THROWS_AS(loop_add(ctx, Point{0.0, 1.0}, Point{0.0, 1.0, 0.0}), PreconditionError);
  CHECK_THROWS_AS(left_fundamental_field(ctx, Point{0.0, 1.0}, 0.0), PreconditionError);
}
