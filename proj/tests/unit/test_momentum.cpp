#include "doctest.h"

#include <cmath>

#include "ksnh/geometry.hpp"
#include "ksnh/momentum.hpp"
#include "support.hpp"

using namespace ksnh;

namespace {

SimConfig ring(int M, double h, int steps) {
    SimConfig c;
    c.t_end = h * steps;
    c.h = h;
    c.nodes = M;
    c.length = 2.0 * M_PI;
    c.boundary = Boundary::Periodic;
    for (const char* e : {"cos(s)", "sin(s)", "0", "0", "0", "0", "0"}) c.q0.push_back(parse(e));
    for (const char* e : {"-0.1*(1 + 0.5*sin(s))*cos(s)", "-0.1*(1 + 0.5*sin(s))*sin(s)", "0.1*(1 + 0.5*sin(s))",
                          "0", "0", "0", "0"})
        c.v0.push_back(parse(e));
    return c;
}

}  // namespace

TEST_CASE("Cosserat section annihilates the explicit forms") {
    const Model m = load_model(testing::model_path("cosserat"));
    const int s = require_section(m, "main");
    std::mt19937_64 rng(7);
    std::vector<FieldPoint> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(testing::random_point(m, rng, -2.0, 2.0));
    const AnnihilationReport r = annihilation_check(m, s, pts);
    CHECK(r.pass);
    CHECK(r.points == 50);
    CHECK(r.max_contraction < 1e-14);
    CHECK_THROWS_AS(require_section(m, "nope"), SchemaError);
}

TEST_CASE("translation is not admissible for a Chetaev velocity constraint") {
    ModelSpec spec;
    spec.name = "stop";
    spec.n = 2;
    spec.k = 1;
    spec.lagrangian = parse("0.5*(v1_1^2 + v2_1^2)");
    spec.constraints = {parse("v1_1")};
    spec.symmetries.push_back({"e1", {constant(1.0), constant(0.0)}});
    spec.symmetries.push_back({"e2", {constant(0.0), constant(1.0)}});
    const Model m(std::move(spec));
    const std::vector<FieldPoint> pts{FieldPoint{Vec::Zero(2), Vec::Zero(2)}};
    const AnnihilationReport bad = annihilation_check(m, 0, pts);
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_contraction == 1.0);
    CHECK(annihilation_check(m, 1, pts).pass);
    CHECK(annihilation_check(builtin("free_particle"), 0, pts).pass);
}

TEST_CASE("momentum components") {
    const Model fp = builtin("free_particle");
    const FieldPoint w{Vec::Zero(2), (Vec(2) << 0.25, -3.0).finished()};
    CHECK(momentum_components(fp, w, require_section(fp, "x"))(0) == 0.25);

    const Model m = load_model(testing::model_path("cosserat"));
    const int s = require_section(m, "main");
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const FieldPoint p = testing::random_point(m, rng);
        const double rho = 1.0, alpha = 1.0, beta = 1.0, R = 1.0;
        auto v = [&](int i, int A) { return p.v((A - 1) * 7 + i - 1); };
        const double J1 = -rho * R * v(1, 1) * v(2, 2) + rho * R * v(2, 1) * v(1, 2) + alpha * v(3, 1);
        const double J2 = p.q(5) * R * v(2, 2) - p.q(6) * R * v(1, 2) - beta * v(3, 2);
        const Vec J = momentum_components(m, p, s);
        CHECK(std::abs(J(0) - J1) < 1e-13);
        CHECK(std::abs(J(1) - J2) < 1e-13);
    }
}

TEST_CASE("momentum is linear in the section") {
    ModelSpec spec = builtin("knife_edge").spec();
    spec.symmetries = {{"a", {parse("q2"), parse("1"), parse("v3_1")}},
                       {"b", {parse("sin(q1)"), parse("-2"), parse("q3^2")}},
                       {"c", {parse("2*q2 - 3*sin(q1)"), parse("8"), parse("2*v3_1 - 3*q3^2")}}};
    const Model m(std::move(spec));
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10; ++t) {
        const FieldPoint w = testing::random_point(m, rng);
        const double a = momentum_components(m, w, 0)(0), b = momentum_components(m, w, 1)(0);
        CHECK(std::abs(momentum_components(m, w, 2)(0) - (2 * a - 3 * b)) < 1e-14);
    }
}

TEST_CASE("complete lift detects symmetries of L") {
    const Model fp = builtin("free_particle");
    std::mt19937_64 rng(5);
    const FieldPoint w = testing::random_point(fp, rng);
    CHECK(lift_defect(fp, 0, w) == 0.0);

    ModelSpec spec;
    spec.name = "planar";
    spec.n = 2;
    spec.k = 1;
    spec.lagrangian = parse("0.5*(v1_1^2 + v2_1^2) - 0.5*(q1^2 + q2^2)");
    spec.symmetries = {{"rot", {parse("-q2"), parse("q1")}}, {"shift", {parse("1"), parse("0")}}};
    const Model m(std::move(spec));
    for (int t = 0; t < 10; ++t) {
        const FieldPoint p = testing::random_point(m, rng);
        CHECK(std::abs(lift_defect(m, 0, p)) < 1e-14);
        CHECK(std::abs(lift_defect(m, 1, p) + p.q(0)) < 1e-14);
    }
}

TEST_CASE("free particle momentum is exactly conserved") {
    const Model m = builtin("free_particle");
    SimConfig c;
    c.t_end = 1.0;
    c.h = 0.01;
    c.q0 = {constant(0.0), constant(1.0)};
    c.v0 = {constant(0.3), constant(-0.7)};
    const FieldSolution sol = simulate(m, c);
    const MomentumResidual r = momentum_residual(m, sol, require_section(m, "x"));
    CHECK(r.residual.size() == static_cast<std::size_t>(sol.steps() - 2));
    CHECK(r.max < 1e-10);
    CHECK(r.j_drift == 0.0);
}

TEST_CASE("knife edge rotation momentum") {
    // rotation about the blade axis annihilates the constraint form; L is kinetic, so J = thetadot is conserved
    const Model m = builtin("knife_edge");
    SimConfig c;
    c.t_end = 2.0;
    c.h = 1e-3;
    c.q0 = {constant(0.0), constant(0.0), constant(0.0)};
    c.v0 = {constant(1.0), constant(0.0), constant(0.7)};
    const FieldSolution sol = simulate(m, c);
    const int s = require_section(m, "rotation");
    std::vector<FieldPoint> pts;
    for (int st = 0; st < sol.steps(); st += 100) pts.push_back(sol.point(st));
    CHECK(annihilation_check(m, s, pts).pass);
    const MomentumResidual r = momentum_residual(m, sol, s);
    CHECK(r.j_drift < 1e-8);
    CHECK(r.max < 1e-8);
}

TEST_CASE("Cosserat momentum residual converges under refinement") {
    const Model m = load_model(testing::model_path("cosserat"));
    const int s = require_section(m, "main");
    const FieldSolution coarse = simulate(m, ring(24, 4e-3, 100));
    const FieldSolution fine = simulate(m, ring(48, 2e-3, 200));
    REQUIRE(coarse.complete);
    REQUIRE(fine.complete);
    const MomentumResidual rc = momentum_residual(m, coarse, s), rf = momentum_residual(m, fine, s);
    MESSAGE("coarse max " << rc.max << ", fine max " << rf.max);
    CHECK(rc.max / rf.max >= 3.0);
}

TEST_CASE("residual needs enough samples") {
    const Model m = builtin("free_particle");
    FieldSolution sol;
    sol.n = 2;
    CHECK_THROWS_AS(momentum_residual(m, sol, 0), SchemaError);
}
