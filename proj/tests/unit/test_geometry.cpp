#include "doctest.h"

#include "ksnh/geometry.hpp"
#include "support.hpp"

using namespace ksnh;

namespace {

Model quad_model(const std::string& L, int n, int k, std::vector<std::string> constraints = {}) {
    ModelSpec s;
    s.name = "fixture";
    s.n = n;
    s.k = k;
    s.lagrangian = parse(L);
    for (const auto& c : constraints) s.constraints.push_back(parse(c));
    return Model(std::move(s));
}

}  // namespace

TEST_CASE("free particle jet") {
    const Model m = builtin("free_particle");
    const FieldPoint w{Vec::Zero(2), (Vec(2) << 3, 4).finished()};
    const LagrangianJet J = jet(m, w);
    CHECK((J.dLdv - w.v).norm() == 0.0);
    CHECK((J.hess_vv - Mat::Identity(2, 2)).norm() == 0.0);
    CHECK(J.energy == doctest::Approx(J.L));
    CHECK(J.L == doctest::Approx(12.5));
}

TEST_CASE("cosserat momenta") {
    const Model m = builtin("cosserat");
    std::mt19937_64 rng(11);
    for (int t = 0; t < 10; ++t) {
        const FieldPoint w = testing::random_point(m, rng);
        const LagrangianJet J = jet(m, w);
        CHECK(J.dLdv(7 + 0) == doctest::Approx(-w.q(5)));     // dL/dv1_2 = -q6
        CHECK(J.dLdv(7 + 2) == doctest::Approx(-w.v(7 + 2)));  // dL/dv3_2 = -beta v3_2
        CHECK(J.dLdv(1) == doctest::Approx(w.v(1)));           // dL/dv2_1 = rho v2_1
        CHECK(J.energy == doctest::Approx(w.v.dot(J.dLdv) - J.L));
        CHECK((J.hess_vv - J.hess_vv.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("harmonic jet") {
    const Model m = builtin("harmonic");
    const FieldPoint w{Vec::Constant(1, 2.0), Vec::Constant(1, 3.0)};
    const LagrangianJet J = jet(m, w);
    CHECK(J.dLdq(0) == doctest::Approx(-2));
    CHECK(J.dLdv(0) == doctest::Approx(3));
    CHECK(J.energy == doctest::Approx(6.5));
}

TEST_CASE("regularity") {
    const RegularityReport free = regularity(builtin("free_particle"), FieldPoint{Vec::Zero(2), Vec::Ones(2)});
    CHECK(free.regular);
    CHECK(free.condition == doctest::Approx(1.0));

    const Model c = builtin("cosserat");
    std::mt19937_64 rng(5);
    const RegularityReport cr = regularity(c, testing::random_point(c, rng));
    CHECK_FALSE(cr.regular);
    CHECK(cr.nullity == 8);
    const std::vector<std::string> expect = {"v4_1", "v5_1", "v6_1", "v7_1", "v1_2", "v2_2", "v6_2", "v7_2"};
    CHECK(cr.degenerate == expect);

    const Model s = quad_model("0.5*q1^2*v1_1^2", 1, 1);
    const RegularityReport sr = regularity(s, FieldPoint{Vec::Zero(1), Vec::Ones(1)});
    CHECK_FALSE(sr.regular);
    CHECK(sr.condition == 0.0);
}

TEST_CASE("omega stack") {
    const Model one = quad_model("0.5*v1_1^2", 1, 1);
    const auto w1 = omega_stack(one, FieldPoint{Vec::Zero(1), Vec::Zero(1)});
    Mat expect(2, 2);
    expect << 0, 1, -1, 0;
    CHECK((w1[0] - expect).norm() == 0.0);

    const Model fp = quad_model("0.5*(v1_1^2 + v2_1^2 + v1_2^2 + v2_2^2)", 2, 2);
    const auto w2 = omega_stack(fp, FieldPoint{Vec::Ones(2), Vec::Ones(4)});
    for (int A = 0; A < 2; ++A) {
        Mat e = Mat::Zero(6, 6);
        for (int i = 0; i < 2; ++i) {
            e(i, 2 + A * 2 + i) = 1;
            e(2 + A * 2 + i, i) = -1;
        }
        CHECK((w2[A] - e).norm() == 0.0);
    }

    const Model c = builtin("cosserat");
    std::mt19937_64 rng(9);
    for (int t = 0; t < 10; ++t) {
        const auto W = omega_stack(c, testing::random_point(c, rng));
        for (const Mat& M : W) {
            CHECK((M + M.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
            CHECK(M.bottomRightCorner(14, 14).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("q-q block of omega for a magnetic-type Lagrangian") {
    // L = 0.5 v^2 + q1 v2_1: d2L/dq1 dv2 = 1, so omega(q1, q2) = 0 - 1 = -1
    const Model m = quad_model("0.5*(v1_1^2 + v2_1^2) + q1*v2_1", 2, 1);
    const auto W = omega_stack(m, FieldPoint{Vec::Zero(2), Vec::Zero(2)});
    CHECK(W[0](0, 1) == doctest::Approx(-1.0));
    CHECK(W[0](1, 0) == doctest::Approx(1.0));
}

TEST_CASE("constraint package on identity Hessian") {
    const Model m = quad_model("0.5*(v1_1^2 + v2_1^2)", 2, 1, {"v1_1"});
    const ConstraintPackage c = constraint_package(m, FieldPoint{Vec::Zero(2), Vec::Zero(2)});
    CHECK(c.eta(0, 0) == 1.0);
    CHECK(c.eta(0, 1) == 0.0);
    CHECK(c.Z(0, 0) == doctest::Approx(1.0));
    CHECK(c.Z(0, 1) == doctest::Approx(0.0));
    CHECK(c.C(0, 0) == doctest::Approx(1.0));
    CHECK(c.compatible);

    const Model two = quad_model("0.5*(v1_1^2 + v2_1^2 + v3_1^2)", 3, 1, {"v1_1", "v2_1"});
    const ConstraintPackage c2 = constraint_package(two, FieldPoint{Vec::Zero(3), Vec::Zero(3)});
    CHECK((c2.C - Mat::Identity(2, 2)).norm() <= 1e-14);
    CHECK((c2.C * c2.Cinv - Mat::Identity(2, 2)).norm() <= 1e-10);
}

TEST_CASE("cosserat chetaev forms differ from the explicit table in the second block") {
    const Model c = builtin("cosserat");
    std::mt19937_64 rng(21);
    for (int t = 0; t < 10; ++t) {
        const FieldPoint w = testing::random_point(c, rng);
        const ConstraintForms f = constraint_forms(c, w);
        const Mat ch = chetaev_forms(f, 7);
        const double v3_1 = w.v(2), v1_2 = w.v(7), v2_2 = w.v(8);
        Mat expect = Mat::Zero(2, 14);
        expect(0, 0) = 1;
        expect(0, 2) = v2_2;
        expect(0, 7 + 1) = v3_1;
        expect(1, 1) = 1;
        expect(1, 2) = -v1_2;
        expect(1, 7 + 0) = -v3_1;
        CHECK((ch - expect).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((f.eta.leftCols(7) - ch.leftCols(7)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(f.eta.rightCols(7).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("omega duality and Z verticality") {
    std::mt19937_64 rng(4);
    for (const char* name : {"knife_edge", "cosserat_regular"}) {
        const Model m = load_model(testing::model_path(name));
        for (int t = 0; t < 10; ++t) {
            const FieldPoint w = testing::random_point(m, rng);
            const LagrangianJet J = jet(m, w);
            const ConstraintPackage c = constraint_package(m, w, J);
            const Mat Zc = z_columns(m, c);
            CHECK(Zc.topRows(m.n()).norm() == 0.0);
            const auto W = omega_stack(m, J);
            for (int a = 0; a < m.m(); ++a) {
                for (int A = 0; A < m.k(); ++A) {
                    const Vec contraction = W[A].transpose() * Zc.col(a);
                    Vec expect = Vec::Zero(m.dim());
                    expect.head(m.n()) = -c.eta.row(a).segment(A * m.n(), m.n()).transpose();
                    CHECK((contraction - expect).cwiseAbs().maxCoeff() <= 1e-10);
                }
                CHECK((J.hess_vv * c.Z.row(a).transpose() - c.eta.row(a).transpose()).norm() <= 1e-10);
            }
        }
    }
}

TEST_CASE("singular Hessian and dependent forms are reported") {
    CHECK_THROWS_AS(constraint_package(builtin("cosserat"), FieldPoint{Vec::Zero(7), Vec::Ones(14)}),
                    NumericalError);
    const Model dep = quad_model("0.5*(v1_1^2 + v2_1^2 + v3_1^2)", 3, 1, {"v1_1", "2*v1_1"});
    CHECK_THROWS_AS(constraint_package(dep, FieldPoint{Vec::Zero(3), Vec::Zero(3)}), NumericalError);
}

TEST_CASE("incompatibility is a flag, not an exception") {
    // indefinite metric with a null constraint direction: C = eta H^-1 eta^T = 1 - 1 = 0
    const Model m = quad_model("0.5*(v1_1^2 - v2_1^2)", 2, 1, {"v1_1 + v2_1"});
    const ConstraintPackage c = constraint_package(m, FieldPoint{Vec::Zero(2), Vec::Zero(2)});
    CHECK_FALSE(c.compatible);
    CHECK(c.c_condition == 0.0);
}

TEST_CASE("energy gradient matches finite differences") {
    const Model m = load_model(testing::model_path("cosserat_regular"));
    std::mt19937_64 rng(8);
    const FieldPoint w = testing::random_point(m, rng);
    const Vec dE = energy_gradient(jet(m, w), w);
    const Vec x = w.pack();
    const double h = 1e-6;
    for (int s = 0; s < m.dim(); ++s) {
        Vec xp = x, xm = x;
        xp(s) += h;
        xm(s) -= h;
        const double fd = (jet(m, FieldPoint::unpack(xp, 3, 2)).energy - jet(m, FieldPoint::unpack(xm, 3, 2)).energy) / (2 * h);
        CHECK(dE(s) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("velocity projection lands on the constraint set") {
    const Model m = builtin("knife_edge");
    std::mt19937_64 rng(2);
    FieldPoint w = testing::random_point(m, rng);
    CHECK(project_velocities(m, w) <= 1e-12);
}
