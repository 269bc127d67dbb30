#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ksnh/dynamics.hpp"
#include "ksnh/geometry.hpp"
#include "ksnh/projector.hpp"
#include "support.hpp"

using namespace ksnh;

namespace {

SimConfig config(double t_end, double h, std::vector<std::string> q, std::vector<std::string> v) {
    SimConfig c;
    c.t_end = t_end;
    c.h = h;
    for (const auto& e : q) c.q0.push_back(parse(e));
    for (const auto& e : v) c.v0.push_back(parse(e));
    return c;
}

double energy_drift(const FieldSolution& sol) {
    double d = 0.0;
    for (int st = 0; st < sol.steps(); ++st) d = std::max(d, std::abs(sol.energy_total(st) - sol.energy_total(0)));
    return d;
}

Model wave() {
    ModelSpec s;
    s.name = "wave";
    s.n = 1;
    s.k = 2;
    s.lagrangian = parse("0.5*v1_1^2 - 0.5*v1_2^2");
    return Model(std::move(s));
}

}  // namespace

TEST_CASE("free particle moves in a straight line") {
    const Model m = builtin("free_particle");
    const FieldSolution sol = simulate(m, config(2.0, 0.01, {"1", "2"}, {"0.5", "-1"}));
    REQUIRE(sol.complete);
    REQUIRE(sol.steps() == 201);
    const FieldPoint w = sol.point(sol.steps() - 1);
    CHECK(sol.t.back() == doctest::Approx(2.0));
    CHECK(std::abs(w.q(0) - 2.0) < 1e-12);
    CHECK(std::abs(w.q(1) - 0.0) < 1e-12);
    CHECK(std::abs(w.v(0) - 0.5) < 1e-14);
}

TEST_CASE("harmonic oscillator conserves energy at RK4 order") {
    const Model m = builtin("harmonic");
    const FieldSolution sol = simulate(m, config(10.0, 1e-3, {"1"}, {"0"}));
    REQUIRE(sol.complete);
    CHECK(energy_drift(sol) < 1e-6);
    const FieldPoint w = sol.point(sol.steps() - 1);
    CHECK(std::abs(w.q(0) - std::cos(10.0)) < 1e-10);
}

TEST_CASE("knife edge follows the circular closed form") {
    const Model m = builtin("knife_edge");
    SimConfig c = config(2.0, 1e-3, {"0", "0", "0"}, {"1", "0", "1"});
    const FieldSolution sol = simulate(m, c);
    REQUIRE(sol.complete);
    CHECK(sol.phi_max() < 1e-8);
    CHECK(energy_drift(sol) < 1e-8);
    for (int st = 0; st < sol.steps(); st += 250) {
        const double t = sol.t[st];
        const FieldPoint w = sol.point(st);
        CHECK(std::abs(w.q(0) - std::sin(t)) < 1e-9);
        CHECK(std::abs(w.q(1) - (1.0 - std::cos(t))) < 1e-9);
        CHECK(std::abs(w.q(2) - t) < 1e-12);
        // lambda = thetadot (cos theta xdot + sin theta ydot) = 1 along this path
        CHECK(std::abs(sol.lambda[st] - 1.0) < 1e-8);
    }
}

TEST_CASE("stored multipliers satisfy the constrained Euler-Lagrange equations") {
    const Model m = builtin("knife_edge");
    const FieldSolution sol = simulate(m, config(1.0, 1e-2, {"0.3", "-0.2", "0.4"}, {"cos(0.4)", "sin(0.4)", "0.7"}));
    REQUIRE(sol.complete);
    for (int st = 0; st < sol.steps(); ++st) {
        const FieldPoint w = sol.point(st);
        const LagrangianJet J = jet(m, w);
        const ConstraintForms f = constraint_forms(m, w);
        Mat accel(1, 3), lambda(1, 1);
        for (int i = 0; i < 3; ++i) accel(0, i) = sol.accel[st * 3 + i];
        lambda(0, 0) = sol.lambda[st];
        CHECK(el_residual(m, J, w, accel, f.eta, lambda).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("stored velocities are the time derivative of stored positions") {
    const Model m = builtin("knife_edge");
    const FieldSolution sol = simulate(m, config(1.0, 1e-3, {"0", "0", "0"}, {"1", "0", "2"}));
    double worst = 0.0;
    for (int st = 1; st + 1 < sol.steps(); ++st)
        for (int i = 0; i < 3; ++i) {
            const double fd = (sol.q[(st + 1) * 3 + i] - sol.q[(st - 1) * 3 + i]) / (2e-3);
            worst = std::max(worst, std::abs(fd - sol.v[st * 3 + i]));
        }
    CHECK(worst < 1e-5);
}

TEST_CASE("infeasible initial data is rejected") {
    const Model m = builtin("knife_edge");
    CHECK_THROWS_AS(simulate(m, config(1.0, 1e-3, {"0", "0", "0"}, {"0", "1", "0"})), SchemaError);
}

TEST_CASE("sim config validation names the field") {
    const auto bad = nlohmann::json::parse(R"({"t_end": 1, "h": 0, "initial": {"q": [0]}})");
    try {
        sim_config_from_json(bad);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("'h'") != std::string::npos);
    }
    CHECK_THROWS_AS(sim_config_from_json(nlohmann::json::parse(R"({"h": 1e-3, "initial": {"q": [0]}})")),
                    SchemaError);
    CHECK_THROWS_AS(sim_config_from_json(nlohmann::json::parse(
                        R"({"t_end": 1, "h": 1e-3, "spatial": {"nodes": 3, "length": 1}, "initial": {"q": [0]}})")),
                    SchemaError);
    CHECK_THROWS_AS(sim_config_from_json(nlohmann::json::parse(
                        R"({"t_end": 1, "h": 1e-3, "spatial": {"nodes": 9, "length": 1, "boundary": "x"},
                            "initial": {"q": [0]}})")),
                    SchemaError);
    const SimConfig ok = sim_config_from_json(nlohmann::json::parse(
        R"({"t_end": 2, "h": 0.01, "store_every": 10, "initial": {"q": ["pi/2", 1], "v": [0, "2*pi"]}})"));
    CHECK(ok.store_every == 10);
    CHECK(ok.q0.size() == 2);
}

TEST_CASE("stencils are second order and exact on quadratics") {
    for (Boundary bc : {Boundary::Free, Boundary::Clamped}) {
        Stencil st{11, 0.1, bc};
        Vec f(11), d(11);
        for (int j = 0; j < 11; ++j) {
            const double s = 0.1 * j;
            f(j) = 3.0 * s * s - s + 2.0;
            d(j) = 6.0 * s - 1.0;
        }
        CHECK((st.d1(f) - d).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((st.d2(f) - Vec::Constant(11, 6.0)).cwiseAbs().maxCoeff() < 1e-9);
    }
    const int M = 32;
    const auto s = spatial_grid(M, 2.0 * M_PI, Boundary::Periodic);
    CHECK(s.back() == doctest::Approx(2.0 * M_PI * (M - 1) / M));
    Stencil st{M, s[1] - s[0], Boundary::Periodic};
    Vec f(M);
    for (int j = 0; j < M; ++j) f(j) = std::sin(s[j]);
    const double ds = s[1];
    const Vec d = st.d1(f);
    for (int j = 0; j < M; ++j) CHECK(std::abs(d(j) - std::sin(ds) / ds * std::cos(s[j])) < 1e-14);
}

TEST_CASE("role detection on rod-type models") {
    const FieldRoles r = detect_roles(load_model(testing::model_path("cosserat")));
    CHECK(r.evolution == std::vector<int>{0, 1, 2});
    REQUIRE(r.lowered.size() == 2);
    CHECK(r.lowered[0].a == 3);
    CHECK(r.lowered[0].b == 0);
    CHECK(r.lowered[0].c == 5);
    CHECK(r.lowered[1].a == 4);
    CHECK(r.lowered[1].b == 1);
    CHECK(r.lowered[1].c == 6);

    CHECK(detect_roles(wave()).lowered.empty());
    CHECK_THROWS_AS(detect_roles(builtin("harmonic")), SchemaError);

    ModelSpec chetaev = load_model(testing::model_path("cosserat")).spec();
    chetaev.form_mode = FormMode::Chetaev;
    chetaev.forms.clear();
    try {
        detect_roles(Model(std::move(chetaev)));
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("spatial component") != std::string::npos);
    }
}

TEST_CASE("wave equation follows the discrete dispersion relation") {
    const Model m = wave();
    SimConfig c = config(1.0, 1e-3, {"sin(s)"}, {"0"});
    c.nodes = 32;
    c.length = 2.0 * M_PI;
    c.boundary = Boundary::Periodic;
    const FieldSolution sol = simulate(m, c);
    REQUIRE(sol.complete);
    const double ds = 2.0 * M_PI / 32;
    const double omega = 2.0 / ds * std::sin(ds / 2.0);
    double worst = 0.0;
    for (int j = 0; j < 32; ++j) {
        const FieldPoint w = sol.point(sol.steps() - 1, j);
        worst = std::max(worst, std::abs(w.q(0) - std::cos(omega) * std::sin(sol.s[j])));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("straight Cosserat rod at rest is an equilibrium") {
    const Model m = load_model(testing::model_path("cosserat"));
    SimConfig c = config(0.1, 1e-3, {"s", "0", "0", "1", "0", "0", "0"}, {"0", "0", "0", "0", "0", "0", "0"});
    c.nodes = 16;
    c.length = 1.0;
    const FieldSolution sol = simulate(m, c);
    REQUIRE(sol.complete);
    double moved = 0.0, acc = 0.0, lam = 0.0;
    for (int j = 0; j < sol.nodes(); ++j) {
        const FieldPoint a = sol.point(0, j), b = sol.point(sol.steps() - 1, j);
        moved = std::max(moved, (a.q - b.q).cwiseAbs().maxCoeff());
    }
    for (double x : sol.accel) acc = std::max(acc, std::abs(x));
    for (double x : sol.lambda) lam = std::max(lam, std::abs(x));
    CHECK(moved == 0.0);
    CHECK(acc == 0.0);
    // x = s is not exactly representable on the grid; fourth differences see the rounding
    CHECK(lam < 1e-10);
}

TEST_CASE("uniformly spinning straight rod translates rigidly") {
    // x' = 1, y' = 0 and theta_t = omega reduce the rod equations to theta_tt = 0, xdot = 0, ydot = R omega
    const Model m = load_model(testing::model_path("cosserat"));
    const double omega = 0.5, T = 0.5;
    SimConfig c = config(T, 1e-3, {"s", "0", "0", "0", "0", "0", "0"}, {"0", "0.5", "0.5", "0", "0", "0", "0"});
    c.nodes = 12;
    c.length = 1.0;
    const FieldSolution sol = simulate(m, c);
    REQUIRE(sol.complete);
    CHECK(sol.phi_max() < 1e-12);
    for (int j = 0; j < sol.nodes(); ++j) {
        const FieldPoint w = sol.point(sol.steps() - 1, j);
        CHECK(std::abs(w.q(0) - sol.s[j]) < 1e-12);
        CHECK(std::abs(w.q(1) - omega * T) < 1e-12);
        CHECK(std::abs(w.q(2) - omega * T) < 1e-12);
        CHECK(std::abs(w.q(3) - 1.0) < 1e-12);
    }
    double lam = 0.0;
    for (double x : sol.lambda) lam = std::max(lam, std::abs(x));
    CHECK(lam < 1e-10);
}

TEST_CASE("csv layout") {
    const Model m = builtin("knife_edge");
    FieldSolution empty;
    empty.n = 3;
    empty.m = 1;
    CHECK(solution_csv(empty) == "t,q1,q2,q3,v1_1,v2_1,v3_1,lambda_1,E_L,phi_max\n");

    FieldSolution rod;
    rod.n = 2;
    rod.k = 2;
    rod.m = 1;
    CHECK(csv_header(rod) == "t,s,q1,q2,v1_1,v2_1,v1_2,v2_2,lambda_1_1,lambda_1_2,E_L,phi_max");

    const FieldSolution sol = simulate(m, config(0.05, 0.01, {"0", "0", "0"}, {"1", "0", "1"}));
    const std::string path = std::string(KSNH_TEST_TMP) + "/knife.csv";
    write_solution(sol, path);
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    const std::string text = ss.str();
    CHECK(text == solution_csv(sol));
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);

    const FieldSolution back = read_solution(m, path);
    CHECK(back.q == sol.q);
    CHECK(back.v == sol.v);
    CHECK(back.lambda == sol.lambda);
    for (std::size_t i = 0; i < sol.accel.size(); ++i) CHECK(std::abs(back.accel[i] - sol.accel[i]) < 1e-14);
    CHECK_THROWS_AS(read_solution(builtin("harmonic"), path), SchemaError);
}

TEST_CASE("Cosserat node solve matches the hand-reduced rod equations") {
    // Eliminating xdd, ydd with the differentiated constraints leaves one equation for theta:
    // (alpha + R^2 rho (w^2 + z^2)) theta_tt = beta theta_ss - R^2 rho theta_t (w Dy_t + z Dx_t) + R K (w x4 - z y4)
    // with z = Dx, w = Dy and x4 = D D2 D x. The multipliers are then rho xdd + K x4 and rho ydd + K y4.
    const Model m = load_model(testing::model_path("cosserat"));
    const double rho = 1.0, alpha = 1.0, beta = 1.0, K = 1.0, R = 1.0;
    SimConfig c = config(1e-3, 1e-3, {"cos(s) + 0.1*sin(2*s)", "sin(s)", "0.3*cos(s)", "0", "0", "0", "0"},
                         {"-0.1*(1 + 0.5*sin(s))*cos(s)", "0.1*(1 + 0.5*sin(s))*(-sin(s))", "0.1*(1 + 0.5*sin(s))",
                          "0", "0", "0", "0"});
    c.nodes = 24;
    c.length = 2.0 * M_PI;
    c.boundary = Boundary::Periodic;
    const FieldSolution sol = simulate(m, c);
    REQUIRE(sol.complete);
    const int M = 24;
    const Stencil st{M, 2.0 * M_PI / M, Boundary::Periodic};
    Vec x(M), y(M), th(M), xd(M), yd(M), thd(M);
    for (int j = 0; j < M; ++j) {
        const FieldPoint w = sol.point(0, j);
        x(j) = w.q(0), y(j) = w.q(1), th(j) = w.q(2);
        xd(j) = w.v(0), yd(j) = w.v(1), thd(j) = w.v(2);
    }
    const Vec z = st.d1(x), w = st.d1(y);
    const Vec x4 = st.d1(st.d2(z)), y4 = st.d1(st.d2(w));
    const Vec Dxd = st.d1(xd), Dyd = st.d1(yd), thss = st.d2(th);
    double worst = 0.0;
    for (int j = 0; j < M; ++j) {
        const double thdd = (beta * thss(j) - R * R * rho * thd(j) * (w(j) * Dyd(j) + z(j) * Dxd(j)) +
                             R * K * (w(j) * x4(j) - z(j) * y4(j))) /
                            (alpha + R * R * rho * (w(j) * w(j) + z(j) * z(j)));
        const double xdd = -R * w(j) * thdd - R * thd(j) * Dyd(j);
        const double ydd = R * z(j) * thdd + R * thd(j) * Dxd(j);
        const double lam = rho * xdd + K * x4(j), mu = rho * ydd + K * y4(j);
        const std::size_t r = sol.at(0, j);
        worst = std::max({worst, std::abs(sol.accel[r * 7 + 0] - xdd), std::abs(sol.accel[r * 7 + 1] - ydd),
                          std::abs(sol.accel[r * 7 + 2] - thdd), std::abs(sol.lambda[r * 4 + 0] + lam),
                          std::abs(sol.lambda[r * 4 + 2] + mu), std::abs(sol.lambda[r * 4 + 1]),
                          std::abs(sol.lambda[r * 4 + 3])});
    }
    CHECK(worst < 1e-10);
}
