#include "doctest.h"

#include <random>

#include "ksnh/expr.hpp"

using namespace ksnh;

namespace {

double eval_real(const std::string& src, int n, int k, std::map<std::string, double> params,
                 const std::vector<double>& x) {
    const Binding b(n, k, std::move(params));
    return Program(parse(src), b).eval<double>(x.data());
}

}  // namespace

TEST_CASE("constraint expression parses to the expected tree") {
    const Expr e = parse("v1_1 + R*v3_1*v2_2");
    const Expr want = add(variable("v1_1"), mul(mul(variable("R"), variable("v3_1")), variable("v2_2")));
    CHECK(structurally_equal(e, want));
}

TEST_CASE("unary minus binds below power") {
    CHECK(structurally_equal(parse("-q1^2"), neg(pow(variable("q1"), constant(2)))));
    CHECK(structurally_equal(parse("2^3^2"), pow(constant(2), pow(constant(3), constant(2)))));
    CHECK(structurally_equal(parse("2^-q1"), pow(constant(2), neg(variable("q1")))));
    CHECK(structurally_equal(parse("a - b - c"), sub(sub(variable("a"), variable("b")), variable("c"))));
}

TEST_CASE("syntax errors report byte offsets") {
    try {
        parse("sin(");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.offset() == 4);
        CHECK(std::string(e.what()) == "error at offset 4: expected expression");
    }
    CHECK_THROWS_AS(parse(""), SyntaxError);
    CHECK_THROWS_AS(parse("   "), SyntaxError);
    CHECK_THROWS_AS(parse("(q1 + 2"), SyntaxError);
    CHECK_THROWS_AS(parse("q1 + 2)"), SyntaxError);
    CHECK_THROWS_AS(parse("2 q1"), SyntaxError);
    CHECK_THROWS_AS(parse("2q1"), SyntaxError);
    CHECK_THROWS_AS(parse("sin q1"), SyntaxError);
    CHECK_THROWS_AS(parse("1e"), SyntaxError);
    CHECK_THROWS_AS(parse("0x10"), SyntaxError);
    try {
        parse("q1 * (q2 + ");
    } catch (const SyntaxError& e) {
        CHECK(e.offset() == 11);
    }
}

TEST_CASE("evaluation") {
    CHECK(eval_real("0.5*(v1_1^2 + v2_1^2)", 2, 1, {}, {0, 0, 3, 4}) == doctest::Approx(12.5));
    // v1_1 = 1, v3_1 = 2, v2_2 = 3 in a 3-coordinate, 2-direction layout
    std::vector<double> x(9, 0.0);
    x[3 + 0] = 1;
    x[3 + 2] = 2;
    x[3 + 3 + 1] = 3;
    CHECK(eval_real("v1_1 + R*v3_1*v2_2", 3, 2, {{"R", 2.0}}, x) == doctest::Approx(13));
    CHECK(eval_real("1.5e1 + .5 - 2/4", 1, 1, {}, {0, 0}) == doctest::Approx(15.0));
    CHECK(eval_real("(-2)^3", 1, 1, {}, {0, 0}) == doctest::Approx(-8.0));
    CHECK(eval_real("q1^(1+1)", 1, 1, {}, {-3, 0}) == doctest::Approx(9.0));
}

TEST_CASE("hyperdual identity evaluation") {
    const Binding b(1, 1, {});
    const Program p(parse("q1"), b);
    const HyperDual x[2] = {HyperDual(5, 1, 0, 0), HyperDual(0)};
    const HyperDual r = p.eval<HyperDual>(x);
    CHECK(r.real == 5);
    CHECK(r.d1 == 1);
    CHECK(r.d2 == 0);
    CHECK(r.d12 == 0);
}

TEST_CASE("binding") {
    const Binding b(3, 2, {{"R", 1.0}});
    CHECK(b.slot("q1") == 0);
    CHECK(b.slot("q3") == 2);
    CHECK(b.slot("v1_1") == 3);
    CHECK(b.slot("v3_1") == 5);
    CHECK(b.slot("v1_2") == 6);
    CHECK(b.slot("v3_2") == 8);
    CHECK(b.slot("R") == -1);
    CHECK(b.slot_name(7) == "v2_2");
    CHECK_THROWS_AS(b.slot("q4"), BindError);
    CHECK_THROWS_AS(b.slot("v1_3"), BindError);
    CHECK_THROWS_AS(b.slot("q0"), BindError);
    try {
        b.slot("omega");
        FAIL("expected BindError");
    } catch (const BindError& e) {
        CHECK(std::string(e.what()).find("omega") != std::string::npos);
    }
    CHECK_THROWS_AS(Binding(1, 1, {{"q2", 1.0}}), BindError);
}

TEST_CASE("division by zero raises a domain error in both scalar types") {
    const Binding b(1, 1, {});
    const Program p(parse("1/q1"), b);
    const double xd[2] = {0, 0};
    CHECK_THROWS_AS(p.eval<double>(xd), DomainError);
    const HyperDual xh[2] = {HyperDual(0), HyperDual(0)};
    CHECK_THROWS_AS(p.eval<HyperDual>(xh), DomainError);
}

TEST_CASE("printer round trip is a fixed point") {
    const char* sources[] = {
        "v1_1 + R*v3_1*v2_2",
        "-q1^2",
        "(-q1)^2",
        "a - (b - c)",
        "a/(b*c)",
        "a/b*c",
        "2^3^2",
        "(2^3)^2",
        "--q1",
        "a - -b",
        "a*-b",
        "sin(q1)^2 + cos(q1)^2",
        "0.1 + 1e-300 + 123456789.123456789",
        "sqrt(exp(log(tan(q1/3))))",
        "rho/2*(v1_1^2 + v2_1^2) + alpha/2*v3_1^2 - beta/2*v3_2^2",
        "2^-q1^2",
    };
    for (const char* s : sources) {
        const Expr a = parse(s);
        const std::string text = print(a);
        const Expr b = parse(text);
        INFO(s << " -> " << text);
        CHECK(structurally_equal(a, b));
        CHECK(print(b) == text);
    }
}

TEST_CASE("real evaluation equals the real part of hyperdual evaluation") {
    const Binding b(2, 1, {{"c", 0.7}});
    const char* sources[] = {"sin(q1)*exp(v2_1) - q2^3/c", "sqrt(q1*q1 + 1) + log(2 + cos(v1_1))",
                             "tan(q2/4)^2 - 3*v1_1*v2_1", "q1^v1_1"};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.1, 1.5);
    for (const char* s : sources) {
        const Program p(parse(s), b);
        for (int t = 0; t < 10; ++t) {
            double x[4];
            HyperDual xh[4];
            for (int i = 0; i < 4; ++i) {
                x[i] = U(rng);
                xh[i] = HyperDual(x[i], i == 0, i == 3, 0);
            }
            CHECK(p.eval<double>(x) == p.eval<HyperDual>(xh).real);
        }
    }
}

TEST_CASE("variable listing and dependence") {
    const Binding b(2, 1, {{"R", 1.0}});
    const Program p(parse("R*q2 + v1_1*q2"), b);
    CHECK(p.slots() == std::vector<int>{1, 2});
    CHECK(p.depends_on(2));
    CHECK_FALSE(p.depends_on(0));
    CHECK(variables(parse("R*q2 + v1_1*q2")) == std::vector<std::string>{"R", "q2", "v1_1"});
}
