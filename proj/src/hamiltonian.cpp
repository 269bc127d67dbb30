#include "ksnh/hamiltonian.hpp"

#include <cmath>
#include <sstream>

#include "ksnh/geometry.hpp"
#include "ksnh/linalg.hpp"

namespace ksnh {

namespace {

constexpr double kStep = 1e-6;

std::string describe(const CotangentPoint& cp) {
    std::ostringstream s;
    s.precision(17);
    s << "q = [" << cp.q.transpose() << "], p = [" << cp.p.transpose() << "]";
    return s.str();
}

}  // namespace

CotangentPoint legendre(const Model& model, const FieldPoint& w) {
    const Vec g = gradient(model.lagrangian(), w.pack());
    return {w.q, g.tail(model.n() * model.k())};
}

FieldPoint legendre_inverse(const Model& model, const CotangentPoint& cp, const FieldPoint* guess) {
    const int nk = model.n() * model.k();
    FieldPoint w{cp.q, guess ? guess->v : Vec(Vec::Zero(nk))};
    const double scale = std::max(1.0, cp.p.cwiseAbs().maxCoeff());
    double res = INFINITY;
    for (int it = 0; it < 50; ++it) {
        const LagrangianJet J = jet(model, w);
        const Vec r = J.dLdv - cp.p;
        res = r.cwiseAbs().maxCoeff();
        if (res <= 1e-15 * scale) return w;
        const double rc = rcond(J.hess_vv);
        if (!(rc > 1e-13))
            throw NumericalError("inverse Legendre map: singular velocity Hessian at " + describe(cp), rc);
        const Vec dv = J.hess_vv.partialPivLu().solve(r);
        w.v -= dv;
        // stalled at rounding level
        if (res <= 1e-10 * scale && dv.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, w.v.cwiseAbs().maxCoeff()))
            return w;
    }
    res = (jet(model, w).dLdv - cp.p).cwiseAbs().maxCoeff();
    if (res <= 1e-10 * scale) return w;
    throw NumericalError("inverse Legendre map: no convergence in 50 iterations at " + describe(cp), res);
}

HamiltonianValue hamiltonian_value(const Model& model, const CotangentPoint& cp, const FieldPoint* guess) {
    const FieldPoint w = legendre_inverse(model, cp, guess);
    const LagrangianJet J = jet(model, w);
    return {J.energy, w.v.dot(cp.p) - J.L};
}

double transported_constraint(const Model& model, const CotangentPoint& cp, int alpha, const FieldPoint* guess) {
    const Vec x = legendre_inverse(model, cp, guess).pack();
    return model.constraint(alpha)(x.data());
}

Vec hamiltonian_gradient(const Model& model, const CotangentPoint& cp, const FieldPoint* guess) {
    const int n = model.n(), nk = n * model.k();
    const FieldPoint base = legendre_inverse(model, cp, guess);
    Vec g(n + nk);
    auto H = [&](const CotangentPoint& c) { return hamiltonian_value(model, c, &base).energy; };
    for (int i = 0; i < n + nk; ++i) {
        CotangentPoint a = cp, b = cp;
        double& ea = i < n ? a.q(i) : a.p(i - n);
        double& eb = i < n ? b.q(i) : b.p(i - n);
        const double h = kStep * std::max(1.0, std::abs(ea));
        ea += h;
        eb -= h;
        g(i) = (H(a) - H(b)) / (2.0 * h);
    }
    return g;
}

HamiltonResidual hamilton_residual(const Model& model, const FieldSolution& sol) {
    if (model.k() != 1 || sol.k != 1) throw SchemaError("Hamiltonian residual supports k = 1 solutions");
    const int n = model.n(), m = model.m(), T = sol.steps();
    if (T < 5) throw SchemaError("Hamiltonian residual needs at least 5 stored steps");
    std::vector<CotangentPoint> cps;
    for (int st = 0; st < T; ++st) cps.push_back(legendre(model, sol.point(st)));
    HamiltonResidual r;
    for (int st = 2; st + 2 < T; ++st) {
        const double dt = (sol.t[st + 2] - sol.t[st - 2]) / 4.0;
        auto d5 = [&](auto f) { return (f(st - 2) - 8.0 * f(st - 1) + 8.0 * f(st + 1) - f(st + 2)) / (12.0 * dt); };
        const FieldPoint w = sol.point(st);
        const Vec g = hamiltonian_gradient(model, cps[st], &w);
        const ConstraintForms f = constraint_forms(model, w);
        double first = 0.0, second = 0.0;
        for (int i = 0; i < n; ++i) {
            const double qdot = d5([&](int s) { return sol.q[s * n + i]; });
            const double pdot = d5([&](int s) { return cps[s].p(i); });
            double force = 0.0;
            for (int a = 0; a < m; ++a) force += sol.lambda[st * m + a] * f.eta(a, i);
            first = std::max(first, std::abs(g(n + i) - qdot));
            second = std::max(second, std::abs(g(i) + force + pdot));
        }
        r.t.push_back(sol.t[st]);
        r.first.push_back(first);
        r.second.push_back(second);
        r.max_first = std::max(r.max_first, first);
        r.max_second = std::max(r.max_second, second);
    }
    return r;
}

}  // namespace ksnh
