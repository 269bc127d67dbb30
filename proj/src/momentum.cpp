#include "ksnh/momentum.hpp"

#include <cmath>
#include <cstdio>

#include "ksnh/geometry.hpp"

namespace ksnh {

int require_section(const Model& model, const std::string& name) {
    const int s = model.section_index(name);
    if (s < 0) throw SchemaError("model '" + model.name() + "' has no symmetry section '" + name + "'");
    return s;
}

Vec section_values(const Model& model, int section, const FieldPoint& w) {
    const Vec x = w.pack();
    const auto& xi = model.section(section);
    Vec out(model.n());
    for (int i = 0; i < model.n(); ++i) out(i) = xi[i](x.data());
    return out;
}

AnnihilationReport annihilation_check(const Model& model, int section, const std::vector<FieldPoint>& points,
                                      double tol) {
    AnnihilationReport r;
    const int n = model.n(), k = model.k();
    for (const FieldPoint& w : points) {
        ++r.points;
        if (model.m() == 0) continue;
        const Vec xi = section_values(model, section, w);
        const ConstraintForms f = constraint_forms(model, w);
        for (int a = 0; a < model.m(); ++a)
            for (int A = 0; A < k; ++A)
                r.max_contraction =
                    std::max(r.max_contraction, std::abs(f.eta.row(a).segment(A * n, n).dot(xi.transpose())));
    }
    r.pass = r.max_contraction < tol;
    return r;
}

Vec momentum_components(const Model& model, const FieldPoint& w, int section) {
    const int n = model.n(), k = model.k();
    const Vec p = gradient(model.lagrangian(), w.pack()).tail(n * k);
    const Vec xi = section_values(model, section, w);
    Vec J(k);
    for (int A = 0; A < k; ++A) J(A) = p.segment(A * n, n).dot(xi);
    return J;
}

double lift_defect(const Model& model, int section, const FieldPoint& w) {
    const int n = model.n(), k = model.k();
    const Vec x = w.pack();
    const Vec g = gradient(model.lagrangian(), x);
    const auto& xi = model.section(section);
    double out = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec dxi = gradient(xi[i], x);
        out += xi[i](x.data()) * g(i);
        for (int A = 0; A < k; ++A)
            for (int j = 0; j < n; ++j) out += w.v(A * n + j) * dxi(j) * g(n + A * n + i);
    }
    return out;
}

MomentumResidual momentum_residual(const Model& model, const FieldSolution& sol, int section) {
    const int n = model.n(), k = model.k(), T = sol.steps(), M = sol.nodes();
    if (sol.n != n || sol.k != k) throw SchemaError("solution does not belong to model '" + model.name() + "'");
    if (T < 3) throw SchemaError("momentum residual needs at least 3 stored steps");
    if (k > 2) throw SchemaError("momentum residual supports k = 1 and k = 2");
    if (k == 2 && M < 3) throw SchemaError("momentum residual needs at least 3 spatial nodes");

    MomentumResidual r;
    r.k = k;
    const std::size_t rows = static_cast<std::size_t>(T) * M;
    std::vector<Vec> xi(rows), p(rows);
    r.J.resize(rows * k);
    for (int st = 0; st < T; ++st)
        for (int j = 0; j < M; ++j) {
            const std::size_t a = sol.at(st, j);
            const FieldPoint w = sol.point(st, j);
            xi[a] = section_values(model, section, w);
            p[a] = gradient(model.lagrangian(), w.pack()).tail(n * k);
            for (int A = 0; A < k; ++A) r.J[a * k + A] = p[a].segment(A * n, n).dot(xi[a]);
        }

    double sum = 0.0;
    for (int st = 1; st + 1 < T; ++st) {
        const double dt = sol.t[st + 1] - sol.t[st - 1];
        const int j0 = k == 2 ? 1 : 0, j1 = k == 2 ? M - 1 : M;
        for (int j = j0; j < j1; ++j) {
            const std::size_t c = sol.at(st, j), tp = sol.at(st + 1, j), tm = sol.at(st - 1, j);
            double lhs = (r.J[tp * k] - r.J[tm * k]) / dt;
            double rhs = p[c].head(n).dot((xi[tp] - xi[tm]) / dt);
            double ds = 1.0;
            if (k == 2) {
                const std::size_t sp = sol.at(st, j + 1), sm = sol.at(st, j - 1);
                const double w2 = sol.s[j + 1] - sol.s[j - 1];
                lhs += (r.J[sp * k + 1] - r.J[sm * k + 1]) / w2;
                rhs += p[c].segment(n, n).dot((xi[sp] - xi[sm]) / w2);
                ds = 0.5 * w2;
                r.s.push_back(sol.s[j]);
            }
            const double res = lhs - rhs;
            r.t.push_back(sol.t[st]);
            r.residual.push_back(res);
            r.max = std::max(r.max, std::abs(res));
            sum += res * res * 0.5 * dt * ds;
        }
    }
    r.l2 = std::sqrt(sum);
    if (k == 1)
        for (int st = 0; st < T; ++st) r.j_drift = std::max(r.j_drift, std::abs(r.J[st] - r.J[0]));
    return r;
}

std::string residual_csv(const MomentumResidual& r) {
    std::string out = r.k == 2 ? "t,s,residual\n" : "t,residual\n";
    char buf[32];
    for (std::size_t i = 0; i < r.residual.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", r.t[i]);
        out += buf;
        if (r.k == 2) {
            std::snprintf(buf, sizeof buf, ",%.17g", r.s[i]);
            out += buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", r.residual[i]);
        out += buf;
    }
    return out;
}

}  // namespace ksnh
