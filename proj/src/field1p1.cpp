#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ksnh/dynamics.hpp"
#include "ksnh/geometry.hpp"
#include "ksnh/linalg.hpp"

namespace ksnh {

Vec Stencil::d1(const Vec& f) const {
    Vec out(M);
    const double c = 0.5 / ds;
    if (bc == Boundary::Periodic) {
        for (int j = 0; j < M; ++j) out(j) = c * (f((j + 1) % M) - f((j + M - 1) % M));
        return out;
    }
    for (int j = 1; j < M - 1; ++j) out(j) = c * (f(j + 1) - f(j - 1));
    out(0) = c * (-3.0 * f(0) + 4.0 * f(1) - f(2));
    out(M - 1) = c * (3.0 * f(M - 1) - 4.0 * f(M - 2) + f(M - 3));
    return out;
}

Vec Stencil::d2(const Vec& f) const {
    Vec out(M);
    const double c = 1.0 / (ds * ds);
    if (bc == Boundary::Periodic) {
        for (int j = 0; j < M; ++j) out(j) = c * (f((j + 1) % M) - 2.0 * f(j) + f((j + M - 1) % M));
        return out;
    }
    for (int j = 1; j < M - 1; ++j) out(j) = c * (f(j + 1) - 2.0 * f(j) + f(j - 1));
    out(0) = c * (2.0 * f(0) - 5.0 * f(1) + 4.0 * f(2) - f(3));
    out(M - 1) = c * (2.0 * f(M - 1) - 5.0 * f(M - 2) + 4.0 * f(M - 3) - f(M - 4));
    return out;
}

std::vector<double> spatial_grid(int M, double length, Boundary bc) {
    std::vector<double> s(static_cast<std::size_t>(M));
    const double ds = bc == Boundary::Periodic ? length / M : length / (M - 1);
    for (int j = 0; j < M; ++j) s[j] = j * ds;
    return s;
}

namespace {

constexpr double kRoleTol = 1e-9;

bool near(double a, double b) { return std::abs(a - b) <= kRoleTol * std::max(1.0, std::abs(b)); }

}  // namespace

FieldRoles detect_roles(const Model& model) {
    if (model.k() != 2) throw SchemaError("(1+1) integration needs k = 2 (time, space)");
    const int n = model.n(), N = model.dim();
    auto q = [](int i) { return i; };
    auto v = [&](int i, int A) { return n + A * n + i; };

    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<Vec> probes;
    std::vector<SecondOrder> L;
    for (int t = 0; t < 3; ++t) {
        Vec x(N);
        for (auto& e : x) e = U(rng);
        probes.push_back(x);
        L.push_back(second_order(model.lagrangian(), x));
    }
    auto all = [&](auto pred) {
        for (std::size_t t = 0; t < probes.size(); ++t)
            if (!pred(probes[t], L[t])) return false;
        return true;
    };
    auto no_velocity = [&](int i, int A) {
        return all([&](const Vec&, const SecondOrder& s) {
            return s.grad(v(i, A)) == 0.0 && s.hess.row(v(i, A)).cwiseAbs().maxCoeff() == 0.0;
        });
    };

    FieldRoles roles;
    std::vector<int> role(n, -1);  // 0 evolution, 1 lowered, 2 multiplier
    for (int i = 0; i < n; ++i) {
        const bool evo = !all([&](const Vec&, const SecondOrder& s) { return s.hess(v(i, 0), v(i, 0)) == 0.0; });
        if (evo) {
            roles.evolution.push_back(i);
            role[i] = 0;
        }
    }
    if (roles.evolution.empty()) throw SchemaError("no field has a time-kinetic term");

    // dL/dq^c = q^a - v^b_2 with no velocity dependence on q^c
    for (int c = 0; c < n; ++c) {
        if (role[c] == 0) continue;
        if (!no_velocity(c, 0) || !no_velocity(c, 1)) continue;
        const SecondOrder& s0 = L[0];
        int a = -1, b = -1;
        bool ok = true;
        for (int j = 0; j < N && ok; ++j) {
            const double hc = s0.hess(q(c), j);
            if (hc == 0.0) continue;
            if (j < n && near(hc, 1.0) && a < 0) a = j;
            else if (j >= n + n && near(hc, -1.0) && b < 0) b = j - 2 * n;
            else ok = false;
        }
        if (!ok || a < 0 || b < 0 || a == c) continue;
        const bool linear = all([&](const Vec& x, const SecondOrder& s) {
            return near(s.grad(q(c)), x(q(a)) - x(v(b, 1))) && std::abs(s.hess(q(c), q(a)) - 1.0) < kRoleTol &&
                   std::abs(s.hess(q(c), v(b, 1)) + 1.0) < kRoleTol;
        });
        if (!linear) continue;
        roles.lowered.push_back({a, b, c});
    }
    for (const auto& lw : roles.lowered) {
        if (role[lw.a] != -1 || role[lw.c] != -1 || role[lw.b] != 0) {
            std::ostringstream msg;
            msg << "field q" << lw.c + 1 << " lowers q" << lw.b + 1 << " into q" << lw.a + 1
                << ", but the roles overlap; only the rod-type elimination pattern is supported";
            throw SchemaError(msg.str());
        }
        role[lw.a] = 1;
        role[lw.c] = 2;
        if (!no_velocity(lw.a, 0))
            throw SchemaError("lowered field q" + std::to_string(lw.a + 1) + " may not have a time velocity");
        const bool paired = all([&](const Vec& x, const SecondOrder& s) {
            return near(s.grad(q(lw.a)), x(q(lw.c)));
        });
        if (!paired)
            throw SchemaError("dL/dq" + std::to_string(lw.a + 1) + " must equal q" + std::to_string(lw.c + 1));
        const bool decoupled = all([&](const Vec&, const SecondOrder& s) {
            return s.hess(v(lw.a, 1), q(lw.c)) == 0.0;
        });
        if (!decoupled)
            throw SchemaError("dL/dv" + std::to_string(lw.a + 1) + "_2 may not depend on q" + std::to_string(lw.c + 1));
    }
    for (int i = 0; i < n; ++i)
        if (role[i] == -1)
            throw SchemaError("field q" + std::to_string(i + 1) +
                              " is neither evolving nor algebraically eliminable; only rod-type models are supported");
    for (int e : roles.evolution)
        for (const auto& lw : roles.lowered)
            if (!all([&](const Vec&, const SecondOrder& s) { return s.hess(v(e, 0), q(lw.c)) == 0.0; }))
                throw SchemaError("time momenta may not depend on multiplier fields");

    auto is_evo_slot = [&](int slot) {
        const int i = slot < n ? slot : (slot - n) % n;
        return role[i] == 0;
    };
    for (int a = 0; a < model.m(); ++a)
        for (int slot : model.constraint(a).slots())
            if (!is_evo_slot(slot))
                throw SchemaError("constraint " + std::to_string(a + 1) + " depends on a non-evolving field");
    for (const Vec& x : probes) {
        const FieldPoint w = FieldPoint::unpack(x, n, 2);
        const ConstraintForms f = constraint_forms(model, w);
        for (int a = 0; a < model.m(); ++a) {
            if (f.eta.row(a).segment(n, n).cwiseAbs().maxCoeff() > kRoleTol)
                throw SchemaError("constraint forms with a spatial component are not supported by the (1+1) solver; "
                                  "use explicit forms whose second block vanishes");
            for (int i = 0; i < n; ++i)
                if (role[i] != 0 && std::abs(f.eta(a, i)) > kRoleTol)
                    throw SchemaError("constraint forms may only act on evolving fields");
        }
    }
    return roles;
}

namespace {

// Per-stage evaluation of every node of a (1+1) rod-type model.
class LineSolver {
public:
    LineSolver(const Model& model, const SimConfig& cfg)
        : model_(model), roles_(detect_roles(model)), n_(model.n()), m_(model.m()),
          E_(static_cast<int>(roles_.evolution.size())) {
        st_.M = cfg.nodes;
        st_.bc = cfg.boundary;
        const auto s = spatial_grid(cfg.nodes, cfg.length, cfg.boundary);
        st_.ds = s[1] - s[0];
        clamped_ = cfg.boundary == Boundary::Clamped;
        buf_.resize(static_cast<std::size_t>(model.dim()));
    }

    const FieldRoles& roles() const { return roles_; }
    const Stencil& stencil() const { return st_; }
    int evolution_count() const { return E_; }

    // Full nodal fields from the evolving state.
    struct Fields {
        std::vector<Vec> Q, V1, V2, S1, S2;  // per field, length M
    };

    Fields expand(const std::vector<Vec>& qE, const std::vector<Vec>& vE) {
        const int M = st_.M;
        Fields f;
        f.Q.assign(n_, Vec::Zero(M));
        f.V1 = f.V2 = f.S1 = f.S2 = f.Q;
        for (int e = 0; e < E_; ++e) {
            f.Q[roles_.evolution[e]] = qE[e];
            f.V1[roles_.evolution[e]] = vE[e];
        }
        for (const auto& lw : roles_.lowered) {
            f.Q[lw.a] = st_.d1(f.Q[lw.b]);
            f.V1[lw.a] = st_.d1(f.V1[lw.b]);
        }
        std::vector<bool> is_c(n_, false);
        for (const auto& lw : roles_.lowered) is_c[lw.c] = true;
        for (int i = 0; i < n_; ++i) {
            if (is_c[i]) continue;
            f.V2[i] = st_.d1(f.Q[i]);
            f.S2[i] = st_.d2(f.Q[i]);
            f.S1[i] = st_.d1(f.V1[i]);
        }
        // q^c = d/ds (dL/dv^a_2), by the chain rule along the spatial direction
        for (const auto& lw : roles_.lowered) {
            for (int j = 0; j < M; ++j) {
                load(f, j);
                seed_direction(f, j, /*spatial=*/true);
                buf_[vslot(lw.a, 1)].d1 = 1.0;
                f.Q[lw.c](j) = model_.lagrangian().eval<HyperDual>(buf_.data()).d12;
            }
        }
        for (const auto& lw : roles_.lowered) {
            f.V2[lw.c] = st_.d1(f.Q[lw.c]);
            f.S2[lw.c] = st_.d2(f.Q[lw.c]);
        }
        return f;
    }

    // Accelerations of the evolving fields and direction-1 multipliers at node j.
    void solve_node(const Fields& f, int j, double* accel, double* lambda) {
        const int K = E_ + m_;
        Mat A = Mat::Zero(K, K);
        Vec b = Vec::Zero(K);
        const Program& L = model_.lagrangian();
        if (clamped_ && (j == 0 || j == st_.M - 1)) {
            std::fill(accel, accel + E_, 0.0);
            std::fill(lambda, lambda + m_, 0.0);
            return;
        }
        for (int e = 0; e < E_; ++e) {
            const int i = roles_.evolution[e];
            double r = 0.0;
            load(f, j);
            seed_direction(f, j, true);
            buf_[vslot(i, 1)].d1 = 1.0;
            r += L.eval<HyperDual>(buf_.data()).d12;  // d/ds p^i_2
            load(f, j);
            seed_direction(f, j, false);
            buf_[vslot(i, 0)].d1 = 1.0;
            r += L.eval<HyperDual>(buf_.data()).d12;  // known part of d/dt p^i_1
            load(f, j);
            buf_[i].d1 = 1.0;
            r -= L.eval<HyperDual>(buf_.data()).d1;  // dL/dq^i
            b(e) = -r;
            for (int e2 = 0; e2 <= e; ++e2) {
                load(f, j);
                buf_[vslot(i, 0)].d1 = 1.0;
                buf_[vslot(roles_.evolution[e2], 0)].d2 = 1.0;
                const double hij = L.eval<HyperDual>(buf_.data()).d12;
                A(e, e2) = A(e2, e) = hij;
            }
        }
        for (int a = 0; a < m_; ++a) {
            const Program& phi = model_.constraint(a);
            load(f, j);
            seed_direction(f, j, false);
            b(E_ + a) = -phi.eval<HyperDual>(buf_.data()).d2;
            for (int e = 0; e < E_; ++e) {
                const int i = roles_.evolution[e];
                load(f, j);
                buf_[vslot(i, 0)].d1 = 1.0;
                A(E_ + a, e) = phi.eval<HyperDual>(buf_.data()).d1;
                A(e, E_ + a) = eta1(a, i, f, j, A(E_ + a, e));
            }
        }
        const double rc = rcond(A);
        if (!(rc > 1e-13)) throw NumericalError("node system is singular at s-index " + std::to_string(j), rc);
        const Vec x = A.partialPivLu().solve(b);
        for (int e = 0; e < E_; ++e) accel[e] = x(e);
        for (int a = 0; a < m_; ++a) lambda[a] = x(E_ + a);
    }

    // Newton on the evolving time velocities at node j so that Phi = 0.
    double project_node(const Fields& f, int j, std::vector<Vec>& vE) {
        if (m_ == 0) return 0.0;
        double worst = 0.0;
        for (int it = 0; it < 6; ++it) {
            Vec phi(m_);
            Mat G(m_, E_);
            for (int a = 0; a < m_; ++a) {
                for (int e = 0; e < E_; ++e) {
                    load(f, j);
                    for (int e2 = 0; e2 < E_; ++e2) buf_[vslot(roles_.evolution[e2], 0)] = HyperDual(vE[e2](j));
                    buf_[vslot(roles_.evolution[e], 0)].d1 = 1.0;
                    const HyperDual r = model_.constraint(a).eval<HyperDual>(buf_.data());
                    phi(a) = r.real;
                    G(a, e) = r.d1;
                }
            }
            worst = phi.cwiseAbs().maxCoeff();
            if (worst <= 1e-15) break;
            const Vec dv = min_norm_solve(G, -phi);
            for (int e = 0; e < E_; ++e) vE[e](j) += dv(e);
        }
        return worst;
    }

    // Full point at node j; q^c time velocities are left at zero.
    FieldPoint point(const Fields& f, int j) const {
        FieldPoint w{Vec(n_), Vec(2 * n_)};
        for (int i = 0; i < n_; ++i) {
            w.q(i) = f.Q[i](j);
            w.v(i) = f.V1[i](j);
            w.v(n_ + i) = f.V2[i](j);
        }
        return w;
    }

private:
    const Model& model_;
    FieldRoles roles_;
    int n_, m_, E_;
    Stencil st_;
    bool clamped_ = false;
    std::vector<HyperDual> buf_;

    int vslot(int i, int A) const { return n_ + A * n_ + i; }

    void load(const Fields& f, int j) {
        for (int i = 0; i < n_; ++i) {
            buf_[i] = HyperDual(f.Q[i](j));
            buf_[vslot(i, 0)] = HyperDual(f.V1[i](j));
            buf_[vslot(i, 1)] = HyperDual(f.V2[i](j));
        }
    }

    // e2 direction: d/ds of every nodal coordinate, or the known part of d/dt.
    void seed_direction(const Fields& f, int j, bool spatial) {
        for (int i = 0; i < n_; ++i) {
            if (spatial) {
                buf_[i].d2 = f.V2[i](j);
                buf_[vslot(i, 0)].d2 = f.S1[i](j);
                buf_[vslot(i, 1)].d2 = f.S2[i](j);
            } else {
                buf_[i].d2 = f.V1[i](j);
                buf_[vslot(i, 0)].d2 = 0.0;
                buf_[vslot(i, 1)].d2 = f.S1[i](j);
            }
        }
    }

    double eta1(int a, int i, const Fields& f, int j, double chetaev) {
        if (model_.spec().form_mode != FormMode::Explicit) return chetaev;
        load(f, j);
        std::vector<double> x(buf_.size());
        for (std::size_t s = 0; s < x.size(); ++s) x[s] = buf_[s].real;
        return model_.form(a, 0, i)(x.data());
    }
};

}  // namespace

FieldSolution integrate_1plus1(const Model& model, const SimConfig& cfg) {
    if (cfg.nodes < 5) throw SchemaError("sim config: field 'spatial.nodes' must be at least 5");
    LineSolver ls(model, cfg);
    const int n = model.n(), m = model.m(), M = cfg.nodes, E = ls.evolution_count();
    const auto& evo = ls.roles().evolution;
    const auto grid = spatial_grid(M, cfg.length, cfg.boundary);

    std::vector<Vec> qE(E, Vec(M)), vE(E, Vec(M));
    for (int j = 0; j < M; ++j) {
        const Vec q0 = initial_values(model, cfg.q0, "q", grid[j], cfg.length);
        const Vec v0 = initial_values(model, cfg.v0, "v", grid[j], cfg.length);
        for (int e = 0; e < E; ++e) {
            qE[e](j) = q0(evo[e]);
            vE[e](j) = v0(evo[e]);
        }
    }
    if (cfg.boundary == Boundary::Clamped)
        for (int e = 0; e < E; ++e) vE[e](0) = vE[e](M - 1) = 0.0;

    FieldSolution sol;
    sol.n = n;
    sol.k = 2;
    sol.m = m;
    sol.s = grid;

    {
        // discrete spatial derivatives differ from the continuum profile, so start on the discrete set
        const auto f = ls.expand(qE, vE);
        for (int j = 0; j < M; ++j) ls.project_node(f, j, vE);
    }

    auto rhs = [&](const std::vector<Vec>& q, const std::vector<Vec>& v, std::vector<Vec>& acc) {
        const auto f = ls.expand(q, v);
        std::vector<double> a(E), lam(m);
        for (int j = 0; j < M; ++j) {
            ls.solve_node(f, j, a.data(), lam.data());
            for (int e = 0; e < E; ++e) acc[e](j) = a[e];
        }
    };

    auto store = [&](double t) {
        const auto f = ls.expand(qE, vE);
        std::vector<double> a(E), lam(m);
        sol.t.push_back(t);
        for (int j = 0; j < M; ++j) {
            ls.solve_node(f, j, a.data(), lam.data());
            const FieldPoint w = ls.point(f, j);
            sol.q.insert(sol.q.end(), w.q.data(), w.q.data() + n);
            sol.v.insert(sol.v.end(), w.v.data(), w.v.data() + 2 * n);
            std::vector<double> acc(n, 0.0);
            for (int e = 0; e < E; ++e) acc[evo[e]] = a[e];
            for (int a2 = 0; a2 < m; ++a2) {
                sol.lambda.push_back(lam[a2]);
                sol.lambda.push_back(0.0);
            }
            sol.accel.insert(sol.accel.end(), acc.begin(), acc.end());
            const Vec x = w.pack();
            Vec u = Vec::Zero(x.size());
            u.tail(2 * n) = w.v;
            sol.energy.push_back(directional(model.lagrangian(), x, u) - model.lagrangian()(x.data()));
            double worst = 0.0;
            for (int c = 0; c < m; ++c) worst = std::max(worst, std::abs(model.constraint(c)(x.data())));
            sol.phi.push_back(worst);
        }
        // lowered accelerations follow from their sources
        const std::size_t base = sol.accel.size() - static_cast<std::size_t>(M) * n;
        for (const auto& lw : ls.roles().lowered) {
            Vec ab(M);
            for (int j = 0; j < M; ++j) ab(j) = sol.accel[base + j * n + lw.b];
            const Vec aa = ls.stencil().d1(ab);
            for (int j = 0; j < M; ++j) sol.accel[base + j * n + lw.a] = aa(j);
        }
    };

    const int steps = [&] {
        const double r = cfg.t_end / cfg.h;
        const double k = std::round(r);
        return static_cast<int>(std::abs(r - k) < 1e-9 * std::max(1.0, r) ? k : std::ceil(r));
    }();
    const double h = cfg.h;
    std::vector<Vec> k1(E, Vec(M)), k2 = k1, k3 = k1, k4 = k1, qs = qE, vs = vE;
    try {
        store(0.0);
        if (sol.phi_max() > cfg.tol_feas)
            throw SchemaError("sim config: initial data cannot be projected onto the constraints");
        for (int s = 1; s <= steps; ++s) {
            rhs(qE, vE, k1);
            for (int e = 0; e < E; ++e) {
                qs[e] = qE[e] + 0.5 * h * vE[e];
                vs[e] = vE[e] + 0.5 * h * k1[e];
            }
            const std::vector<Vec> v2 = vs;
            rhs(qs, vs, k2);
            for (int e = 0; e < E; ++e) {
                qs[e] = qE[e] + 0.5 * h * v2[e];
                vs[e] = vE[e] + 0.5 * h * k2[e];
            }
            const std::vector<Vec> v3 = vs;
            rhs(qs, vs, k3);
            for (int e = 0; e < E; ++e) {
                qs[e] = qE[e] + h * v3[e];
                vs[e] = vE[e] + h * k3[e];
            }
            const std::vector<Vec> v4 = vs;
            rhs(qs, vs, k4);
            for (int e = 0; e < E; ++e) {
                qE[e] += h / 6.0 * (vE[e] + 2.0 * v2[e] + 2.0 * v3[e] + v4[e]);
                vE[e] += h / 6.0 * (k1[e] + 2.0 * k2[e] + 2.0 * k3[e] + k4[e]);
                if (!qE[e].allFinite() || !vE[e].allFinite()) throw NumericalError("state became non-finite");
            }
            if (cfg.projection_every > 0 && s % cfg.projection_every == 0) {
                const auto f = ls.expand(qE, vE);
                for (int j = 0; j < M; ++j) ls.project_node(f, j, vE);
            }
            if (s % cfg.store_every == 0 || s == steps) {
                store(s * h);
                double worst = 0.0;
                for (int j = 0; j < M; ++j) worst = std::max(worst, sol.phi[sol.at(sol.steps() - 1, j)]);
                if (worst > cfg.drift_tol) {
                    sol.complete = false;
                    sol.status = "constraint drift " + std::to_string(worst) + " exceeds tolerance at t = " +
                                 std::to_string(s * h);
                    break;
                }
            }
        }
    } catch (const NumericalError& e) {
        sol.complete = false;
        sol.status = std::string(e.what()) + " at t = " + std::to_string(sol.t.empty() ? 0.0 : sol.t.back());
    }

    // multiplier-field time derivatives by differences in time
    const int T = sol.steps();
    if (T >= 3) {
        const double dt = sol.t[1] - sol.t[0];
        for (const auto& lw : ls.roles().lowered) {
            for (int j = 0; j < M; ++j) {
                auto qc = [&](int st) { return sol.q[sol.at(st, j) * n + lw.c]; };
                for (int st = 0; st < T; ++st) {
                    double d;
                    if (st == 0) d = (-3.0 * qc(0) + 4.0 * qc(1) - qc(2)) / (2.0 * dt);
                    else if (st == T - 1) d = (3.0 * qc(T - 1) - 4.0 * qc(T - 2) + qc(T - 3)) / (2.0 * dt);
                    else d = (qc(st + 1) - qc(st - 1)) / (2.0 * dt);
                    sol.v[sol.at(st, j) * 2 * n + lw.c] = d;
                }
                auto vc = [&](int st) { return sol.v[sol.at(st, j) * 2 * n + lw.c]; };
                for (int st = 0; st < T; ++st) {
                    double d;
                    if (st == 0) d = (vc(1) - vc(0)) / dt;
                    else if (st == T - 1) d = (vc(T - 1) - vc(T - 2)) / dt;
                    else d = (vc(st + 1) - vc(st - 1)) / (2.0 * dt);
                    sol.accel[sol.at(st, j) * n + lw.c] = d;
                }
            }
        }
    }
    return sol;
}

}  // namespace ksnh
