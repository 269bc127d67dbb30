#include "ksnh/geometry.hpp"

#include <cmath>

namespace ksnh {

namespace {

std::vector<HyperDual> lift(const Vec& x) {
    std::vector<HyperDual> h(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) h[i] = HyperDual(x(i));
    return h;
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
}

}  // namespace

SecondOrder second_order(const Program& p, const Vec& x) {
    const Eigen::Index N = x.size();
    SecondOrder out;
    out.grad = Vec::Zero(N);
    out.hess = Mat::Zero(N, N);
    auto h = lift(x);
    out.value = p.eval<HyperDual>(h.data()).real;
    require_finite(out.value, "expression value");
    const auto& slots = p.slots();
    for (int i : slots) {
        for (int j : slots) {
            h[i].d1 = 1.0;
            h[j].d2 = 1.0;
            const HyperDual r = p.eval<HyperDual>(h.data());
            h[i].d1 = 0.0;
            h[j].d2 = 0.0;
            if (i == j) out.grad(i) = r.d1;
            out.hess(i, j) += 0.5 * r.d12;
            out.hess(j, i) += 0.5 * r.d12;
        }
    }
    for (Eigen::Index i = 0; i < N; ++i) require_finite(out.grad(i), "derivative");
    return out;
}

Vec gradient(const Program& p, const Vec& x) {
    Vec g = Vec::Zero(x.size());
    auto h = lift(x);
    for (int i : p.slots()) {
        h[i].d1 = 1.0;
        g(i) = p.eval<HyperDual>(h.data()).d1;
        h[i].d1 = 0.0;
        require_finite(g(i), "derivative");
    }
    return g;
}

double directional(const Program& p, const Vec& x, const Vec& u) {
    auto h = lift(x);
    for (Eigen::Index i = 0; i < x.size(); ++i) h[i].d1 = u(i);
    return p.eval<HyperDual>(h.data()).d1;
}

LagrangianJet jet(const Model& model, const FieldPoint& w) {
    const int n = model.n(), nk = n * model.k();
    const SecondOrder s = second_order(model.lagrangian(), w.pack());
    LagrangianJet J;
    J.L = s.value;
    J.dLdq = s.grad.head(n);
    J.dLdv = s.grad.tail(nk);
    J.hess_vv = s.hess.bottomRightCorner(nk, nk);
    J.hess_qv = s.hess.topRightCorner(n, nk);
    J.energy = w.v.dot(J.dLdv) - J.L;
    return J;
}

Vec energy_gradient(const LagrangianJet& J, const FieldPoint& w) {
    const Eigen::Index n = J.dLdq.size();
    Vec dE(n + J.dLdv.size());
    dE.head(n) = J.hess_qv * w.v - J.dLdq;
    dE.tail(J.dLdv.size()) = J.hess_vv * w.v;
    return dE;
}

RegularityReport regularity(const Model& model, const LagrangianJet& J, double tol) {
    RegularityReport r;
    r.condition = rcond(J.hess_vv);
    r.regular = r.condition > tol;
    const int nk = model.n() * model.k();
    r.nullity = nk - numerical_rank(J.hess_vv, tol);
    const double scale = std::max(1.0, max_abs(J.hess_vv));
    for (int s = 0; s < nk; ++s)
        if (J.hess_vv.row(s).cwiseAbs().maxCoeff() <= tol * scale)
            r.degenerate.push_back(model.binding().slot_name(model.n() + s));
    return r;
}

RegularityReport regularity(const Model& model, const FieldPoint& w, double tol) {
    return regularity(model, jet(model, w), tol);
}

std::vector<Mat> omega_stack(const Model& model, const LagrangianJet& J) {
    const int n = model.n(), k = model.k(), N = model.dim();
    std::vector<Mat> out;
    for (int A = 0; A < k; ++A) {
        Mat W = Mat::Zero(N, N);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                // d2L/dq^j dv^i_A - d2L/dq^i dv^j_A
                W(i, j) = J.hess_qv(j, A * n + i) - J.hess_qv(i, A * n + j);
            }
        }
        W.topLeftCorner(n, n) = 0.5 * (W.topLeftCorner(n, n) - W.topLeftCorner(n, n).transpose()).eval();
        for (int i = 0; i < n; ++i) {
            for (int r = 0; r < n * k; ++r) {
                W(i, n + r) = J.hess_vv(A * n + i, r);
                W(n + r, i) = -W(i, n + r);
            }
        }
        out.push_back(std::move(W));
    }
    return out;
}

std::vector<Mat> omega_stack(const Model& model, const FieldPoint& w) {
    return omega_stack(model, jet(model, w));
}

Mat vertical_basis(const Model& model) {
    const int n = model.n(), N = model.dim();
    return Mat::Identity(N, N).rightCols(N - n);
}

ConstraintForms constraint_forms(const Model& model, const FieldPoint& w) {
    const int n = model.n(), k = model.k(), m = model.m(), N = model.dim();
    const Vec x = w.pack();
    ConstraintForms f;
    f.phi = Vec::Zero(m);
    f.dphi = Mat::Zero(m, N);
    f.eta = Mat::Zero(m, n * k);
    for (int a = 0; a < m; ++a) {
        f.phi(a) = model.constraint(a)(x.data());
        require_finite(f.phi(a), "constraint value");
        f.dphi.row(a) = gradient(model.constraint(a), x).transpose();
    }
    if (model.spec().form_mode == FormMode::Explicit) {
        for (int a = 0; a < m; ++a)
            for (int A = 0; A < k; ++A)
                for (int i = 0; i < n; ++i) f.eta(a, A * n + i) = model.form(a, A, i)(x.data());
    } else {
        f.eta = f.dphi.rightCols(n * k);
    }
    return f;
}

Mat chetaev_forms(const ConstraintForms& f, int n) { return f.dphi.rightCols(f.dphi.cols() - n); }

ConstraintPackage constraint_package(const Model& model, const FieldPoint& w, const LagrangianJet& J,
                                     double tol_compat) {
    const int n = model.n(), m = model.m();
    ConstraintPackage c;
    static_cast<ConstraintForms&>(c) = constraint_forms(model, w);
    c.eta_rank = numerical_rank(c.eta);
    if (m == 0) {
        c.Z = Mat::Zero(0, n * model.k());
        c.C = c.Cinv = Mat::Zero(0, 0);
        c.compatible = true;
        c.c_condition = 1.0;
        return c;
    }
    if (c.eta_rank < m) throw NumericalError("constraint forms are linearly dependent", 0.0);
    const double hc = rcond(J.hess_vv);
    if (!(hc > 1e-10)) throw NumericalError("velocity Hessian is singular", hc);
    Eigen::PartialPivLU<Mat> lu(J.hess_vv);
    c.Z = lu.solve(c.eta.transpose()).transpose();
    c.C = c.Z * c.dphi.rightCols(c.dphi.cols() - n).transpose();
    c.c_condition = rcond(c.C);
    c.compatible = c.c_condition > tol_compat;
    if (c.compatible) c.Cinv = c.C.inverse();
    return c;
}

ConstraintPackage constraint_package(const Model& model, const FieldPoint& w, double tol_compat) {
    return constraint_package(model, w, jet(model, w), tol_compat);
}

Mat z_columns(const Model& model, const ConstraintPackage& c) {
    Mat Zc = Mat::Zero(model.dim(), c.Z.rows());
    Zc.bottomRows(c.Z.cols()) = c.Z.transpose();
    return Zc;
}

Vec convective_term(const Model& model, const LagrangianJet& J, const FieldPoint& w) {
    const int n = model.n(), k = model.k();
    Vec c = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int A = 0; A < k; ++A)
            for (int j = 0; j < n; ++j) c(i) += J.hess_qv(j, A * n + i) * w.v(A * n + j);
    return c;
}

Vec el_residual(const Model& model, const LagrangianJet& J, const FieldPoint& w, const Mat& accel,
                const Mat& eta, const Mat& lambda) {
    const int n = model.n(), k = model.k(), m = model.m();
    Vec r = convective_term(model, J, w) - J.dLdq;
    for (int i = 0; i < n; ++i) {
        for (int A = 0; A < k; ++A) {
            r(i) += J.hess_vv.row(A * n + i).dot(accel.row(A));
            for (int a = 0; a < m; ++a) r(i) += lambda(a, A) * eta(a, A * n + i);
        }
    }
    return r;
}

double project_velocities(const Model& model, FieldPoint& w, double tol, int max_iter) {
    const int n = model.n(), m = model.m();
    if (m == 0) return 0.0;
    double worst = 0.0;
    for (int it = 0; it <= max_iter; ++it) {
        const ConstraintForms f = constraint_forms(model, w);
        worst = f.phi.cwiseAbs().maxCoeff();
        if (worst <= tol || it == max_iter) break;
        const Vec dv = min_norm_solve(f.dphi.rightCols(f.dphi.cols() - n), -f.phi);
        if (!dv.allFinite()) break;
        w.v += dv;
    }
    return worst;
}

}  // namespace ksnh
