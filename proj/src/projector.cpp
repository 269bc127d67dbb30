#include "ksnh/projector.hpp"

#include <cmath>

namespace ksnh {

std::vector<Vec> KVectorCoefficients::vectors(const FieldPoint& w) const {
    const Eigen::Index n = w.q.size();
    std::vector<Vec> out;
    for (Eigen::Index A = 0; A < accel.rows(); ++A) {
        Vec X(n + accel.cols());
        X << w.v.segment(A * n, n), accel.row(A).transpose();
        out.push_back(std::move(X));
    }
    return out;
}

double KVectorCoefficients::asymmetry(int n) const {
    double worst = 0.0;
    const Eigen::Index k = accel.rows();
    for (Eigen::Index A = 0; A < k; ++A)
        for (Eigen::Index B = 0; B < k; ++B)
            for (int i = 0; i < n; ++i)
                worst = std::max(worst, std::abs(accel(A, B * n + i) - accel(B, A * n + i)));
    return worst;
}

ProjectorPair projectors(const Model& model, const ConstraintPackage& c) {
    const int N = model.dim();
    ProjectorPair pp;
    pp.Q = Mat::Zero(N, N);
    if (model.m() > 0) {
        if (!c.compatible) throw NumericalError("compatibility condition fails", c.c_condition);
        pp.Q = z_columns(model, c) * c.Cinv.transpose() * c.dphi;
    }
    pp.P = Mat::Identity(N, N) - pp.Q;
    return pp;
}

ProjectorPair projectors(const Model& model, const FieldPoint& w, double tol_compat) {
    return projectors(model, constraint_package(model, w, tol_compat));
}

namespace {

// Symmetric acceleration unknowns s^j_{AB}, A <= B, scaled so their Euclidean norm is the
// Frobenius norm of the full table.
struct SymLayout {
    int n, k;
    std::vector<std::pair<int, int>> pairs;

    SymLayout(int n_, int k_) : n(n_), k(k_) {
        for (int A = 0; A < k; ++A)
            for (int B = A; B < k; ++B) pairs.emplace_back(A, B);
    }
    int size() const { return n * static_cast<int>(pairs.size()); }
    int index(int j, int A, int B) const {
        if (A > B) std::swap(A, B);
        int p = 0;
        for (int a = 0; a < A; ++a) p += k - a;
        p += B - A;
        return p * n + j;
    }
    double weight(int A, int B) const { return A == B ? 1.0 : std::sqrt(2.0); }

    Mat unpack(const Vec& u) const {
        Mat accel = Mat::Zero(k, n * k);
        for (int A = 0; A < k; ++A)
            for (int B = 0; B < k; ++B)
                for (int j = 0; j < n; ++j) accel(A, B * n + j) = u(index(j, A, B)) / weight(A, B);
        return accel;
    }
};

// Coefficient of s^j_{AB} in Euler-Lagrange row i.
double el_coeff(const LagrangianJet& J, int n, int i, int j, int A, int B) {
    double c = J.hess_vv(A * n + i, B * n + j);
    if (A != B) c += J.hess_vv(B * n + i, A * n + j);
    return c;
}

}  // namespace

KVectorCoefficients free_sopde(const Model& model, const FieldPoint& w, const LagrangianJet& J) {
    const int n = model.n(), k = model.k();
    const double hc = rcond(J.hess_vv);
    if (!(hc > 1e-10)) throw NumericalError("velocity Hessian is singular", hc);
    const Vec rhs = J.dLdq - convective_term(model, J, w);
    KVectorCoefficients out;
    if (k == 1) {
        out.accel = Eigen::PartialPivLU<Mat>(J.hess_vv).solve(rhs).transpose();
        return out;
    }
    const SymLayout lay(n, k);
    Mat M = Mat::Zero(n, lay.size());
    for (int i = 0; i < n; ++i)
        for (const auto& [A, B] : lay.pairs)
            for (int j = 0; j < n; ++j)
                M(i, lay.index(j, A, B)) = el_coeff(J, n, i, j, A, B) / lay.weight(A, B);
    out.accel = lay.unpack(min_norm_solve(M, rhs));
    return out;
}

KVectorCoefficients free_sopde(const Model& model, const FieldPoint& w) {
    return free_sopde(model, w, jet(model, w));
}

ConstrainedSolution constrained_sopde_multiplier(const Model& model, const FieldPoint& w,
                                                 const LagrangianJet& J, const ConstraintForms& f,
                                                 const SolveOptions& opt) {
    const int n = model.n(), k = model.k(), m = model.m();
    if (opt.check_feasible && m > 0) {
        const double worst = f.phi.cwiseAbs().maxCoeff();
        if (worst > opt.tol_feas) throw NumericalError("point is off the constraint submanifold", worst);
    }
    const Vec rhs_el = J.dLdq - convective_term(model, J, w);
    ConstrainedSolution out;
    if (k == 1) {
        // [H eta^T; dPhi_v 0] [a; lambda] = [rhs; -dPhi_q v]
        Mat A = Mat::Zero(n + m, n + m);
        Vec b = Vec::Zero(n + m);
        A.topLeftCorner(n, n) = J.hess_vv;
        A.topRightCorner(n, m) = f.eta.transpose();
        A.bottomLeftCorner(m, n) = f.dphi.rightCols(n);
        b.head(n) = rhs_el;
        b.tail(m) = -f.dphi.leftCols(n) * w.v;
        out.condition = rcond(A);
        if (!(out.condition > 1e-13)) throw NumericalError("augmented system is singular", out.condition);
        const Vec x = Eigen::PartialPivLU<Mat>(A).solve(b);
        out.xi.accel = x.head(n).transpose();
        out.lambda = x.tail(m);
        out.residual = (A * x - b).norm();
        return out;
    }
    const SymLayout lay(n, k);
    const int ns = lay.size();
    Mat A = Mat::Zero(n + m * k, ns + m * k);
    Vec b = Vec::Zero(n + m * k);
    for (int i = 0; i < n; ++i) {
        for (const auto& [P, R] : lay.pairs)
            for (int j = 0; j < n; ++j)
                A(i, lay.index(j, P, R)) = el_coeff(J, n, i, j, P, R) / lay.weight(P, R);
        for (int a = 0; a < m; ++a)
            for (int B = 0; B < k; ++B) A(i, ns + a * k + B) = f.eta(a, B * n + i);
        b(i) = rhs_el(i);
    }
    for (int a = 0; a < m; ++a) {
        for (int Adir = 0; Adir < k; ++Adir) {
            const int row = n + a * k + Adir;
            for (int B = 0; B < k; ++B)
                for (int j = 0; j < n; ++j)
                    A(row, lay.index(j, Adir, B)) += f.dphi(a, n + B * n + j) / lay.weight(Adir, B);
            b(row) = -f.dphi.row(a).head(n).dot(w.v.segment(Adir * n, n));
        }
    }
    out.condition = rcond(A);
    const Vec x = min_norm_solve(A, b);
    out.residual = (A * x - b).norm();
    out.xi.accel = lay.unpack(x.head(ns));
    out.lambda = Mat::Zero(m, k);
    for (int a = 0; a < m; ++a)
        for (int B = 0; B < k; ++B) out.lambda(a, B) = x(ns + a * k + B);
    if (out.residual > 1e-8 * std::max(1.0, b.norm()))
        throw NumericalError("augmented system is inconsistent", out.condition);
    return out;
}

ConstrainedSolution constrained_sopde_multiplier(const Model& model, const FieldPoint& w,
                                                 const SolveOptions& opt) {
    const LagrangianJet J = jet(model, w);
    const double hc = rcond(J.hess_vv);
    if (!(hc > 1e-10)) throw NumericalError("velocity Hessian is singular", hc);
    return constrained_sopde_multiplier(model, w, J, constraint_forms(model, w), opt);
}

Vec el_defect(const Model& model, const LagrangianJet& J, const FieldPoint& w, const KVectorCoefficients& xi) {
    const auto omegas = omega_stack(model, J);
    const auto X = xi.vectors(w);
    Vec d = -energy_gradient(J, w);
    for (int A = 0; A < model.k(); ++A) d += omegas[A].transpose() * X[A];
    return d;
}

double off_span_norm(const Model& model, const Mat& eta, const Vec& covector, Mat* lambda) {
    const int n = model.n(), k = model.k(), m = model.m();
    Mat S = Mat::Zero(model.dim(), m * k);
    for (int a = 0; a < m; ++a)
        for (int B = 0; B < k; ++B) S.col(a * k + B).head(n) = eta.row(a).segment(B * n, n).transpose();
    const Vec c = min_norm_solve(S, covector);
    if (lambda) {
        *lambda = Mat::Zero(m, k);
        for (int a = 0; a < m; ++a)
            for (int B = 0; B < k; ++B) (*lambda)(a, B) = c(a * k + B);
    }
    return (covector - S * c).norm();
}

ProjectedSolution project_free_solution(const Model& model, const FieldPoint& w, double tol_compat) {
    const int n = model.n(), k = model.k();
    const LagrangianJet J = jet(model, w);
    const ConstraintPackage c = constraint_package(model, w, J, tol_compat);
    const ProjectorPair pp = projectors(model, c);
    ProjectedSolution out;
    out.free = free_sopde(model, w, J);
    out.projected.accel = Mat::Zero(k, n * k);
    const auto X = out.free.vectors(w);
    for (int A = 0; A < k; ++A) {
        const Vec PX = pp.P * X[A];
        out.projected.accel.row(A) = PX.tail(n * k).transpose();
        if (model.m() > 0) out.tangency = std::max(out.tangency, (c.dphi * PX).cwiseAbs().maxCoeff());
    }
    out.off_span = off_span_norm(model, c.eta, el_defect(model, J, w, out.projected), &out.lambda);
    return out;
}

}  // namespace ksnh
