#include "ksnh/ksla.hpp"

#include <cmath>
#include <limits>

namespace ksnh {

Subspace span_of(const Mat& columns) { return {orth(columns)}; }
Subspace whole_space(int N) { return {Mat::Identity(N, N)}; }
Subspace zero_space(int N) { return {Mat(N, 0)}; }

Subspace orthogonal(const KSymplecticSpace& space, const Subspace& W) {
    const int N = space.dim;
    const Eigen::Index d = W.basis.cols();
    if (d == 0) return whole_space(N);
    // rows w^T (omega^A)^T: u in W^perp iff w^T omega^A^T ... i.e. omega^A(u, w) = u^T omega^A w = 0
    Mat S(static_cast<Eigen::Index>(space.forms.size()) * d, N);
    for (std::size_t A = 0; A < space.forms.size(); ++A)
        S.middleRows(static_cast<Eigen::Index>(A) * d, d) = (space.forms[A] * W.basis).transpose();
    return {null_space(S)};
}

double inclusion_residual(const Subspace& small, const Subspace& big) {
    if (small.dim() == 0) return 0.0;
    const Mat r = small.basis - big.basis * (big.basis.transpose() * small.basis);
    return r.cwiseAbs().maxCoeff();
}

bool contains(const Subspace& big, const Subspace& small, double tol) {
    return inclusion_residual(small, big) < tol;
}

Subspace intersect(const Subspace& A, const Subspace& B, double tol) {
    const Eigen::Index N = A.basis.rows();
    Mat S(2 * N, N);
    S.topRows(N) = Mat::Identity(N, N) - A.basis * A.basis.transpose();
    S.bottomRows(N) = Mat::Identity(N, N) - B.basis * B.basis.transpose();
    Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > tol) ++r;
    return {svd.matrixV().rightCols(N - r)};
}

double subspace_distance(const Subspace& A, const Subspace& B) {
    if (A.dim() != B.dim()) return std::numeric_limits<double>::infinity();
    if (A.dim() == 0) return 0.0;
    const Mat PA = A.basis * A.basis.transpose();
    const Mat PB = B.basis * B.basis.transpose();
    return Eigen::JacobiSVD<Mat>(PA - PB).singularValues()(0);
}

Classification classify(const KSymplecticSpace& space, const Subspace& W) {
    const Subspace P = orthogonal(space, W);
    Classification c;
    c.dim_w = W.dim();
    c.dim_perp = P.dim();
    c.isotropic_residual = inclusion_residual(W, P);
    c.coisotropic_residual = inclusion_residual(P, W);
    c.isotropic = c.isotropic_residual < 1e-10;
    c.coisotropic = c.coisotropic_residual < 1e-10;
    c.lagrangian = c.isotropic && c.coisotropic;
    c.ksymplectic = intersect(W, P).dim() == 0;
    return c;
}

StructureCheck structure_validity(const KSymplecticSpace& space, double tol) {
    StructureCheck s;
    const int N = space.dim;
    Mat stacked(static_cast<Eigen::Index>(space.forms.size()) * N, N);
    for (std::size_t A = 0; A < space.forms.size(); ++A) {
        const Mat& w = space.forms[A];
        s.antisymmetry = std::max(s.antisymmetry, max_abs(w + w.transpose()));
        if (space.V.cols() > 0) s.vertical = std::max(s.vertical, max_abs(space.V.transpose() * w * space.V));
        stacked.middleRows(static_cast<Eigen::Index>(A) * N, N) = w;
    }
    s.common_kernel_dim = space.forms.empty() ? N : static_cast<int>(null_space(stacked).cols());
    const double scale = std::max(1.0, space.forms.empty() ? 0.0 : max_abs(stacked));
    s.valid = s.antisymmetry <= tol * scale && s.vertical <= tol * scale && s.common_kernel_dim == 0;
    return s;
}

KSymplecticSpace restrict_to(const KSymplecticSpace& space, const Subspace& W) {
    KSymplecticSpace r;
    r.dim = W.dim();
    for (const Mat& w : space.forms) r.forms.push_back(W.basis.transpose() * w * W.basis);
    const Subspace VW = intersect(span_of(space.V), W);
    r.V = W.basis.transpose() * VW.basis;
    return r;
}

KSymplecticSpace lagrangian_structure(const Model& model, const FieldPoint& w) {
    return {model.dim(), omega_stack(model, w), vertical_basis(model)};
}

CompatibilityStructureReport check_compatibility_structure(const Model& model, const FieldPoint& w, double tol_compat) {
    const int n = model.n(), N = model.dim();
    const LagrangianJet J = jet(model, w);
    const KSymplecticSpace space{N, omega_stack(model, J), vertical_basis(model)};
    const Vec x = w.pack();

    // D^v: tangent vectors whose base projection lies in D
    Mat ann = Mat::Zero(model.distribution_rank(), N);
    for (int a = 0; a < model.distribution_rank(); ++a)
        for (int i = 0; i < n; ++i) ann(a, i) = model.distribution_row(a)[i](x.data());
    const Subspace Dv{null_space(ann)};
    const ConstraintForms f = constraint_forms(model, w);
    const Subspace TM{null_space(f.dphi)};
    const Subspace H = intersect(TM, Dv);

    CompatibilityStructureReport r;
    r.dim_dv = Dv.dim();
    r.dim_tm = TM.dim();
    r.dim_h = H.dim();
    r.regular = regularity(model, J).regular;
    if (r.regular) {
        const ConstraintPackage c = constraint_package(model, w, J, tol_compat);
        r.compatible = c.compatible;
        r.c_condition = c.c_condition;
    }
    r.h_ksymplectic = intersect(H, orthogonal(space, H)).dim() == 0;
    r.coisotropy_residual = inclusion_residual(orthogonal(space, Dv), Dv);
    r.dv_coisotropic = r.coisotropy_residual < 1e-10;
    r.flags_agree = r.compatible == r.h_ksymplectic;
    return r;
}

}  // namespace ksnh
