#pragma once

#include <string>
#include <vector>

#include "ksnh/linalg.hpp"
#include "ksnh/model.hpp"

namespace ksnh {

struct SecondOrder {
    double value = 0.0;
    Vec grad;
    Mat hess;  // symmetric, averaged over the (i,j) and (j,i) passes
};

// Exact value, gradient and Hessian over all slots (zero rows for unused slots).
SecondOrder second_order(const Program& p, const Vec& x);
Vec gradient(const Program& p, const Vec& x);
// d/ds p(x + s u) at s = 0.
double directional(const Program& p, const Vec& x, const Vec& u);

struct LagrangianJet {
    double L = 0.0;
    double energy = 0.0;
    Vec dLdq;     // n
    Vec dLdv;     // nk, also the momenta p^A_i
    Mat hess_vv;  // nk x nk
    Mat hess_qv;  // n x nk, (j, r) = d2L / dq^j dv_r
};

LagrangianJet jet(const Model& model, const FieldPoint& w);

// dE_L as a covector on the (dq | dv) basis.
Vec energy_gradient(const LagrangianJet& J, const FieldPoint& w);

struct RegularityReport {
    bool regular = false;
    double condition = 0.0;  // reciprocal condition number of hess_vv
    int nullity = 0;
    std::vector<std::string> degenerate;  // velocities L depends on at most linearly
};

RegularityReport regularity(const Model& model, const FieldPoint& w, double tol = 1e-10);
RegularityReport regularity(const Model& model, const LagrangianJet& J, double tol = 1e-10);

// omega^A as N x N matrices with omega^A(u, w) = u^T W w.
std::vector<Mat> omega_stack(const Model& model, const LagrangianJet& J);
std::vector<Mat> omega_stack(const Model& model, const FieldPoint& w);

// Basis of the vertical subspace (dq = 0) as columns.
Mat vertical_basis(const Model& model);

struct ConstraintForms {
    Vec phi;   // m
    Mat dphi;  // m x N
    Mat eta;   // m x nk, column A*n + i holds eta^A_{alpha i}
};

ConstraintForms constraint_forms(const Model& model, const FieldPoint& w);
// v-block of dphi: the forms a Chetaev rule would produce for any model.
Mat chetaev_forms(const ConstraintForms& f, int n);

struct ConstraintPackage : ConstraintForms {
    Mat Z;  // m x nk, vertical components (Z_alpha)^j_B
    Mat C;  // C(alpha, beta) = Z_alpha(Phi_beta)
    Mat Cinv;
    bool compatible = false;
    double c_condition = 0.0;
    int eta_rank = 0;
};

// Throws NumericalError on a singular Hessian or rank(eta) < m; incompatibility is a flag.
ConstraintPackage constraint_package(const Model& model, const FieldPoint& w, double tol_compat = 1e-10);
ConstraintPackage constraint_package(const Model& model, const FieldPoint& w, const LagrangianJet& J,
                                     double tol_compat = 1e-10);

// Z_alpha as full N-vectors (zero q-block), one column each.
Mat z_columns(const Model& model, const ConstraintPackage& c);

// c_i = sum_{A,j} d2L/dq^j dv^i_A v^j_A
Vec convective_term(const Model& model, const LagrangianJet& J, const FieldPoint& w);

// d/dt^A(dL/dv^i_A) - dL/dq^i + lambda^alpha_B eta^B_{alpha i} given accel(A, B*n+j) = (xi_A)^j_B
// and lambda(alpha, B). Zero on solutions.
Vec el_residual(const Model& model, const LagrangianJet& J, const FieldPoint& w, const Mat& accel,
                const Mat& eta, const Mat& lambda);

// Minimum-norm Newton correction of v onto Phi = 0 (q fixed). Returns the final max |Phi|.
double project_velocities(const Model& model, FieldPoint& w, double tol = 1e-12, int max_iter = 50);

}  // namespace ksnh
