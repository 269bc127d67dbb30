#pragma once

#include <vector>

#include "ksnh/geometry.hpp"

namespace ksnh {

struct ProjectorPair {
    Mat P;
    Mat Q;
};

ProjectorPair projectors(const Model& model, const FieldPoint& w, double tol_compat = 1e-10);
ProjectorPair projectors(const Model& model, const ConstraintPackage& c);

// accel(A, B*n + j) = (xi_A)^j_B; the q-part (xi_A)^i = v^i_A is implied.
struct KVectorCoefficients {
    Mat accel;

    // X_A = (v_A | accel row A), one TangentVector per direction.
    std::vector<Vec> vectors(const FieldPoint& w) const;
    // max |(xi_A)^i_B - (xi_B)^i_A|
    double asymmetry(int n) const;
};

KVectorCoefficients free_sopde(const Model& model, const FieldPoint& w);
KVectorCoefficients free_sopde(const Model& model, const FieldPoint& w, const LagrangianJet& J);

struct ConstrainedSolution {
    KVectorCoefficients xi;
    Mat lambda;  // m x k
    double condition = 0.0;
    double residual = 0.0;  // least-squares residual of the augmented system
};

struct SolveOptions {
    double tol_feas = 1e-8;
    bool check_feasible = true;
};

ConstrainedSolution constrained_sopde_multiplier(const Model& model, const FieldPoint& w,
                                                 const SolveOptions& opt = {});
ConstrainedSolution constrained_sopde_multiplier(const Model& model, const FieldPoint& w,
                                                 const LagrangianJet& J, const ConstraintForms& f,
                                                 const SolveOptions& opt = {});

struct ProjectedSolution {
    KVectorCoefficients free;
    KVectorCoefficients projected;
    Mat lambda;              // recovered from the defect by least squares
    double off_span = 0.0;   // norm of the defect component outside span{eta}
    double tangency = 0.0;   // max |dPhi(X_A)|
};

ProjectedSolution project_free_solution(const Model& model, const FieldPoint& w, double tol_compat = 1e-10);

// sum_A iota_{X_A} omega^A - dE_L as an N-covector.
Vec el_defect(const Model& model, const LagrangianJet& J, const FieldPoint& w, const KVectorCoefficients& xi);

// Splits a covector into sum lambda^alpha_B (eta^B_alpha, 0) plus a remainder; returns remainder norm.
double off_span_norm(const Model& model, const Mat& eta, const Vec& covector, Mat* lambda = nullptr);

}  // namespace ksnh
