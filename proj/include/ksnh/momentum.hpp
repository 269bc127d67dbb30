#pragma once

#include <string>
#include <vector>

#include "ksnh/dynamics.hpp"
#include "ksnh/model.hpp"

namespace ksnh {

// Throws SchemaError naming the section when the model has none by that name.
int require_section(const Model& model, const std::string& name);

// xi^i evaluated at w.
Vec section_values(const Model& model, int section, const FieldPoint& w);

struct AnnihilationReport {
    bool pass = true;
    double max_contraction = 0.0;  // max over points, alpha, A of |eta^A_{alpha i} xi^i|
    int points = 0;
};

AnnihilationReport annihilation_check(const Model& model, int section, const std::vector<FieldPoint>& points,
                                      double tol = 1e-10);

// J^A = dL/dv^i_A xi^i
Vec momentum_components(const Model& model, const FieldPoint& w, int section);

// Complete lift applied to L: xi^i dL/dq^i + v^j_A dxi^i/dq^j dL/dv^i_A.
double lift_defect(const Model& model, int section, const FieldPoint& w);

struct MomentumResidual {
    int k = 1;
    std::vector<double> t;         // per interior row
    std::vector<double> s;         // k = 2 only
    std::vector<double> residual;  // LHS - RHS
    std::vector<double> J;         // [step][node][k] over the whole solution
    double max = 0.0;
    double l2 = 0.0;  // sqrt(sum r^2 dt ds)
    double j_drift = 0.0;  // k = 1: max |J(t) - J(0)|
};

// Interior central differences in t (and s); boundary nodes are excluded.
MomentumResidual momentum_residual(const Model& model, const FieldSolution& sol, int section);

std::string residual_csv(const MomentumResidual& r);

}  // namespace ksnh
