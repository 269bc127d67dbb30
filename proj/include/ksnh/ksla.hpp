#pragma once

#include <vector>

#include "ksnh/geometry.hpp"
#include "ksnh/linalg.hpp"

namespace ksnh {

struct KSymplecticSpace {
    int dim = 0;
    std::vector<Mat> forms;  // k antisymmetric dim x dim matrices
    Mat V;                   // basis of the distinguished subspace (columns)
};

struct Subspace {
    Mat basis;  // orthonormal columns
    int dim() const { return static_cast<int>(basis.cols()); }
};

// Orthonormalizes the columns of a spanning set.
Subspace span_of(const Mat& columns);
Subspace whole_space(int N);
Subspace zero_space(int N);

Subspace orthogonal(const KSymplecticSpace& space, const Subspace& W);

// Residual of projecting the smaller basis onto the larger span; inclusion iff < tol.
double inclusion_residual(const Subspace& small, const Subspace& big);
bool contains(const Subspace& big, const Subspace& small, double tol = 1e-10);

// Nullspace of the stacked complement projectors [I - P_A; I - P_B].
Subspace intersect(const Subspace& A, const Subspace& B, double tol = 1e-10);

// Largest principal-angle sine between equal-dimension subspaces (inf when dims differ).
double subspace_distance(const Subspace& A, const Subspace& B);

struct Classification {
    bool isotropic = false;     // W in W^perp
    bool coisotropic = false;   // W^perp in W
    bool lagrangian = false;    // W = W^perp
    bool ksymplectic = false;   // W cap W^perp = {0}
    int dim_w = 0;
    int dim_perp = 0;
    double isotropic_residual = 0.0;
    double coisotropic_residual = 0.0;
};

Classification classify(const KSymplecticSpace& space, const Subspace& W);

struct StructureCheck {
    double antisymmetry = 0.0;     // max |w + w^T|
    double vertical = 0.0;         // max |V^T w V|
    int common_kernel_dim = 0;
    bool valid = false;
};

StructureCheck structure_validity(const KSymplecticSpace& space, double tol = 1e-10);

// Forms pulled back to an orthonormal basis of W; V becomes V cap W in W coordinates.
KSymplecticSpace restrict_to(const KSymplecticSpace& space, const Subspace& W);

// The Lagrangian k-symplectic structure at a point: omega stack plus the vertical subspace.
KSymplecticSpace lagrangian_structure(const Model& model, const FieldPoint& w);

struct CompatibilityStructureReport {
    bool regular = false;
    bool compatible = false;
    bool h_ksymplectic = false;
    bool flags_agree = false;
    bool dv_coisotropic = false;
    double coisotropy_residual = 0.0;
    double c_condition = 0.0;
    int dim_dv = 0;
    int dim_tm = 0;
    int dim_h = 0;
};

CompatibilityStructureReport check_compatibility_structure(const Model& model, const FieldPoint& w, double tol_compat = 1e-10);

}  // namespace ksnh
