#pragma once

#include <vector>

#include "ksnh/dynamics.hpp"
#include "ksnh/model.hpp"

namespace ksnh {

// (q^i, p^A_i) with p flattened as A*n + i, like v.
struct CotangentPoint {
    Vec q;
    Vec p;
};

CotangentPoint legendre(const Model& model, const FieldPoint& w);

// Newton on v with the v-Hessian as Jacobian; q is copied. Zero velocities when no guess is given.
FieldPoint legendre_inverse(const Model& model, const CotangentPoint& cp, const FieldPoint* guess = nullptr);

struct HamiltonianValue {
    double energy;    // E_L at the preimage
    double legendre;  // v p - L at the preimage
};

HamiltonianValue hamiltonian_value(const Model& model, const CotangentPoint& cp, const FieldPoint* guess = nullptr);

// Phi_alpha at the preimage.
double transported_constraint(const Model& model, const CotangentPoint& cp, int alpha,
                              const FieldPoint* guess = nullptr);

// Central differences of H, step 1e-6, through the inverse Legendre map. Layout (dH/dq | dH/dp).
Vec hamiltonian_gradient(const Model& model, const CotangentPoint& cp, const FieldPoint* guess = nullptr);

struct HamiltonResidual {
    std::vector<double> t;
    std::vector<double> first;   // max_i |dH/dp - dq/dt|
    std::vector<double> second;  // max_i |dH/dq + lambda eta + dp/dt|
    double max_first = 0.0;
    double max_second = 0.0;
};

// k = 1 solutions; five-point time differences, so the two steps at each end are skipped.
HamiltonResidual hamilton_residual(const Model& model, const FieldSolution& sol);

}  // namespace ksnh
