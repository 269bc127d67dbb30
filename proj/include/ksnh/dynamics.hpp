#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ksnh/model.hpp"

namespace ksnh {

enum class Boundary { Free, Clamped, Periodic };

struct SimConfig {
    double t_end = 1.0;
    double h = 1e-3;
    int nodes = 0;       // k = 2 only
    double length = 1.0; // k = 2 only
    Boundary boundary = Boundary::Free;
    // Initial q and qdot: one expression per field. For k = 2 they may use s, ell, pi and
    // model parameters; for k = 1, pi and model parameters.
    std::vector<Expr> q0;
    std::vector<Expr> v0;
    int projection_every = 1;
    int store_every = 1;
    double drift_tol = 1e-8;
    double tol_feas = 1e-8;
};

SimConfig load_sim_config(const std::string& path);
SimConfig sim_config_from_json(const nlohmann::json& j);

// Dense per-(step, node) storage. For k = 1 there is a single node.
struct FieldSolution {
    int n = 0, k = 1, m = 0;
    std::vector<double> t;
    std::vector<double> s;
    std::vector<double> q;       // [step][node][n]
    std::vector<double> v;       // [step][node][n*k]
    std::vector<double> accel;   // [step][node][n], time accelerations
    std::vector<double> lambda;  // [step][node][m*k], lambda(alpha, A) at alpha*k + A
    std::vector<double> energy;  // [step][node]
    std::vector<double> phi;     // [step][node], max |Phi|
    bool complete = true;
    std::string status = "ok";

    int steps() const { return static_cast<int>(t.size()); }
    int nodes() const { return s.empty() ? 1 : static_cast<int>(s.size()); }
    std::size_t at(int step, int node) const {
        return static_cast<std::size_t>(step) * nodes() + node;
    }
    FieldPoint point(int step, int node = 0) const;
    double phi_max() const;
    double energy_total(int step) const;  // sum over nodes, times ds for k = 2
};

// Evaluates initial-data expressions at position s.
Vec initial_values(const Model& model, const std::vector<Expr>& exprs, const char* what, double s,
                   double length);

// RK4 with constrained accelerations; on failure returns the partial run with complete = false.
FieldSolution integrate_k1(const Model& model, const SimConfig& config);

// Which fields play which role in a (1+1) model whose extra fields are eliminable.
struct FieldRoles {
    std::vector<int> evolution;  // fields with d2L/dv^i_1 dv^i_1 != 0
    struct Lowered {
        int a;  // q^a = d q^b / ds
        int b;
        int c;  // q^c = d/ds (dL/dv^a_2)
    };
    std::vector<Lowered> lowered;
};

// Throws SchemaError with a diagnostic when the model does not fit.
FieldRoles detect_roles(const Model& model);

FieldSolution integrate_1plus1(const Model& model, const SimConfig& config);

FieldSolution simulate(const Model& model, const SimConfig& config);

// Second-order spatial differences; one-sided at the ends unless periodic.
struct Stencil {
    int M = 0;
    double ds = 1.0;
    Boundary bc = Boundary::Free;
    Vec d1(const Vec& f) const;
    Vec d2(const Vec& f) const;
};

// Node positions: j*ell/M when periodic, j*ell/(M-1) otherwise.
std::vector<double> spatial_grid(int M, double length, Boundary bc);

std::string csv_header(const FieldSolution& sol);
void write_solution(const FieldSolution& sol, const std::string& path);
std::string solution_csv(const FieldSolution& sol);
nlohmann::ordered_json solution_summary(const FieldSolution& sol);
FieldSolution read_solution(const Model& model, const std::string& path);

}  // namespace ksnh
