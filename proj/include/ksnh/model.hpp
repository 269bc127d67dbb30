#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "ksnh/expr.hpp"
#include "ksnh/linalg.hpp"

namespace ksnh {

enum class FormMode { Chetaev, Explicit };

struct SymmetrySection {
    std::string name;
    std::vector<Expr> components;  // n entries, functions of (q, v)
};

struct ModelSpec {
    std::string name;
    int n = 0;
    int k = 1;
    std::map<std::string, double> parameters;
    Expr lagrangian;
    std::vector<Expr> constraints;
    FormMode form_mode = FormMode::Chetaev;
    // Explicit mode: eta^A_{alpha i} at index (alpha*k + A)*n + i, all 0-based.
    std::vector<Expr> forms;
    std::vector<SymmetrySection> symmetries;
    // Optional annihilator of a distribution D on Q: rows (phi_a)_i, set by the k-copies builder.
    std::vector<std::vector<Expr>> distribution;

    int m() const { return static_cast<int>(constraints.size()); }
};

// A point (q^i, v^i_A) of the k-velocity bundle; v flattened as A*n + i.
struct FieldPoint {
    Vec q;
    Vec v;

    Vec pack() const;
    static FieldPoint unpack(const Vec& x, int n, int k);
};

// Validated spec with every expression compiled against its binding.
class Model {
public:
    explicit Model(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    const Binding& binding() const { return binding_; }
    const std::string& name() const { return spec_.name; }
    int n() const { return spec_.n; }
    int k() const { return spec_.k; }
    int m() const { return spec_.m(); }
    int dim() const { return spec_.n + spec_.n * spec_.k; }
    int vslot(int i, int A) const { return spec_.n + A * spec_.n + i; }

    const Program& lagrangian() const { return lagrangian_; }
    const Program& constraint(int alpha) const { return constraints_[alpha]; }
    const Program& form(int alpha, int A, int i) const {
        return forms_[(alpha * spec_.k + A) * spec_.n + i];
    }
    int section_index(const std::string& name) const;  // -1 if absent
    const std::vector<Program>& section(int s) const { return sections_[s]; }
    int distribution_rank() const { return static_cast<int>(distribution_.size()); }
    const std::vector<Program>& distribution_row(int a) const { return distribution_[a]; }

private:
    ModelSpec spec_;
    Binding binding_;
    Program lagrangian_;
    std::vector<Program> constraints_;
    std::vector<Program> forms_;
    std::vector<std::vector<Program>> sections_;
    std::vector<std::vector<Program>> distribution_;
};

Model load_model(const std::string& path);
Model model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelSpec& spec);

// A file path if it exists, otherwise a builtin name.
Model resolve_model(const std::string& path_or_name);

using FormTable = std::vector<std::vector<std::vector<Expr>>>;  // [alpha][A][i]

// Phi_alpha = sum_B (mu^B_alpha)_i v^i_B, Chetaev forms.
Model build_linear_constraint_model(const ModelSpec& base, const FormTable& mu);

// k copies of D with annihilator rows phi_a: Phi^A_a = (phi_a)_i v^i_A, ordered (A, a).
Model build_distribution_model(const ModelSpec& base, const std::vector<std::vector<Expr>>& phi);

// Last m coordinates are fibre coordinates: Phi^A_alpha = v^alpha_A + Gamma^alpha_a v^a_A.
Model build_connection_constraint_model(const ModelSpec& base,
                                        const std::vector<std::vector<Expr>>& christoffel);

Model builtin(const std::string& name);
std::vector<std::string> builtin_names();

}  // namespace ksnh
