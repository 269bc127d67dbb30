#include "ksnh/model.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace ksnh {

using nlohmann::json;

Vec FieldPoint::pack() const {
    Vec x(q.size() + v.size());
    x << q, v;
    return x;
}

FieldPoint FieldPoint::unpack(const Vec& x, int n, int k) {
    if (x.size() != n + n * k) throw SchemaError("tangent-space vector has wrong length");
    return {x.head(n), x.segment(n, n * k)};
}

namespace {

void check_expr(const Expr& e, const Binding& b, const std::string& where) {
    if (!e) throw SchemaError(where + ": missing expression");
    for (const auto& name : variables(e)) {
        try {
            b.slot(name);
        } catch (const BindError& err) {
            throw BindError(where + ": " + err.what());
        }
    }
}

}  // namespace

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
    const int n = spec_.n, k = spec_.k, m = spec_.m();
    if (n < 1) throw SchemaError("n must be a positive integer");
    if (k < 1) throw SchemaError("k must be a positive integer");
    if (m >= n * k) throw SchemaError("number of constraints must be below n*k");
    binding_ = Binding(n, k, spec_.parameters);

    check_expr(spec_.lagrangian, binding_, "lagrangian");
    lagrangian_ = Program(spec_.lagrangian, binding_);
    for (int a = 0; a < m; ++a) {
        const std::string where = "constraints[" + std::to_string(a) + "]";
        check_expr(spec_.constraints[a], binding_, where);
        constraints_.emplace_back(spec_.constraints[a], binding_);
    }
    if (spec_.form_mode == FormMode::Explicit) {
        if (static_cast<int>(spec_.forms.size()) != m * k * n)
            throw SchemaError("explicit form table must hold m*k*n entries");
        for (std::size_t e = 0; e < spec_.forms.size(); ++e) {
            const int a = static_cast<int>(e) / (k * n);
            check_expr(spec_.forms[e], binding_, "constraint_forms.forms[" + std::to_string(a) + "]");
            forms_.emplace_back(spec_.forms[e], binding_);
        }
    } else {
        spec_.forms.clear();
    }
    for (const auto& s : spec_.symmetries) {
        if (static_cast<int>(s.components.size()) != n)
            throw SchemaError("symmetry '" + s.name + "' must have n components");
        std::vector<Program> progs;
        for (int i = 0; i < n; ++i) {
            check_expr(s.components[i], binding_, "symmetry '" + s.name + "'");
            progs.emplace_back(s.components[i], binding_);
        }
        sections_.push_back(std::move(progs));
    }
    for (std::size_t a = 0; a < spec_.distribution.size(); ++a) {
        const auto& row = spec_.distribution[a];
        if (static_cast<int>(row.size()) != n)
            throw SchemaError("distribution row " + std::to_string(a) + " must have n entries");
        std::vector<Program> progs;
        for (int i = 0; i < n; ++i) {
            check_expr(row[i], binding_, "distribution[" + std::to_string(a) + "]");
            Program p(row[i], binding_);
            for (int s : p.slots())
                if (s >= n) throw SchemaError("distribution entries may depend on q only");
            progs.push_back(std::move(p));
        }
        distribution_.push_back(std::move(progs));
    }
}

int Model::section_index(const std::string& name) const {
    for (std::size_t s = 0; s < spec_.symmetries.size(); ++s)
        if (spec_.symmetries[s].name == name) return static_cast<int>(s);
    return -1;
}

namespace {

Expr parse_field(const json& j, const std::string& where) {
    if (j.is_number()) return constant(j.get<double>());
    if (!j.is_string()) throw SchemaError(where + ": expected an expression string");
    try {
        return parse(j.get<std::string>());
    } catch (const SyntaxError& e) {
        throw SchemaError(where + ": " + e.what());
    }
}

const json& require(const json& j, const char* key) {
    if (!j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
    return j.at(key);
}

std::vector<Expr> parse_row(const json& j, int n, const std::string& where) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        throw SchemaError(where + ": expected an array of " + std::to_string(n) + " expressions");
    std::vector<Expr> out;
    for (int i = 0; i < n; ++i) out.push_back(parse_field(j[i], where));
    return out;
}

json expr_json(const Expr& e) { return print(e); }

}  // namespace

Model model_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("model file must hold a JSON object");
    ModelSpec s;
    s.name = j.value("name", std::string("unnamed"));
    const json& jn = require(j, "n");
    const json& jk = require(j, "k");
    if (!jn.is_number_integer() || !jk.is_number_integer())
        throw SchemaError("fields 'n' and 'k' must be integers");
    s.n = jn.get<int>();
    s.k = jk.get<int>();
    if (s.n < 1 || s.k < 1) throw SchemaError("fields 'n' and 'k' must be positive");
    if (j.contains("parameters")) {
        const json& p = j.at("parameters");
        if (!p.is_object()) throw SchemaError("'parameters' must be an object");
        for (auto it = p.begin(); it != p.end(); ++it) {
            if (!it->is_number()) throw SchemaError("parameter '" + it.key() + "' must be a number");
            s.parameters[it.key()] = it->get<double>();
        }
    }
    s.lagrangian = parse_field(require(j, "lagrangian"), "lagrangian");
    if (j.contains("constraints")) {
        const json& c = j.at("constraints");
        if (!c.is_array()) throw SchemaError("'constraints' must be an array");
        for (std::size_t a = 0; a < c.size(); ++a)
            s.constraints.push_back(parse_field(c[a], "constraints[" + std::to_string(a) + "]"));
    }
    const int m = s.m();
    if (j.contains("constraint_forms")) {
        const json& f = j.at("constraint_forms");
        const std::string mode = f.value("mode", std::string("chetaev"));
        if (mode == "explicit") {
            s.form_mode = FormMode::Explicit;
            const json& rows = require(f, "forms");
            if (!rows.is_array() || static_cast<int>(rows.size()) != m)
                throw SchemaError("constraint_forms.forms must hold one row per constraint (" +
                                  std::to_string(m) + ")");
            for (int a = 0; a < m; ++a) {
                const std::string where = "constraint_forms.forms[" + std::to_string(a) + "]";
                const json& row = rows[a];
                if (!row.is_array() || static_cast<int>(row.size()) != s.k)
                    throw SchemaError(where + ": expected " + std::to_string(s.k) + " blocks of " +
                                      std::to_string(s.n) + " entries");
                for (int A = 0; A < s.k; ++A) {
                    auto block = parse_row(row[A], s.n, where + "[" + std::to_string(A) + "]");
                    s.forms.insert(s.forms.end(), block.begin(), block.end());
                }
            }
        } else if (mode != "chetaev") {
            throw SchemaError("constraint_forms.mode must be 'chetaev' or 'explicit'");
        }
    }
    if (j.contains("symmetries")) {
        for (const auto& sj : j.at("symmetries")) {
            SymmetrySection sec;
            sec.name = require(sj, "name").get<std::string>();
            sec.components = parse_row(require(sj, "components"), s.n, "symmetry '" + sec.name + "'");
            s.symmetries.push_back(std::move(sec));
        }
    }
    if (j.contains("distribution")) {
        const json& d = j.at("distribution");
        for (std::size_t a = 0; a < d.size(); ++a)
            s.distribution.push_back(parse_row(d[a], s.n, "distribution[" + std::to_string(a) + "]"));
    }
    return Model(std::move(s));
}

json model_to_json(const ModelSpec& s) {
    json j = json::object();
    j["name"] = s.name;
    j["n"] = s.n;
    j["k"] = s.k;
    j["parameters"] = json::object();
    for (const auto& [key, value] : s.parameters) j["parameters"][key] = value;
    j["lagrangian"] = expr_json(s.lagrangian);
    j["constraints"] = json::array();
    for (const auto& c : s.constraints) j["constraints"].push_back(expr_json(c));
    if (s.form_mode == FormMode::Explicit) {
        json rows = json::array();
        for (int a = 0; a < s.m(); ++a) {
            json row = json::array();
            for (int A = 0; A < s.k; ++A) {
                json block = json::array();
                for (int i = 0; i < s.n; ++i) block.push_back(expr_json(s.forms[(a * s.k + A) * s.n + i]));
                row.push_back(block);
            }
            rows.push_back(row);
        }
        j["constraint_forms"] = {{"mode", "explicit"}, {"forms", rows}};
    } else {
        j["constraint_forms"] = {{"mode", "chetaev"}};
    }
    j["symmetries"] = json::array();
    for (const auto& sec : s.symmetries) {
        json comps = json::array();
        for (const auto& c : sec.components) comps.push_back(expr_json(c));
        j["symmetries"].push_back({{"name", sec.name}, {"components", comps}});
    }
    if (!s.distribution.empty()) {
        json d = json::array();
        for (const auto& row : s.distribution) {
            json r = json::array();
            for (const auto& e : row) r.push_back(expr_json(e));
            d.push_back(r);
        }
        j["distribution"] = d;
    }
    return j;
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open model file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

Model resolve_model(const std::string& path_or_name) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(path_or_name, ec)) return load_model(path_or_name);
    for (const auto& name : builtin_names())
        if (name == path_or_name) return builtin(name);
    throw SchemaError("'" + path_or_name + "' is neither a model file nor a builtin model");
}

namespace {

bool is_const(const Expr& e, double v) { return e->kind == NodeKind::Const && e->value == v; }

// Appends coeff * var to acc, keeping the printed form close to hand-written input.
Expr accumulate(Expr acc, const Expr& coeff, const std::string& var) {
    if (is_const(coeff, 0.0)) return acc;
    bool negate = false;
    Expr c = coeff;
    if (c->kind == NodeKind::Neg) {
        negate = true;
        c = c->lhs;
    } else if (c->kind == NodeKind::Const && c->value < 0.0) {
        negate = true;
        c = constant(-c->value);
    }
    Expr term = is_const(c, 1.0) ? variable(var) : mul(c, variable(var));
    if (!acc) return negate ? neg(term) : term;
    return negate ? sub(acc, term) : add(acc, term);
}

ModelSpec strip(const ModelSpec& base) {
    ModelSpec s = base;
    s.constraints.clear();
    s.forms.clear();
    s.form_mode = FormMode::Chetaev;
    s.distribution.clear();
    return s;
}

}  // namespace

Model build_linear_constraint_model(const ModelSpec& base, const FormTable& mu) {
    ModelSpec s = strip(base);
    for (std::size_t a = 0; a < mu.size(); ++a) {
        if (static_cast<int>(mu[a].size()) != s.k)
            throw SchemaError("mu row " + std::to_string(a) + " must have k blocks");
        Expr acc;
        for (int B = 0; B < s.k; ++B) {
            if (static_cast<int>(mu[a][B].size()) != s.n)
                throw SchemaError("mu row " + std::to_string(a) + " block must have n entries");
            for (int i = 0; i < s.n; ++i) acc = accumulate(acc, mu[a][B][i], v_name(i + 1, B + 1));
        }
        s.constraints.push_back(acc ? acc : constant(0.0));
    }
    return Model(std::move(s));
}

Model build_distribution_model(const ModelSpec& base, const std::vector<std::vector<Expr>>& phi) {
    FormTable mu;
    for (int A = 0; A < base.k; ++A) {
        for (const auto& row : phi) {
            if (static_cast<int>(row.size()) != base.n)
                throw SchemaError("distribution rows must have n entries");
            std::vector<std::vector<Expr>> blocks(base.k, std::vector<Expr>(base.n, constant(0.0)));
            blocks[A] = row;
            mu.push_back(std::move(blocks));
        }
    }
    ModelSpec s = build_linear_constraint_model(base, mu).spec();
    s.distribution = phi;
    return Model(std::move(s));
}

Model build_connection_constraint_model(const ModelSpec& base,
                                        const std::vector<std::vector<Expr>>& christoffel) {
    const int m = static_cast<int>(christoffel.size());
    const int nb = base.n - m;
    if (m < 1 || nb < 1) throw SchemaError("connection needs 0 < m < n fibre coordinates");
    FormTable mu;
    for (int A = 0; A < base.k; ++A) {
        for (int a = 0; a < m; ++a) {
            if (static_cast<int>(christoffel[a].size()) != nb)
                throw SchemaError("Christoffel table must be m x (n-m)");
            std::vector<std::vector<Expr>> blocks(base.k, std::vector<Expr>(base.n, constant(0.0)));
            blocks[A][nb + a] = constant(1.0);
            for (int b = 0; b < nb; ++b) blocks[A][b] = christoffel[a][b];
            mu.push_back(std::move(blocks));
        }
    }
    // Fibre velocity first so Gamma = 0 prints as v^alpha_A.
    ModelSpec s = strip(base);
    for (const auto& blocks : mu) {
        Expr acc;
        for (int A = 0; A < s.k; ++A)
            for (int i = nb; i < s.n; ++i) acc = accumulate(acc, blocks[A][i], v_name(i + 1, A + 1));
        for (int A = 0; A < s.k; ++A)
            for (int i = 0; i < nb; ++i) acc = accumulate(acc, blocks[A][i], v_name(i + 1, A + 1));
        s.constraints.push_back(acc);
    }
    return Model(std::move(s));
}

namespace {

std::vector<Expr> exprs(std::initializer_list<const char*> src) {
    std::vector<Expr> out;
    for (const char* s : src) out.push_back(parse(s));
    return out;
}

ModelSpec kinetic(const std::string& name, int n, int k) {
    ModelSpec s;
    s.name = name;
    s.n = n;
    s.k = k;
    std::string L;
    for (int A = 1; A <= k; ++A)
        for (int i = 1; i <= n; ++i) L += (L.empty() ? "" : " + ") + v_name(i, A) + "^2";
    s.lagrangian = parse("0.5*(" + L + ")");
    return s;
}

}  // namespace

Model builtin(const std::string& name) {
    if (name == "cosserat") {
        ModelSpec s;
        s.name = "cosserat";
        s.n = 7;
        s.k = 2;
        s.parameters = {{"rho", 1.0}, {"alpha", 1.0}, {"beta", 1.0}, {"K", 1.0}, {"R", 1.0}};
        s.lagrangian = parse(
            "rho/2*(v1_1^2 + v2_1^2) + alpha/2*v3_1^2 - beta/2*v3_2^2 - K/2*(v4_2^2 + v5_2^2)"
            " + q6*(q4 - v1_2) + q7*(q5 - v2_2)");
        s.constraints = exprs({"v1_1 + R*v3_1*v2_2", "v2_1 - R*v3_1*v1_2"});
        s.form_mode = FormMode::Explicit;
        s.forms = exprs({"1", "0", "R*v2_2", "0", "0", "0", "0",  // eta_1, A = 1
                         "0", "0", "0", "0", "0", "0", "0",       // eta_1, A = 2
                         "0", "1", "-R*v1_2", "0", "0", "0", "0",
                         "0", "0", "0", "0", "0", "0", "0"});
        s.symmetries.push_back({"main", exprs({"-R*v2_2", "R*v1_2", "1", "0", "0", "0", "0"})});
        return Model(std::move(s));
    }
    if (name == "free_particle") {
        ModelSpec s = kinetic("free_particle", 2, 1);
        s.symmetries.push_back({"x", exprs({"1", "0"})});
        s.symmetries.push_back({"y", exprs({"0", "1"})});
        return Model(std::move(s));
    }
    if (name == "knife_edge") {
        ModelSpec s = kinetic("knife_edge", 3, 1);
        s.symmetries.push_back({"rotation", exprs({"0", "0", "1"})});
        ModelSpec out = build_distribution_model(s, {exprs({"sin(q3)", "-cos(q3)", "0"})}).spec();
        out.name = "knife_edge";
        return Model(std::move(out));
    }
    if (name == "harmonic") {
        ModelSpec s;
        s.name = "harmonic";
        s.n = 1;
        s.k = 1;
        s.lagrangian = parse("0.5*v1_1^2 - 0.5*q1^2");
        return Model(std::move(s));
    }
    if (name == "flat_connection") {
        ModelSpec s = kinetic("flat_connection", 2, 2);
        return build_connection_constraint_model(s, {{constant(0.0)}});
    }
    throw SchemaError("unknown builtin model '" + name + "'");
}

std::vector<std::string> builtin_names() {
    return {"cosserat", "free_particle", "knife_edge", "harmonic", "flat_connection"};
}

}  // namespace ksnh
