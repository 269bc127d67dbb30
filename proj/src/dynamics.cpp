#include "ksnh/dynamics.hpp"

#include <cmath>
#include <fstream>

#include "ksnh/geometry.hpp"
#include "ksnh/projector.hpp"

namespace ksnh {

using nlohmann::json;

namespace {

double positive(const json& j, const char* key, double fallback, bool required) {
    if (!j.contains(key)) {
        if (required) throw SchemaError(std::string("sim config: missing field '") + key + "'");
        return fallback;
    }
    if (!j.at(key).is_number()) throw SchemaError(std::string("sim config: field '") + key + "' must be a number");
    const double v = j.at(key).get<double>();
    if (!(v > 0.0) || !std::isfinite(v))
        throw SchemaError(std::string("sim config: field '") + key + "' must be positive");
    return v;
}

std::vector<Expr> expr_list(const json& j, const char* key) {
    std::vector<Expr> out;
    if (!j.is_array()) throw SchemaError(std::string("sim config: '") + key + "' must be an array");
    for (const auto& e : j) {
        if (e.is_number()) {
            out.push_back(constant(e.get<double>()));
        } else if (e.is_string()) {
            try {
                out.push_back(parse(e.get<std::string>()));
            } catch (const SyntaxError& err) {
                throw SchemaError(std::string("sim config: '") + key + "': " + err.what());
            }
        } else {
            throw SchemaError(std::string("sim config: '") + key + "' entries must be numbers or strings");
        }
    }
    return out;
}

}  // namespace

SimConfig sim_config_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("sim config must be a JSON object");
    SimConfig c;
    c.t_end = positive(j, "t_end", 1.0, true);
    c.h = positive(j, "h", 1e-3, true);
    if (j.contains("projection_every")) {
        c.projection_every = j.at("projection_every").get<int>();
        if (c.projection_every < 0) throw SchemaError("sim config: field 'projection_every' must be >= 0");
    }
    if (j.contains("store_every")) {
        c.store_every = j.at("store_every").get<int>();
        if (c.store_every < 1) throw SchemaError("sim config: field 'store_every' must be >= 1");
    }
    c.drift_tol = positive(j, "drift_tol", c.drift_tol, false);
    c.tol_feas = positive(j, "tol_feas", c.tol_feas, false);
    if (j.contains("spatial")) {
        const json& s = j.at("spatial");
        if (!s.contains("nodes") || !s.at("nodes").is_number_integer())
            throw SchemaError("sim config: field 'spatial.nodes' must be an integer");
        c.nodes = s.at("nodes").get<int>();
        if (c.nodes < 5) throw SchemaError("sim config: field 'spatial.nodes' must be at least 5");
        c.length = positive(s, "length", 1.0, true);
        const std::string bc = s.value("boundary", std::string("free"));
        if (bc == "free") c.boundary = Boundary::Free;
        else if (bc == "clamped") c.boundary = Boundary::Clamped;
        else if (bc == "periodic") c.boundary = Boundary::Periodic;
        else throw SchemaError("sim config: field 'spatial.boundary' must be free, clamped or periodic");
    }
    if (!j.contains("initial")) throw SchemaError("sim config: missing field 'initial'");
    const json& init = j.at("initial");
    if (!init.contains("q")) throw SchemaError("sim config: missing field 'initial.q'");
    c.q0 = expr_list(init.at("q"), "initial.q");
    c.v0 = init.contains("v") ? expr_list(init.at("v"), "initial.v") : std::vector<Expr>(c.q0.size(), constant(0.0));
    return c;
}

SimConfig load_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open sim config '" + path + "'");
    try {
        return sim_config_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw SchemaError("sim config '" + path + "': " + e.what());
    }
}

FieldPoint FieldSolution::point(int step, int node) const {
    const std::size_t a = at(step, node);
    FieldPoint w{Vec(n), Vec(n * k)};
    for (int i = 0; i < n; ++i) w.q(i) = q[a * n + i];
    for (int r = 0; r < n * k; ++r) w.v(r) = v[a * n * k + r];
    return w;
}

double FieldSolution::phi_max() const {
    double worst = 0.0;
    for (double p : phi) worst = std::max(worst, p);
    return worst;
}

double FieldSolution::energy_total(int step) const {
    double e = 0.0;
    for (int j = 0; j < nodes(); ++j) e += energy[at(step, j)];
    if (!s.empty() && s.size() > 1) e *= s[1] - s[0];
    return e;
}

namespace {

int step_count(const SimConfig& c) {
    const double r = c.t_end / c.h;
    const double n = std::round(r);
    return static_cast<int>(std::abs(r - n) < 1e-9 * std::max(1.0, r) ? n : std::ceil(r));
}

void store_k1(FieldSolution& sol, const Model& model, double t, const FieldPoint& w, const SolveOptions& opt) {
    const LagrangianJet J = jet(model, w);
    const ConstraintForms f = constraint_forms(model, w);
    const ConstrainedSolution cs = constrained_sopde_multiplier(model, w, J, f, opt);
    sol.t.push_back(t);
    sol.q.insert(sol.q.end(), w.q.data(), w.q.data() + w.q.size());
    sol.v.insert(sol.v.end(), w.v.data(), w.v.data() + w.v.size());
    sol.accel.insert(sol.accel.end(), cs.xi.accel.data(), cs.xi.accel.data() + cs.xi.accel.size());
    for (int a = 0; a < model.m(); ++a) sol.lambda.push_back(cs.lambda(a, 0));
    sol.energy.push_back(J.energy);
    sol.phi.push_back(model.m() ? f.phi.cwiseAbs().maxCoeff() : 0.0);
}

}  // namespace

Vec initial_values(const Model& model, const std::vector<Expr>& exprs, const char* what, double s,
                   double length) {
    if (static_cast<int>(exprs.size()) != model.n())
        throw SchemaError(std::string("sim config: 'initial.") + what + "' must have n = " +
                          std::to_string(model.n()) + " entries");
    auto params = model.spec().parameters;
    params["pi"] = M_PI;
    params["s"] = s;
    params["ell"] = length;
    const Binding b(1, 1, params);
    Vec out(model.n());
    for (int i = 0; i < model.n(); ++i) {
        for (const auto& name : variables(exprs[i]))
            if (!b.is_parameter(name))
                throw SchemaError(std::string("sim config: 'initial.") + what + "' may not use '" + name + "'");
        const double zero[2] = {0.0, 0.0};
        out(i) = Program(exprs[i], b)(zero);
    }
    return out;
}

FieldSolution integrate_k1(const Model& model, const SimConfig& config) {
    if (model.k() != 1) throw SchemaError("integrate_k1 needs a model with k = 1");
    const int n = model.n();
    FieldSolution sol;
    sol.n = n;
    sol.k = 1;
    sol.m = model.m();
    FieldPoint w{initial_values(model, config.q0, "q", 0.0, 0.0), initial_values(model, config.v0, "v", 0.0, 0.0)};
    if (model.m() > 0) {
        const double p0 = constraint_forms(model, w).phi.cwiseAbs().maxCoeff();
        if (p0 > config.tol_feas)
            throw SchemaError("sim config: initial data violates the constraints (max |Phi| = " +
                              std::to_string(p0) + ")");
    }
    const SolveOptions stage{config.tol_feas, false};
    auto rhs = [&](const Vec& q, const Vec& v) -> Vec {
        const FieldPoint p{q, v};
        const LagrangianJet J = jet(model, p);
        return constrained_sopde_multiplier(model, p, J, constraint_forms(model, p), stage).xi.accel.row(0).transpose();
    };
    const int steps = step_count(config);
    const double h = config.h;
    try {
        store_k1(sol, model, 0.0, w, stage);
        for (int s = 1; s <= steps; ++s) {
            const Vec a1 = rhs(w.q, w.v);
            const Vec q2 = w.q + 0.5 * h * w.v, v2 = w.v + 0.5 * h * a1;
            const Vec a2 = rhs(q2, v2);
            const Vec q3 = w.q + 0.5 * h * v2, v3 = w.v + 0.5 * h * a2;
            const Vec a3 = rhs(q3, v3);
            const Vec q4 = w.q + h * v3, v4 = w.v + h * a3;
            const Vec a4 = rhs(q4, v4);
            w.q += h / 6.0 * (w.v + 2.0 * v2 + 2.0 * v3 + v4);
            w.v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            if (!w.q.allFinite() || !w.v.allFinite()) throw NumericalError("state became non-finite");
            if (config.projection_every > 0 && s % config.projection_every == 0)
                project_velocities(model, w, 1e-15, 5);
            if (s % config.store_every == 0 || s == steps) {
                store_k1(sol, model, s * h, w, stage);
                if (sol.phi.back() > config.drift_tol) {
                    sol.complete = false;
                    sol.status = "constraint drift " + std::to_string(sol.phi.back()) + " exceeds tolerance at t = " +
                                 std::to_string(s * h);
                    return sol;
                }
            }
        }
    } catch (const NumericalError& e) {
        sol.complete = false;
        sol.status = std::string(e.what()) + " at t = " + std::to_string(sol.t.empty() ? 0.0 : sol.t.back());
    }
    return sol;
}

FieldSolution simulate(const Model& model, const SimConfig& config) {
    if (model.k() == 1) return integrate_k1(model, config);
    if (model.k() == 2) return integrate_1plus1(model, config);
    throw SchemaError("integration supports k = 1 and k = 2 only");
}

}  // namespace ksnh
