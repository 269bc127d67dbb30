#include "ksnh/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ksnh/dynamics.hpp"
#include "ksnh/geometry.hpp"
#include "ksnh/ksla.hpp"
#include "ksnh/momentum.hpp"
#include "ksnh/projector.hpp"
#include "ksnh/report.hpp"

namespace ksnh {

using ojson = nlohmann::ordered_json;

namespace {

struct Globals {
    std::uint64_t seed = 42;
    double tol_compat = 1e-10;
    double tol_feas = 1e-8;
    std::string format = "json";
    bool timings = false;
};

class Stopwatch {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ojson matrix_json(const Mat& a) {
    ojson rows = ojson::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        ojson row = ojson::array();
        for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

ojson vector_json(const Vec& v) {
    ojson out = ojson::array();
    for (double x : v) out.push_back(x);
    return out;
}

Mat matrix_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw SchemaError(what + " must be a non-empty array of rows");
    Mat a(j.size(), j[0].size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != j[0].size()) throw SchemaError(what + " rows must have equal length");
        for (std::size_t c = 0; c < j[r].size(); ++c) {
            if (!j[r][c].is_number()) throw SchemaError(what + " entries must be numbers");
            a(r, c) = j[r][c].get<double>();
        }
    }
    return a;
}

// Model from a file path or builtin name, plus the bytes that identify it.
std::pair<Model, std::string> open_model(const std::string& ref) {
    Model m = resolve_model(ref);
    std::ifstream probe(ref);
    std::string bytes = probe ? read_file(ref) : model_to_json(m.spec()).dump();
    return {std::move(m), std::move(bytes)};
}

FieldPoint parse_point(const Model& model, const std::string& text) {
    std::vector<double> xs;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(cell, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != cell.size()) throw SchemaError("--point: bad number '" + cell + "'");
        xs.push_back(x);
    }
    if (static_cast<int>(xs.size()) != model.dim())
        throw SchemaError("--point needs " + std::to_string(model.dim()) + " comma-separated values (q then v)");
    return FieldPoint::unpack(Eigen::Map<const Vec>(xs.data(), model.dim()), model.n(), model.k());
}

double phi_max(const Model& model, const FieldPoint& w) {
    const Vec x = w.pack();
    double worst = 0.0;
    for (int a = 0; a < model.m(); ++a) worst = std::max(worst, std::abs(model.constraint(a)(x.data())));
    return worst;
}

void emit(const RunReport& r, const Globals& g, std::ostream& out) {
    if (g.format == "csv") out << r.checks_csv();
    else out << r.to_json(g.timings).dump(2) << '\n';
}

int verdict(const RunReport& r) { return r.passed() ? kPass : kCheckFailed; }

// --- check ---------------------------------------------------------------

int cmd_check(const std::string& ref, const std::string& point, int samples, const Globals& g, std::ostream& out) {
    Stopwatch clock;
    auto [model, bytes] = open_model(ref);
    RunReport r;
    r.command = "check";
    r.model = model.name();
    r.add_input("model", bytes);

    std::vector<FieldPoint> pts;
    if (!point.empty()) {
        pts.push_back(parse_point(model, point));
    } else {
        std::mt19937_64 rng(g.seed);
        pts = sample_feasible(model, rng, samples, g.tol_feas);
    }

    double feas = 0.0, min_cond = INFINITY, min_c = INFINITY;
    int min_rank = model.m(), nullity = 0;
    bool regular = true, compatible = true;
    std::vector<std::string> degenerate;
    for (const FieldPoint& w : pts) {
        feas = std::max(feas, phi_max(model, w));
        const LagrangianJet J = jet(model, w);
        const RegularityReport reg = regularity(model, J);
        min_cond = std::min(min_cond, reg.condition);
        if (!reg.regular && regular) {
            degenerate = reg.degenerate;
            nullity = reg.nullity;
        }
        regular = regular && reg.regular;
        if (model.m() > 0) {
            const ConstraintForms f = constraint_forms(model, w);
            min_rank = std::min(min_rank, numerical_rank(f.eta));
        }
    }
    if (regular && model.m() > 0) {
        for (const FieldPoint& w : pts) {
            const ConstraintPackage c = constraint_package(model, w, g.tol_compat);
            min_c = std::min(min_c, c.c_condition);
            compatible = compatible && c.compatible;
        }
    }

    r.add("feasibility", feas <= g.tol_feas, feas, g.tol_feas, "<=");
    Check& reg = r.add("regularity", regular, min_cond, 1e-10, ">");
    if (!regular) {
        std::string names;
        for (const auto& d : degenerate) names += (names.empty() ? "" : " ") + d;
        reg.note = "velocity Hessian has nullity " + std::to_string(nullity) + "; degenerate: " + names;
    }
    r.add("constraint_rank", min_rank == model.m(), min_rank, model.m(), ">=",
          model.m() == 0 ? "no constraints" : "");
    if (model.m() == 0) {
        r.add("compatibility", true, 0.0, g.tol_compat, ">", "no constraints");
    } else if (regular) {
        r.add("compatibility", compatible, min_c, g.tol_compat, ">");
    }

    ojson& d = r.details;
    d["n"] = model.n();
    d["k"] = model.k();
    d["m"] = model.m();
    d["form_mode"] = model.spec().form_mode == FormMode::Explicit ? "explicit" : "chetaev";
    d["points"] = static_cast<int>(pts.size());
    d["seed"] = g.seed;
    if (!regular && model.m() > 0) d["compatibility"] = "not evaluated: needs a regular Lagrangian";
    r.timings.emplace_back("total_ms", clock.ms());
    emit(r, g, out);
    return verdict(r);
}

// --- simulate ------------------------------------------------------------

std::string sidecar_path(const std::string& out) {
    const auto dot = out.rfind(".csv");
    if (dot != std::string::npos && dot + 4 == out.size()) return out.substr(0, dot) + ".json";
    return out + ".json";
}

int cmd_simulate(const std::string& ref, const std::string& config_path, const std::string& out_path,
                 double drift_tol, bool feas_set, const Globals& g, std::ostream& out) {
    Stopwatch clock;
    auto [model, bytes] = open_model(ref);
    const std::string cfg_bytes = read_file(config_path);
    nlohmann::json cj;
    try {
        cj = nlohmann::json::parse(cfg_bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("sim config '" + config_path + "' is not valid JSON: " + e.what());
    }
    SimConfig cfg = sim_config_from_json(cj);
    if (feas_set) cfg.tol_feas = g.tol_feas;
    if (drift_tol > 0.0) cfg.drift_tol = drift_tol;

    RunReport r;
    r.command = "simulate";
    r.model = model.name();
    r.add_input("model", bytes);
    r.add_input("config", cfg_bytes);

    const FieldSolution sol = simulate(model, cfg);
    const double run_ms = clock.ms();
    write_solution(sol, out_path);

    r.add("complete", sol.complete, sol.complete ? 1.0 : 0.0, 1.0, ">=", sol.complete ? "" : sol.status);
    r.add("constraint_drift", sol.phi_max() <= cfg.drift_tol, sol.phi_max(), cfg.drift_tol, "<=");
    r.details = solution_summary(sol);
    r.details["output"] = out_path;
    r.timings.emplace_back("integrate_ms", run_ms);
    r.timings.emplace_back("total_ms", clock.ms());

    const ojson j = r.to_json(g.timings);
    std::ofstream side(sidecar_path(out_path), std::ios::binary);
    if (!side) throw Error("cannot write '" + sidecar_path(out_path) + "'");
    side << j.dump(2) << '\n';
    emit(r, g, out);
    if (!sol.complete) return kNumericalFailure;
    return verdict(r);
}

// --- project -------------------------------------------------------------

int cmd_project(const std::string& ref, const std::string& point, const Globals& g, std::ostream& out) {
    Stopwatch clock;
    auto [model, bytes] = open_model(ref);
    RunReport r;
    r.command = "project";
    r.model = model.name();
    r.add_input("model", bytes);
    if (model.m() == 0) throw SchemaError("model '" + model.name() + "' has no constraints to project onto");

    FieldPoint w;
    if (!point.empty()) {
        w = parse_point(model, point);
        const double f = phi_max(model, w);
        if (f > g.tol_feas)
            throw SchemaError("--point is off the constraint submanifold (max |Phi| = " + std::to_string(f) + ")");
    } else {
        std::mt19937_64 rng(g.seed);
        w = sample_feasible(model, rng, 1, g.tol_feas).front();
    }

    const ConstraintPackage c = constraint_package(model, w, g.tol_compat);
    r.add("compatibility", c.compatible, c.c_condition, g.tol_compat, ">");
    if (!c.compatible) {
        r.timings.emplace_back("total_ms", clock.ms());
        emit(r, g, out);
        return kCheckFailed;
    }
    const ProjectedSolution ps = project_free_solution(model, w, g.tol_compat);
    r.add("off_span", ps.off_span < 1e-9, ps.off_span, 1e-9, "<");
    r.add("tangency", ps.tangency < 1e-9, ps.tangency, 1e-9, "<");

    ojson& d = r.details;
    d["q"] = vector_json(w.q);
    d["v"] = vector_json(w.v);
    d["free_accel"] = matrix_json(ps.free.accel);
    d["projected_accel"] = matrix_json(ps.projected.accel);
    d["lambda"] = matrix_json(ps.lambda);
    if (model.k() == 1) {
        const ConstrainedSolution cs = constrained_sopde_multiplier(model, w);
        const double gap = (cs.xi.accel - ps.projected.accel).cwiseAbs().maxCoeff();
        r.add("multiplier_agreement", gap < 1e-10, gap, 1e-10, "<");
        d["multiplier_accel"] = matrix_json(cs.xi.accel);
        d["multiplier_lambda"] = matrix_json(cs.lambda);
    }
    r.timings.emplace_back("total_ms", clock.ms());
    emit(r, g, out);
    return verdict(r);
}

// --- momentum ------------------------------------------------------------

int cmd_momentum(const std::string& ref, const std::string& csv_path, const std::string& section,
                 const std::string& out_path, const Globals& g, std::ostream& out) {
    Stopwatch clock;
    auto [model, bytes] = open_model(ref);
    const int s = require_section(model, section);
    RunReport r;
    r.command = "momentum";
    r.model = model.name();
    r.add_input("model", bytes);
    r.add_input("solution", read_file(csv_path));
    const FieldSolution sol = read_solution(model, csv_path);

    const std::size_t rows = sol.energy.size();
    const std::size_t stride = std::max<std::size_t>(1, rows / 2000);
    std::vector<FieldPoint> pts;
    double lift = 0.0;
    for (std::size_t i = 0; i < rows; i += stride) {
        pts.push_back(sol.point(static_cast<int>(i / sol.nodes()), static_cast<int>(i % sol.nodes())));
        lift = std::max(lift, std::abs(lift_defect(model, s, pts.back())));
    }
    const AnnihilationReport ann = annihilation_check(model, s, pts, g.tol_compat);
    r.add("annihilates_forms", ann.pass, ann.max_contraction, g.tol_compat, "<");
    r.add("lift_symmetry", lift < g.tol_compat, lift, g.tol_compat, "<");

    const MomentumResidual res = momentum_residual(model, sol, s);
    if (!out_path.empty()) {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw Error("cannot write '" + out_path + "'");
        f << residual_csv(res);
    }
    ojson& d = r.details;
    d["section"] = section;
    d["points_checked"] = ann.points;
    d["residual_rows"] = static_cast<int>(res.residual.size());
    d["residual_max"] = res.max;
    d["residual_l2"] = res.l2;
    if (model.k() == 1) d["momentum_drift"] = res.j_drift;
    if (!out_path.empty()) d["residual_output"] = out_path;
    r.timings.emplace_back("total_ms", clock.ms());
    if (g.format == "csv") out << residual_csv(res);
    else out << r.to_json(g.timings).dump(2) << '\n';
    return verdict(r);
}

// --- algebra -------------------------------------------------------------

int cmd_algebra(const std::string& path, const Globals& g, std::ostream& out) {
    Stopwatch clock;
    const std::string bytes = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("'" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.contains("dim") || !j.at("dim").is_number_integer()) throw SchemaError("algebra: missing integer 'dim'");
    KSymplecticSpace space;
    space.dim = j.at("dim").get<int>();
    if (space.dim < 1) throw SchemaError("algebra: 'dim' must be positive");
    if (!j.contains("forms") || !j.at("forms").is_array()) throw SchemaError("algebra: missing 'forms'");
    for (const auto& f : j.at("forms")) {
        space.forms.push_back(matrix_from_json(f, "algebra: form"));
        if (space.forms.back().rows() != space.dim || space.forms.back().cols() != space.dim)
            throw SchemaError("algebra: forms must be dim x dim");
    }
    if (!j.contains("V")) throw SchemaError("algebra: missing 'V'");
    space.V = matrix_from_json(j.at("V"), "algebra: V").transpose();
    if (space.V.rows() != space.dim) throw SchemaError("algebra: V vectors must have dim entries");

    RunReport r;
    r.command = "algebra";
    r.model = j.value("name", std::string("subspaces"));
    r.add_input("space", bytes);
    const StructureCheck sc = structure_validity(space);
    r.add("antisymmetry", sc.antisymmetry < 1e-10, sc.antisymmetry, 1e-10, "<");
    r.add("v_isotropic", sc.vertical < 1e-10, sc.vertical, 1e-10, "<");
    r.add("trivial_common_kernel", sc.common_kernel_dim == 0, sc.common_kernel_dim, 0, "<=");
    r.details["k_symplectic"] = sc.valid;

    ojson subs = ojson::array();
    if (j.contains("subspaces")) {
        for (const auto& e : j.at("subspaces")) {
            const Mat cols = matrix_from_json(e.at("basis"), "algebra: subspace basis").transpose();
            if (cols.rows() != space.dim) throw SchemaError("algebra: subspace vectors must have dim entries");
            const Subspace W = span_of(cols);
            const Subspace P = orthogonal(space, W);
            const Classification c = classify(space, W);
            ojson s;
            s["name"] = e.value("name", std::string("W"));
            s["dim"] = c.dim_w;
            s["perp_dim"] = c.dim_perp;
            s["perp_basis"] = matrix_json(P.basis.transpose());
            s["isotropic"] = c.isotropic;
            s["coisotropic"] = c.coisotropic;
            s["lagrangian"] = c.lagrangian;
            s["k_symplectic"] = c.ksymplectic;
            s["isotropic_residual"] = c.isotropic_residual;
            s["coisotropic_residual"] = c.coisotropic_residual;
            subs.push_back(std::move(s));
        }
    }
    r.details["subspaces"] = std::move(subs);
    r.timings.emplace_back("total_ms", clock.ms());
    emit(r, g, out);
    return verdict(r);
}

}  // namespace

std::vector<FieldPoint> sample_feasible(const Model& model, std::mt19937_64& rng, int count, double tol_feas) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<FieldPoint> pts;
    const int attempts = 20 * std::max(count, 1);
    for (int t = 0; t < attempts && static_cast<int>(pts.size()) < count; ++t) {
        FieldPoint w{Vec(model.n()), Vec(model.n() * model.k())};
        for (auto& x : w.q) x = U(rng);
        for (auto& x : w.v) x = U(rng);
        if (model.m() > 0) {
            try {
                project_velocities(model, w);
            } catch (const NumericalError&) {
                continue;
            }
        }
        if (w.q.allFinite() && w.v.allFinite() && phi_max(model, w) <= tol_feas) pts.push_back(std::move(w));
    }
    if (static_cast<int>(pts.size()) < count)
        throw NumericalError("found only " + std::to_string(pts.size()) + " of " + std::to_string(count) +
                             " feasible points");
    return pts;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonholonomic k-symplectic field theory toolkit"};
    app.name("ksnh");
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "RNG seed for sampled points")->capture_default_str();
    app.add_option("--tol-compat", g.tol_compat, "compatibility threshold on cond(C)")->capture_default_str();
    auto* feas_opt =
        app.add_option("--tol-feas", g.tol_feas, "feasibility tolerance on |Phi|")->capture_default_str();
    app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    app.add_flag("--timings", g.timings, "include wall-clock timings in reports");
    app.fallthrough();

    std::string model_ref, point, config, out_path, csv_path, section, algebra_path;
    int samples = 10;
    double drift_tol = 0.0;

    auto* check = app.add_subcommand("check", "regularity, constraint rank and compatibility");
    check->add_option("model", model_ref, "model file or builtin name")->required();
    check->add_option("--point", point, "q then v, comma separated");
    check->add_option("--samples", samples, "number of sampled feasible points")->check(CLI::PositiveNumber);

    auto* sim = app.add_subcommand("simulate", "integrate and write CSV plus a JSON sidecar");
    sim->add_option("model", model_ref, "model file or builtin name")->required();
    sim->add_option("config", config, "simulation config JSON")->required();
    sim->add_option("--out", out_path, "output CSV path")->required();
    sim->add_option("--drift-tol", drift_tol, "override the config drift tolerance")->check(CLI::PositiveNumber);

    auto* proj = app.add_subcommand("project", "free versus projected SOPDE at a point");
    proj->add_option("model", model_ref, "model file or builtin name")->required();
    proj->add_option("--point", point, "q then v, comma separated");

    auto* mom = app.add_subcommand("momentum", "momentum equation residual along a stored solution");
    mom->add_option("model", model_ref, "model file or builtin name")->required();
    mom->add_option("solution", csv_path, "solution CSV")->required();
    mom->add_option("--section", section, "symmetry section name")->required();
    mom->add_option("--out", out_path, "residual CSV path");

    auto* alg = app.add_subcommand("algebra", "classify subspaces of a k-symplectic vector space");
    alg->add_option("space", algebra_path, "space description JSON")->required();

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPass;
    } catch (const CLI::ParseError& e) {
        err << "ksnh: " << e.what() << '\n';
        return kInputError;
    }

    try {
        if (*check) return cmd_check(model_ref, point, samples, g, out);
        if (*sim) return cmd_simulate(model_ref, config, out_path, drift_tol, feas_opt->count() > 0, g, out);
        if (*proj) return cmd_project(model_ref, point, g, out);
        if (*mom) return cmd_momentum(model_ref, csv_path, section, out_path, g, out);
        if (*alg) return cmd_algebra(algebra_path, g, out);
    } catch (const NumericalError& e) {
        err << "ksnh: numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    } catch (const std::exception& e) {
        err << "ksnh: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

}  // namespace ksnh
