#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ksnh/dynamics.hpp"
#include "ksnh/geometry.hpp"
#include "ksnh/projector.hpp"

namespace ksnh {

namespace {

void put(std::string& out, double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::string csv_header(const FieldSolution& sol) {
    std::string h = "t";
    if (sol.k == 2) h += ",s";
    for (int i = 1; i <= sol.n; ++i) h += ",q" + std::to_string(i);
    for (int A = 1; A <= sol.k; ++A)
        for (int i = 1; i <= sol.n; ++i) h += ",v" + std::to_string(i) + "_" + std::to_string(A);
    for (int a = 1; a <= sol.m; ++a) {
        if (sol.k == 1) {
            h += ",lambda_" + std::to_string(a);
        } else {
            for (int A = 1; A <= sol.k; ++A) h += ",lambda_" + std::to_string(a) + "_" + std::to_string(A);
        }
    }
    h += ",E_L,phi_max";
    return h;
}

std::string solution_csv(const FieldSolution& sol) {
    std::string out = csv_header(sol);
    out += '\n';
    const int n = sol.n, nk = sol.n * sol.k, mk = sol.m * sol.k;
    for (int st = 0; st < sol.steps(); ++st) {
        for (int j = 0; j < sol.nodes(); ++j) {
            const std::size_t r = sol.at(st, j);
            put(out, sol.t[st]);
            if (sol.k == 2) {
                out += ',';
                put(out, sol.s[j]);
            }
            for (int i = 0; i < n; ++i) out += ',', put(out, sol.q[r * n + i]);
            for (int i = 0; i < nk; ++i) out += ',', put(out, sol.v[r * nk + i]);
            for (int i = 0; i < mk; ++i) out += ',', put(out, sol.lambda[r * mk + i]);
            out += ',';
            put(out, sol.energy[r]);
            out += ',';
            put(out, sol.phi[r]);
            out += '\n';
        }
    }
    return out;
}

void write_solution(const FieldSolution& sol, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    const std::string text = solution_csv(sol);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw Error("failed writing '" + path + "'");
}

nlohmann::ordered_json solution_summary(const FieldSolution& sol) {
    nlohmann::ordered_json j;
    j["complete"] = sol.complete;
    j["status"] = sol.status;
    j["n"] = sol.n;
    j["k"] = sol.k;
    j["m"] = sol.m;
    j["steps"] = sol.steps();
    j["nodes"] = sol.nodes();
    j["t_final"] = sol.t.empty() ? 0.0 : sol.t.back();
    j["phi_max"] = sol.phi_max();
    if (sol.steps() > 0) {
        const double e0 = sol.energy_total(0);
        double drift = 0.0;
        for (int st = 0; st < sol.steps(); ++st) drift = std::max(drift, std::abs(sol.energy_total(st) - e0));
        j["energy_initial"] = e0;
        j["energy_drift"] = drift;
    }
    return j;
}

FieldSolution read_solution(const Model& model, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw SchemaError("solution file '" + path + "' is empty");
    FieldSolution sol;
    sol.n = model.n();
    sol.k = model.k();
    sol.m = model.m();
    if (line != csv_header(sol))
        throw SchemaError("solution file '" + path + "' does not match model '" + model.name() + "'");
    const int n = sol.n, nk = n * sol.k, mk = sol.m * sol.k;
    const std::size_t width = 1 + (sol.k == 2 ? 1 : 0) + n + nk + mk + 2;
    std::vector<double> s_seen;
    int row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != width)
            throw SchemaError("solution file row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                              " columns, expected " + std::to_string(width));
        std::vector<double> x(width);
        for (std::size_t c = 0; c < width; ++c) {
            std::size_t used = 0;
            try {
                x[c] = std::stod(cells[c], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cells[c].size())
                throw SchemaError("solution file row " + std::to_string(row) + ": bad number '" + cells[c] + "'");
        }
        std::size_t c = 0;
        const double t = x[c++];
        if (sol.t.empty() || sol.t.back() != t) sol.t.push_back(t);
        if (sol.k == 2) {
            const double s = x[c++];
            if (sol.t.size() == 1) s_seen.push_back(s);
        }
        sol.q.insert(sol.q.end(), x.begin() + c, x.begin() + c + n);
        c += n;
        sol.v.insert(sol.v.end(), x.begin() + c, x.begin() + c + nk);
        c += nk;
        sol.lambda.insert(sol.lambda.end(), x.begin() + c, x.begin() + c + mk);
        c += mk;
        sol.energy.push_back(x[c++]);
        sol.phi.push_back(x[c++]);
    }
    if (sol.k == 2) sol.s = s_seen;
    const std::size_t rows = sol.energy.size();
    if (rows != static_cast<std::size_t>(sol.steps()) * sol.nodes())
        throw SchemaError("solution file '" + path + "' is not a full (t, s) grid");

    // accelerations are not stored; recover them
    sol.accel.assign(rows * n, 0.0);
    if (sol.k == 1) {
        SolveOptions opt;
        opt.check_feasible = false;
        for (int st = 0; st < sol.steps(); ++st) {
            const ConstrainedSolution cs = constrained_sopde_multiplier(model, sol.point(st), opt);
            for (int i = 0; i < n; ++i) sol.accel[st * n + i] = cs.xi.accel(0, i);
        }
    } else if (sol.steps() >= 2) {
        const int T = sol.steps();
        for (int st = 0; st < T; ++st) {
            const int a = st == 0 ? 0 : st - 1, b = st == T - 1 ? T - 1 : st + 1;
            const double dt = sol.t[b] - sol.t[a];
            for (int j = 0; j < sol.nodes(); ++j)
                for (int i = 0; i < n; ++i)
                    sol.accel[sol.at(st, j) * n + i] =
                        (sol.v[sol.at(b, j) * nk + i] - sol.v[sol.at(a, j) * nk + i]) / dt;
        }
    }
    return sol;
}

}  // namespace ksnh
