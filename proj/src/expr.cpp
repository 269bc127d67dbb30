#include "ksnh/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <set>

namespace ksnh {

namespace {

Expr make(NodeKind kind, Expr lhs = nullptr, Expr rhs = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

struct FuncEntry {
    const char* name;
    Func f;
};
constexpr FuncEntry kFuncs[] = {{"sin", Func::Sin}, {"cos", Func::Cos}, {"tan", Func::Tan},
                                {"exp", Func::Exp}, {"log", Func::Log}, {"sqrt", Func::Sqrt}};

bool lookup_func(std::string_view name, Func& out) {
    for (const auto& e : kFuncs) {
        if (name == e.name) {
            out = e.f;
            return true;
        }
    }
    return false;
}

class Parser {
public:
    explicit Parser(std::string_view s) : src_(s) {}

    Expr run() {
        skip();
        if (pos_ >= src_.size()) fail("expected expression");
        Expr e = expr();
        skip();
        if (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ')') fail("unbalanced ')'");
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '(')
                fail("expected operator (implicit multiplication is not supported)");
            fail(std::string("unexpected character '") + c + "'");
        }
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(pos_, msg); }

    void skip() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr expr() {
        Expr e = term();
        for (;;) {
            if (accept('+')) e = add(e, term());
            else if (accept('-')) e = sub(e, term());
            else return e;
        }
    }
    Expr term() {
        Expr e = unary();
        for (;;) {
            if (accept('*')) e = mul(e, unary());
            else if (accept('/')) e = div(e, unary());
            else return e;
        }
    }
    Expr unary() {
        if (accept('-')) return neg(unary());
        return power();
    }
    Expr power() {
        Expr base = primary();
        if (accept('^')) return pow(base, unary());
        return base;
    }
    Expr primary() {
        skip();
        if (pos_ >= src_.size()) fail("expected expression");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            const std::string_view id = src_.substr(start, pos_ - start);
            Func f;
            if (lookup_func(id, f)) {
                if (!accept('(')) fail("expected '(' after function name");
                Expr arg = expr();
                if (!accept(')')) fail("expected ')'");
                return call(f, arg);
            }
            return variable(std::string(id));
        }
        fail("expected expression");
    }
    Expr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t d = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++d;
            }
            return d;
        };
        std::size_t nd = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            nd += digits();
        }
        if (nd == 0) {
            pos_ = start;
            fail("malformed number");
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) fail("malformed exponent");
        }
        const std::string text(src_.substr(start, pos_ - start));
        return constant(std::strtod(text.c_str(), nullptr));
    }
};

int precedence(const Expr& e) {
    switch (e->kind) {
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Neg: return 3;
        case NodeKind::Pow: return 4;
        case NodeKind::Const: return e->value < 0.0 || std::signbit(e->value) ? 3 : 5;
        default: return 5;
    }
}

std::string fmt_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print_into(const Expr& e, std::string& out);

void print_child(const Expr& c, int min_prec, std::string& out) {
    if (precedence(c) < min_prec) {
        out += '(';
        print_into(c, out);
        out += ')';
    } else {
        print_into(c, out);
    }
}

void print_into(const Expr& e, std::string& out) {
    switch (e->kind) {
        case NodeKind::Const:
            if (std::signbit(e->value)) {
                out += '-';
                out += fmt_number(-e->value);
            } else {
                out += fmt_number(e->value);
            }
            return;
        case NodeKind::Var: out += e->name; return;
        case NodeKind::Neg:
            out += '-';
            print_child(e->lhs, 3, out);
            return;
        case NodeKind::Call:
            out += func_name(e->func);
            out += '(';
            print_into(e->lhs, out);
            out += ')';
            return;
        case NodeKind::Pow:
            print_child(e->lhs, 5, out);
            out += '^';
            print_child(e->rhs, 3, out);
            return;
        default: break;
    }
    const int p = precedence(e);
    const char* op = e->kind == NodeKind::Add ? " + " : e->kind == NodeKind::Sub ? " - "
                     : e->kind == NodeKind::Mul ? "*" : "/";
    print_child(e->lhs, p, out);
    out += op;
    print_child(e->rhs, p + 1, out);
}

void collect(const Expr& e, std::vector<std::string>& out, std::set<std::string>& seen) {
    if (!e) return;
    if (e->kind == NodeKind::Var && seen.insert(e->name).second) out.push_back(e->name);
    collect(e->lhs, out, seen);
    collect(e->rhs, out, seen);
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(),
                                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

Expr constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Const;
    n->value = v;
    return n;
}
Expr variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Var;
    n->name = std::move(name);
    return n;
}
Expr neg(Expr a) { return make(NodeKind::Neg, std::move(a)); }
Expr add(Expr a, Expr b) { return make(NodeKind::Add, std::move(a), std::move(b)); }
Expr sub(Expr a, Expr b) { return make(NodeKind::Sub, std::move(a), std::move(b)); }
Expr mul(Expr a, Expr b) { return make(NodeKind::Mul, std::move(a), std::move(b)); }
Expr div(Expr a, Expr b) { return make(NodeKind::Div, std::move(a), std::move(b)); }
Expr pow(Expr a, Expr b) { return make(NodeKind::Pow, std::move(a), std::move(b)); }
Expr call(Func f, Expr a) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Call;
    n->func = f;
    n->lhs = std::move(a);
    return n;
}

const char* func_name(Func f) {
    for (const auto& e : kFuncs)
        if (e.f == f) return e.name;
    return "?";
}

Expr parse(std::string_view source) { return Parser(source).run(); }

std::string print(const Expr& e) {
    std::string out;
    print_into(e, out);
    return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case NodeKind::Const:
            return a->value == b->value || (std::isnan(a->value) && std::isnan(b->value));
        case NodeKind::Var: return a->name == b->name;
        case NodeKind::Call: return a->func == b->func && structurally_equal(a->lhs, b->lhs);
        default: return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
    }
}

std::vector<std::string> variables(const Expr& e) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    collect(e, out, seen);
    return out;
}

bool parse_coord_name(std::string_view name, CoordName& out) {
    if (name.size() < 2) return false;
    if (name[0] == 'q') {
        if (!all_digits(name.substr(1))) return false;
        out = {false, std::atoi(std::string(name.substr(1)).c_str()), 0};
        return true;
    }
    if (name[0] == 'v') {
        const auto us = name.find('_');
        if (us == std::string_view::npos) return false;
        const auto si = name.substr(1, us - 1);
        const auto sa = name.substr(us + 1);
        if (!all_digits(si) || !all_digits(sa)) return false;
        out = {true, std::atoi(std::string(si).c_str()), std::atoi(std::string(sa).c_str())};
        return true;
    }
    return false;
}

std::string q_name(int i) { return "q" + std::to_string(i); }
std::string v_name(int i, int A) { return "v" + std::to_string(i) + "_" + std::to_string(A); }

Binding::Binding(int n, int k, std::map<std::string, double> params)
    : n_(n), k_(k), params_(std::move(params)) {
    for (const auto& [name, value] : params_) {
        CoordName c;
        if (parse_coord_name(name, c))
            throw BindError("parameter name '" + name + "' collides with a coordinate name");
        Func f;
        if (lookup_func(name, f)) throw BindError("parameter name '" + name + "' is a function name");
    }
}

bool Binding::is_parameter(const std::string& name) const { return params_.count(name) != 0; }

int Binding::slot(const std::string& name) const {
    CoordName c;
    if (parse_coord_name(name, c)) {
        if (c.i < 1 || c.i > n_)
            throw BindError("variable '" + name + "' has index outside 1.." + std::to_string(n_));
        if (!c.is_velocity) return c.i - 1;
        if (c.A < 1 || c.A > k_)
            throw BindError("variable '" + name + "' has direction outside 1.." + std::to_string(k_));
        return n_ + (c.A - 1) * n_ + (c.i - 1);
    }
    if (is_parameter(name)) return -1;
    throw BindError("unbound variable '" + name + "'");
}

std::string Binding::slot_name(int s) const {
    if (s < n_) return q_name(s + 1);
    const int r = s - n_;
    return v_name(r % n_ + 1, r / n_ + 1);
}

Program::Program(const Expr& e, const Binding& b) {
    int cur = 0;
    emit(e, b, cur);
    std::sort(slots_.begin(), slots_.end());
    slots_.erase(std::unique(slots_.begin(), slots_.end()), slots_.end());
}

bool Program::depends_on(int s) const { return std::binary_search(slots_.begin(), slots_.end(), s); }

void Program::emit(const Expr& e, const Binding& b, int& cur) {
    auto push = [&](Op op, int slot = 0, double value = 0.0, Func f = Func::Sin) {
        code_.push_back({op, f, slot, value});
    };
    switch (e->kind) {
        case NodeKind::Const:
            push(Op::Const, 0, e->value);
            depth_ = std::max(depth_, ++cur);
            return;
        case NodeKind::Var: {
            const int s = b.slot(e->name);
            if (s < 0) {
                push(Op::Const, 0, b.parameters().at(e->name));
            } else {
                push(Op::Var, s);
                slots_.push_back(s);
            }
            depth_ = std::max(depth_, ++cur);
            return;
        }
        case NodeKind::Neg:
            emit(e->lhs, b, cur);
            push(Op::Neg);
            return;
        case NodeKind::Call:
            emit(e->lhs, b, cur);
            push(Op::Call, 0, 0.0, e->func);
            return;
        default: break;
    }
    emit(e->lhs, b, cur);
    if (e->kind == NodeKind::Pow) {
        // Exponents free of coordinates fold to constants so integer powers accept any base.
        bool const_exp = true;
        for (const auto& name : variables(e->rhs))
            if (b.slot(name) >= 0) const_exp = false;
        if (const_exp) {
            Program sub;
            int scratch = 0;
            sub.emit(e->rhs, b, scratch);
            push(Op::PowConst, 0, sub.eval<double>(nullptr));
            return;
        }
    }
    emit(e->rhs, b, cur);
    --cur;
    switch (e->kind) {
        case NodeKind::Add: push(Op::Add); break;
        case NodeKind::Sub: push(Op::Sub); break;
        case NodeKind::Mul: push(Op::Mul); break;
        case NodeKind::Div: push(Op::Div); break;
        case NodeKind::Pow: push(Op::Pow); break;
        default: break;
    }
}

}  // namespace ksnh
