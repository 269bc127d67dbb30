#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ksnh/hyperdual.hpp"

namespace ksnh {

enum class NodeKind { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    NodeKind kind;
    double value = 0.0;  // Const
    std::string name;    // Var
    Func func = Func::Sin;
    Expr lhs;  // operand of Neg and Call, left operand otherwise
    Expr rhs;
};

Expr constant(double v);
Expr variable(std::string name);
Expr neg(Expr a);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, Expr b);
Expr call(Func f, Expr a);

const char* func_name(Func f);

Expr parse(std::string_view source);

// Canonical text; parse(print(parse(s))) reproduces the same tree.
std::string print(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

// Variable names in order of first appearance.
std::vector<std::string> variables(const Expr& e);

// q<i> and v<i>_<A> are coordinates; anything else must be a parameter.
struct CoordName {
    bool is_velocity = false;
    int i = 0;  // 1-based
    int A = 0;  // 1-based, velocities only
};
bool parse_coord_name(std::string_view name, CoordName& out);
std::string q_name(int i);
std::string v_name(int i, int A);

// Maps coordinate names to dense slots: q_i -> i-1, v_i_A -> n + (A-1)n + i-1.
class Binding {
public:
    Binding() = default;
    Binding(int n, int k, std::map<std::string, double> params);

    int n() const { return n_; }
    int k() const { return k_; }
    int size() const { return n_ + n_ * k_; }
    const std::map<std::string, double>& parameters() const { return params_; }

    bool is_parameter(const std::string& name) const;
    // -1 for parameters; throws BindError for anything unknown or out of range.
    int slot(const std::string& name) const;
    std::string slot_name(int s) const;

private:
    int n_ = 0;
    int k_ = 0;
    std::map<std::string, double> params_;
};

// Postfix tape compiled from an Expr with parameters folded to constants.
class Program {
public:
    Program() = default;
    Program(const Expr& e, const Binding& b);

    template <class T>
    T eval(const T* x) const;

    double operator()(const double* x) const { return eval<double>(x); }

    // Slots the expression reads, sorted.
    const std::vector<int>& slots() const { return slots_; }
    bool depends_on(int s) const;
    bool empty() const { return code_.empty(); }

private:
    enum class Op : unsigned char { Const, Var, Neg, Add, Sub, Mul, Div, Pow, PowConst, Call };
    struct Ins {
        Op op;
        Func func;
        int slot;
        double value;
    };
    std::vector<Ins> code_;
    std::vector<int> slots_;
    int depth_ = 0;

    void emit(const Expr& e, const Binding& b, int& cur);
};

namespace detail {

inline double f_div(double a, double b) {
    if (b == 0.0) throw DomainError("division by zero", b);
    return a / b;
}
inline HyperDual f_div(const HyperDual& a, const HyperDual& b) { return a / b; }

inline double f_pow(double a, double p) {
    if (p == 0.0) return 1.0;
    if (p == 2.0) return a * a;
    if (is_integer(p)) {
        if (a == 0.0 && p < 0.0) throw DomainError("zero raised to a negative power", a);
    } else if (!(a > 0.0)) {
        throw DomainError("non-integer power of non-positive base", a);
    }
    return std::pow(a, p);
}
inline HyperDual f_pow(const HyperDual& a, double p) { return ksnh::pow(a, p); }
inline double f_pow(double a, double b, bool) { return f_pow(a, b); }
inline HyperDual f_pow(const HyperDual& a, const HyperDual& b, bool) { return ksnh::pow(a, b); }

inline double f_call(Func f, double a) {
    switch (f) {
        case Func::Sin: return std::sin(a);
        case Func::Cos: return std::cos(a);
        case Func::Tan:
            if (std::cos(a) == 0.0) throw DomainError("tan pole", a);
            return std::tan(a);
        case Func::Exp: return std::exp(a);
        case Func::Log:
            if (!(a > 0.0)) throw DomainError("log of non-positive argument", a);
            return std::log(a);
        case Func::Sqrt:
            if (a < 0.0) throw DomainError("sqrt of negative argument", a);
            return std::sqrt(a);
    }
    return 0.0;
}
inline HyperDual f_call(Func f, const HyperDual& a) {
    switch (f) {
        case Func::Sin: return ksnh::sin(a);
        case Func::Cos: return ksnh::cos(a);
        case Func::Tan: return ksnh::tan(a);
        case Func::Exp: return ksnh::exp(a);
        case Func::Log: return ksnh::log(a);
        case Func::Sqrt: return ksnh::sqrt(a);
    }
    return {};
}

}  // namespace detail

template <class T>
T Program::eval(const T* x) const {
    constexpr int kInline = 64;
    T small[kInline];
    std::vector<T> big;
    T* st = small;
    if (depth_ > kInline) {
        big.resize(static_cast<std::size_t>(depth_));
        st = big.data();
    }
    int top = 0;
    for (const Ins& in : code_) {
        switch (in.op) {
            case Op::Const: st[top++] = T(in.value); break;
            case Op::Var: st[top++] = x[in.slot]; break;
            case Op::Neg: st[top - 1] = -st[top - 1]; break;
            case Op::Add: --top; st[top - 1] = st[top - 1] + st[top]; break;
            case Op::Sub: --top; st[top - 1] = st[top - 1] - st[top]; break;
            case Op::Mul: --top; st[top - 1] = st[top - 1] * st[top]; break;
            case Op::Div: --top; st[top - 1] = detail::f_div(st[top - 1], st[top]); break;
            case Op::Pow: --top; st[top - 1] = detail::f_pow(st[top - 1], st[top], true); break;
            case Op::PowConst: st[top - 1] = detail::f_pow(st[top - 1], in.value); break;
            case Op::Call: st[top - 1] = detail::f_call(in.func, st[top - 1]); break;
        }
    }
    if (top != 1) return T(0.0);
    return st[0];
}

}  // namespace ksnh
