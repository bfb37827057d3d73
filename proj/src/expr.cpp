#include "formflow/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace formflow {

struct Expression::Node {
    Op op = Op::Constant;
    double value = 0.0;
    std::string name;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
    std::vector<std::string> variables;
};

namespace {

bool is_unary(Op op) {
    switch (op) {
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Ln:
    case Op::Sqrt:
        return true;
    default:
        return false;
    }
}

std::vector<std::string> merge_variables(const std::vector<std::string>& a,
                                         const std::vector<std::string>& b) {
    std::vector<std::string> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

const char* op_name(Op op) {
    switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Sqrt: return "sqrt";
    default: return "?";
    }
}

[[noreturn]] void singular(const std::string& what) { throw SingularEvaluation("singular evaluation: " + what); }

double checked(double v, const char* what) {
    if (!std::isfinite(v)) {
        singular(std::string("non-finite result of ") + what);
    }
    return v;
}

// Shared by tree evaluation and the compiled evaluator so both agree bitwise.
double apply_unary(Op op, double a) {
    switch (op) {
    case Op::Neg: return -a;
    case Op::Sin: return checked(std::sin(a), "sin");
    case Op::Cos: return checked(std::cos(a), "cos");
    case Op::Exp: return checked(std::exp(a), "exp");
    case Op::Ln:
        if (!(a > 0.0)) singular("ln of non-positive argument");
        return std::log(a);
    case Op::Sqrt:
        if (a < 0.0) singular("sqrt of negative argument");
        return std::sqrt(a);
    default: break;
    }
    singular("bad unary operator");
}

double apply_binary(Op op, double a, double b) {
    switch (op) {
    case Op::Add: return checked(a + b, "addition");
    case Op::Sub: return checked(a - b, "subtraction");
    case Op::Mul: return checked(a * b, "multiplication");
    case Op::Div:
        if (b == 0.0) singular("division by zero");
        return checked(a / b, "division");
    case Op::Pow:
        if (a == 0.0 && b < 0.0) singular("zero raised to a negative power");
        if (a < 0.0 && std::trunc(b) != b) singular("negative base with non-integer exponent");
        return checked(std::pow(a, b), "power");
    default: break;
    }
    singular("bad binary operator");
}

// Folding must never hide a singularity, so only finite, non-throwing results fold.
bool try_fold(Op op, double a, double b, double& out) {
    try {
        out = is_unary(op) ? apply_unary(op, a) : apply_binary(op, a, b);
        return true;
    } catch (const SingularEvaluation&) {
        return false;
    }
}

}  // namespace

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::constant(double value) {
    auto n = std::make_shared<Node>();
    n->op = Op::Constant;
    n->value = value;
    return Expression(std::move(n));
}

Expression Expression::variable(std::string name) {
    auto n = std::make_shared<Node>();
    n->op = Op::Variable;
    n->variables = {name};
    n->name = std::move(name);
    return Expression(std::move(n));
}

Op Expression::op() const noexcept { return node_->op; }
double Expression::value() const noexcept { return node_->value; }
const std::string& Expression::name() const noexcept { return node_->name; }

std::size_t Expression::arity() const noexcept {
    if (node_->op == Op::Constant || node_->op == Op::Variable) return 0;
    return is_unary(node_->op) ? 1 : 2;
}

Expression Expression::child(std::size_t i) const {
    if (i >= arity()) throw InvalidArgument("expression child index out of range");
    return Expression(i == 0 ? node_->lhs : node_->rhs);
}

const std::vector<std::string>& Expression::free_variables() const noexcept { return node_->variables; }

bool Expression::depends_on(std::string_view var) const {
    const auto& v = node_->variables;
    return std::binary_search(v.begin(), v.end(), var, std::less<>{});
}

Expression make_node(Op op, Expression a, Expression b) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->variables = merge_variables(a.free_variables(), b.free_variables());
    n->lhs = std::move(a.node_);
    n->rhs = std::move(b.node_);
    return Expression(std::move(n));
}

Expression make_node(Op op, Expression a) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->variables = a.free_variables();
    n->lhs = std::move(a.node_);
    return Expression(std::move(n));
}

Expression operator+(const Expression& a, const Expression& b) {
    double folded = 0.0;
    if (a.is_constant() && b.is_constant() && try_fold(Op::Add, a.value(), b.value(), folded)) {
        return Expression::constant(folded);
    }
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    return make_node(Op::Add, a, b);
}

Expression operator-(const Expression& a, const Expression& b) {
    double folded = 0.0;
    if (a.is_constant() && b.is_constant() && try_fold(Op::Sub, a.value(), b.value(), folded)) {
        return Expression::constant(folded);
    }
    if (b.is_zero()) return a;
    if (a.is_zero()) return -b;
    return make_node(Op::Sub, a, b);
}

Expression operator*(const Expression& a, const Expression& b) {
    double folded = 0.0;
    if (a.is_constant() && b.is_constant() && try_fold(Op::Mul, a.value(), b.value(), folded)) {
        return Expression::constant(folded);
    }
    if (a.is_zero() || b.is_zero()) return Expression::constant(0.0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    return make_node(Op::Mul, a, b);
}

Expression operator/(const Expression& a, const Expression& b) {
    double folded = 0.0;
    if (a.is_constant() && b.is_constant() && try_fold(Op::Div, a.value(), b.value(), folded)) {
        return Expression::constant(folded);
    }
    if (a.is_zero() && !b.is_zero()) return Expression::constant(0.0);
    if (b.is_one()) return a;
    return make_node(Op::Div, a, b);
}

Expression operator-(const Expression& a) {
    if (a.is_constant()) return Expression::constant(-a.value());
    if (a.op() == Op::Neg) return a.child(0);
    return make_node(Op::Neg, a);
}

Expression pow(const Expression& base, const Expression& exponent) {
    double folded = 0.0;
    if (base.is_constant() && exponent.is_constant() &&
        try_fold(Op::Pow, base.value(), exponent.value(), folded)) {
        return Expression::constant(folded);
    }
    if (exponent.is_zero()) return Expression::constant(1.0);
    if (exponent.is_one()) return base;
    return make_node(Op::Pow, base, exponent);
}

namespace {

Expression unary_function(Op op, const Expression& a) {
    double folded = 0.0;
    if (a.is_constant() && try_fold(op, a.value(), 0.0, folded)) {
        return Expression::constant(folded);
    }
    return make_node(op, a);
}

}  // namespace

Expression sin(const Expression& a) { return unary_function(Op::Sin, a); }
Expression cos(const Expression& a) { return unary_function(Op::Cos, a); }
Expression exp(const Expression& a) { return unary_function(Op::Exp, a); }
Expression ln(const Expression& a) { return unary_function(Op::Ln, a); }
Expression sqrt(const Expression& a) { return unary_function(Op::Sqrt, a); }

double Expression::evaluate(const Point& point) const {
    switch (op()) {
    case Op::Constant:
        return value();
    case Op::Variable: {
        auto it = point.find(name());
        if (it == point.end()) throw UnboundVariableError(name());
        if (!std::isfinite(it->second)) singular("non-finite value bound to '" + name() + "'");
        return it->second;
    }
    default:
        break;
    }
    if (arity() == 1) {
        return apply_unary(op(), child(0).evaluate(point));
    }
    const double a = child(0).evaluate(point);
    const double b = child(1).evaluate(point);
    return apply_binary(op(), a, b);
}

Expression Expression::substitute(const std::map<std::string, Expression, std::less<>>& replacements) const {
    switch (op()) {
    case Op::Constant:
        return *this;
    case Op::Variable: {
        auto it = replacements.find(name());
        return it == replacements.end() ? *this : it->second;
    }
    case Op::Add: return child(0).substitute(replacements) + child(1).substitute(replacements);
    case Op::Sub: return child(0).substitute(replacements) - child(1).substitute(replacements);
    case Op::Mul: return child(0).substitute(replacements) * child(1).substitute(replacements);
    case Op::Div: return child(0).substitute(replacements) / child(1).substitute(replacements);
    case Op::Pow: return pow(child(0).substitute(replacements), child(1).substitute(replacements));
    case Op::Neg: return -child(0).substitute(replacements);
    default: return unary_function(op(), child(0).substitute(replacements));
    }
}

bool identical(const Expression& a, const Expression& b) {
    if (a.node_ == b.node_) return true;
    if (a.op() != b.op()) return false;
    switch (a.op()) {
    case Op::Constant:
        // Bitwise, so that -0.0 and 0.0 are told apart like the printer does.
        return std::signbit(a.value()) == std::signbit(b.value()) && a.value() == b.value();
    case Op::Variable:
        return a.name() == b.name();
    default:
        break;
    }
    for (std::size_t i = 0; i < a.arity(); ++i) {
        if (!identical(a.child(i), b.child(i))) return false;
    }
    return true;
}

namespace {

int precedence(Op op) {
    switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
    }
}

int precedence_of(const Expression& e) {
    // A negative literal prints with a leading minus, so it binds like Neg.
    if (e.is_constant() && std::signbit(e.value())) return 3;
    return precedence(e.op());
}

void print_constant(double v, std::string& out) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void print_into(const Expression& e, std::string& out);

void print_operand(const Expression& e, int min_precedence, std::string& out) {
    if (precedence_of(e) < min_precedence) {
        out += '(';
        print_into(e, out);
        out += ')';
    } else {
        print_into(e, out);
    }
}

void print_into(const Expression& e, std::string& out) {
    switch (e.op()) {
    case Op::Constant:
        print_constant(e.value(), out);
        return;
    case Op::Variable:
        out += e.name();
        return;
    case Op::Add:
    case Op::Sub:
        print_operand(e.child(0), 1, out);
        out += e.op() == Op::Add ? " + " : " - ";
        print_operand(e.child(1), 2, out);
        return;
    case Op::Mul:
    case Op::Div:
        print_operand(e.child(0), 2, out);
        out += e.op() == Op::Mul ? " * " : " / ";
        print_operand(e.child(1), 3, out);
        return;
    case Op::Neg:
        out += '-';
        print_operand(e.child(0), 3, out);
        return;
    case Op::Pow:
        print_operand(e.child(0), 5, out);
        out += '^';
        print_operand(e.child(1), 3, out);
        return;
    default:
        out += op_name(e.op());
        out += '(';
        print_into(e.child(0), out);
        out += ')';
        return;
    }
}

}  // namespace

std::string Expression::to_string() const {
    std::string out;
    print_into(*this, out);
    return out;
}

Expression differentiate(const Expression& e, std::string_view var) {
    if (!e.depends_on(var)) return Expression::constant(0.0);
    switch (e.op()) {
    case Op::Constant:
        return Expression::constant(0.0);
    case Op::Variable:
        return Expression::constant(e.name() == var ? 1.0 : 0.0);
    default:
        break;
    }
    const Expression a = e.child(0);
    const Expression da = differentiate(a, var);
    switch (e.op()) {
    case Op::Neg: return -da;
    case Op::Sin: return cos(a) * da;
    case Op::Cos: return -(sin(a) * da);
    case Op::Exp: return e * da;
    case Op::Ln: return da / a;
    case Op::Sqrt: return da / (Expression::constant(2.0) * e);
    default: break;
    }
    const Expression b = e.child(1);
    const Expression db = differentiate(b, var);
    switch (e.op()) {
    case Op::Add: return da + db;
    case Op::Sub: return da - db;
    case Op::Mul: return da * b + a * db;
    case Op::Div: return (da * b - a * db) / pow(b, Expression::constant(2.0));
    case Op::Pow:
        if (!b.depends_on(var)) {
            return b * pow(a, b - Expression::constant(1.0)) * da;
        }
        // d(a^b) = a^b (b' ln a + b a'/a)
        return e * (db * ln(a) + b * da / a);
    default:
        break;
    }
    throw InvalidArgument("differentiate: unsupported node");
}

CompiledExpression::CompiledExpression(const Expression& e, std::span<const std::string> names)
    : arity_(names.size()) {
    for (const auto& v : e.free_variables()) {
        if (std::find(names.begin(), names.end(), v) == names.end()) throw UnboundVariableError(v);
    }
    std::size_t depth = 0;
    auto emit = [&](auto&& self, const Expression& node) -> void {
        switch (node.op()) {
        case Op::Constant:
            program_.push_back({Op::Constant, node.value(), 0});
            max_stack_ = std::max(max_stack_, ++depth);
            return;
        case Op::Variable: {
            auto slot = static_cast<std::size_t>(std::find(names.begin(), names.end(), node.name()) - names.begin());
            program_.push_back({Op::Variable, 0.0, slot});
            max_stack_ = std::max(max_stack_, ++depth);
            return;
        }
        default:
            break;
        }
        for (std::size_t i = 0; i < node.arity(); ++i) self(self, node.child(i));
        if (node.arity() == 2) --depth;
        program_.push_back({node.op(), 0.0, 0});
    };
    emit(emit, e);
}

double CompiledExpression::operator()(std::span<const double> values) const {
    if (values.size() < arity_) throw InvalidArgument("compiled expression: too few values");
    if (program_.empty()) return 0.0;
    // Expression trees here are shallow; a small fixed stack avoids allocation.
    constexpr std::size_t inline_capacity = 64;
    double inline_stack[inline_capacity];
    std::vector<double> heap_stack;
    double* stack = inline_stack;
    if (max_stack_ > inline_capacity) {
        heap_stack.resize(max_stack_);
        stack = heap_stack.data();
    }
    std::size_t top = 0;
    for (const auto& ins : program_) {
        switch (ins.op) {
        case Op::Constant:
            stack[top++] = ins.value;
            break;
        case Op::Variable:
            if (!std::isfinite(values[ins.slot])) singular("non-finite bound value");
            stack[top++] = values[ins.slot];
            break;
        case Op::Neg:
        case Op::Sin:
        case Op::Cos:
        case Op::Exp:
        case Op::Ln:
        case Op::Sqrt:
            stack[top - 1] = apply_unary(ins.op, stack[top - 1]);
            break;
        default:
            --top;
            stack[top - 1] = apply_binary(ins.op, stack[top - 1], stack[top]);
            break;
        }
    }
    return stack[0];
}

}  // namespace formflow
