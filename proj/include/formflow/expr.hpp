#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "formflow/error.hpp"

namespace formflow {

enum class Op {
    Constant,
    Variable,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
};

// Binding of coordinate names to values.
using Point = std::map<std::string, double, std::less<>>;

// Immutable scalar expression over named coordinates.
//
// Nodes are shared between expressions, so copies are cheap and instances can
// be handed to other threads freely. All constructors go through a light
// simplifier: constant folding plus removal of additive zeros and
// multiplicative ones. Nothing cleverer than that is attempted.
class Expression {
public:
    // The zero constant.
    Expression();

    static Expression constant(double value);
    static Expression variable(std::string name);

    Op op() const noexcept;
    // Only meaningful for Op::Constant.
    double value() const noexcept;
    // Only meaningful for Op::Variable.
    const std::string& name() const noexcept;
    // Number of children: 0 for leaves, 1 for Neg and functions, 2 otherwise.
    std::size_t arity() const noexcept;
    Expression child(std::size_t i) const;

    // Sorted, duplicate-free names of every variable in the tree.
    const std::vector<std::string>& free_variables() const noexcept;

    bool is_constant() const noexcept { return op() == Op::Constant; }
    bool is_zero() const noexcept { return is_constant() && value() == 0.0; }
    bool is_one() const noexcept { return is_constant() && value() == 1.0; }
    bool depends_on(std::string_view var) const;

    // Throws UnboundVariableError or SingularEvaluation; never returns NaN/Inf.
    double evaluate(const Point& point) const;

    // Replace variables by expressions; unmapped variables stay as they are.
    Expression substitute(const std::map<std::string, Expression, std::less<>>& replacements) const;

    // Re-parsable text. parse(to_string()) reproduces the same tree.
    std::string to_string() const;

    // Structural equality of trees.
    friend bool identical(const Expression& a, const Expression& b);

    struct Node;

private:
    explicit Expression(std::shared_ptr<const Node> node);
    friend Expression make_node(Op, Expression, Expression);
    friend Expression make_node(Op, Expression);

    std::shared_ptr<const Node> node_;
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression pow(const Expression& base, const Expression& exponent);
Expression sin(const Expression& a);
Expression cos(const Expression& a);
Expression exp(const Expression& a);
Expression ln(const Expression& a);
Expression sqrt(const Expression& a);

inline Expression operator*(double a, const Expression& b) { return Expression::constant(a) * b; }
inline Expression operator+(const Expression& a, double b) { return a + Expression::constant(b); }

// Grammar, loosest to tightest binding:
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right associative)
//   primary := number | identifier | function '(' sum ')' | '(' sum ')'
// Functions: sin cos exp ln sqrt. Implicit multiplication is rejected.
// Throws ParseError carrying the byte offset of the offending token.
Expression parse(std::string_view text);

bool is_function_name(std::string_view name);

// Exact symbolic derivative. Differentiating with respect to a variable that
// does not occur yields the zero constant.
Expression differentiate(const Expression& e, std::string_view var);

inline double evaluate(const Expression& e, const Point& point) { return e.evaluate(point); }
inline std::string print(const Expression& e) { return e.to_string(); }

// Expression compiled against a fixed ordering of variable names, for tight
// evaluation loops (grids, integrators). Variables of the expression missing
// from the ordering are reported at construction.
class CompiledExpression {
public:
    CompiledExpression() = default;
    CompiledExpression(const Expression& e, std::span<const std::string> names);

    // values[i] binds names[i]. Throws SingularEvaluation like Expression::evaluate.
    double operator()(std::span<const double> values) const;

    std::size_t arity() const noexcept { return arity_; }

private:
    struct Instruction {
        Op op;
        double value = 0.0;
        std::size_t slot = 0;
    };
    std::vector<Instruction> program_;
    std::size_t arity_ = 0;
    std::size_t max_stack_ = 0;
};

}  // namespace formflow
