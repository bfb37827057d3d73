#include <cctype>
#include <charconv>
#include <cmath>

#include "formflow/expr.hpp"

namespace formflow {

namespace {

struct Function {
    std::string_view name;
    Expression (*make)(const Expression&);
};

constexpr Function kFunctions[] = {
    {"sin", &sin}, {"cos", &cos}, {"exp", &exp}, {"ln", &ln}, {"sqrt", &sqrt},
};

const Function* find_function(std::string_view name) {
    for (const auto& f : kFunctions) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expression parse_all() {
        Expression e = sum();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& message) const { throw ParseError("syntax error: " + message, pos_); }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expression sum() {
        Expression e = product();
        for (;;) {
            if (accept('+')) {
                e = e + product();
            } else if (accept('-')) {
                e = e - product();
            } else {
                return e;
            }
        }
    }

    Expression product() {
        Expression e = unary();
        for (;;) {
            if (accept('*')) {
                e = e * unary();
            } else if (accept('/')) {
                e = e / unary();
            } else {
                return e;
            }
        }
    }

    Expression unary() {
        if (accept('-')) return -unary();
        return power();
    }

    Expression power() {
        Expression base = primary();
        if (accept('^')) return pow(base, unary());
        return base;
    }

    Expression primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Expression inner = sum();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (digit(c) || (c == '.' && pos_ + 1 < text_.size() && digit(text_[pos_ + 1]))) return number();
        if (ident_start(c)) return identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    Expression number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (digit(text_[pos_]) || text_[pos_] == '.')) ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t look = pos_ + 1;
            if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
            if (look < text_.size() && digit(text_[look])) {
                pos_ = look;
                while (pos_ < text_.size() && digit(text_[pos_])) ++pos_;
            }
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (ec != std::errc{} || ptr != text_.data() + pos_ || !std::isfinite(value)) {
            pos_ = start;
            fail("malformed number");
        }
        return Expression::constant(value);
    }

    Expression identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);
        const std::size_t after_name = pos_;
        skip_space();
        const bool call = pos_ < text_.size() && text_[pos_] == '(';
        if (const Function* f = find_function(name)) {
            if (!call) {
                fail("expected '(' after function name '" + std::string(name) + "'");
            }
            ++pos_;
            Expression arg = sum();
            if (!accept(')')) fail("expected ')'");
            return f->make(arg);
        }
        if (call) {
            pos_ = start;
            throw ParseError("unknown function '" + std::string(name) + "'", start);
        }
        pos_ = after_name;
        return Expression::variable(std::string(name));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

bool is_function_name(std::string_view name) { return find_function(name) != nullptr; }

Expression parse(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace formflow
