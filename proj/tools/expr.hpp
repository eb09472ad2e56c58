#pragma once

#include <functional>
#include <string_view>

namespace bessel::cli {

/// Compiles an arithmetic expression over the variables t, x, u, v.
/// Grammar: + - * / ^, unary minus, parentheses, numbers, and the functions
/// sin cos tan exp log sqrt abs tanh atan min max.
/// Throws std::invalid_argument with the offending position on bad input.
std::function<double(double t, double x, double u, double v)> compile_expression(std::string_view text);

} // namespace bessel::cli
