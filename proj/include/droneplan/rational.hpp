#pragma once

// Exact arithmetic for currency and probabilities.
//
// Currencies and probabilities enter the program as short decimals ("16.00",
// "0.05") and are held as GMP rationals so that solver, oracle and cost-share
// comparisons are exact. Rounding to two fractional digits happens only when
// a value is rendered for output.

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace droneplan {

using Rational = mpq_class;

/// num/den in canonical form.
Rational ratio(std::int64_t num, std::int64_t den);

/// Parses a plain decimal literal ("12", "-0.05", "16.00", "1e-3") exactly.
/// Throws std::invalid_argument on malformed input.
Rational parse_decimal(std::string_view text);

/// Exact conversion of a binary double (every finite double is a dyadic rational).
Rational from_double(double value);

/// Shortest round-trip decimal for a double, parsed exactly: 0.1 -> 1/10.
Rational from_shortest_double(double value);

/// Rounds half away from zero to `digits` fractional digits and renders it.
std::string format_decimal(const Rational& value, int digits = 2);

/// Exact fraction text, "p/q" or "p" for integers.
std::string format_exact(const Rational& value);

/// Lossless text: a plain decimal when the value terminates in base 10
/// ("0.025"), otherwise "p/q".
std::string to_text(const Rational& value);

/// Inverse of to_text; also accepts anything parse_decimal does.
Rational parse_text(std::string_view text);

double to_double(const Rational& value);

/// Smallest integer >= value * scale.
std::int64_t ceil_scaled(const Rational& value, std::int64_t scale);

/// Largest integer <= value * scale.
std::int64_t floor_scaled(const Rational& value, std::int64_t scale);

/// base^exp for a non-negative integer exponent.
Rational pow_int(const Rational& base, unsigned exp);

}  // namespace droneplan
