#include "droneplan/rational.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace droneplan {

namespace {

mpz_class pow10(unsigned exp) {
  mpz_class out;
  mpz_ui_pow_ui(out.get_mpz_t(), 10, exp);
  return out;
}

std::int64_t to_int64(const mpz_class& value) {
  if (!value.fits_slong_p()) {
    throw std::overflow_error("scaled value exceeds 64-bit range");
  }
  return value.get_si();
}

}  // namespace

Rational parse_decimal(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
  };
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  std::size_t fraction_digits = 0;
  bool seen_point = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) {
        ++fraction_digits;
      }
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (digits.empty()) {
    return fail();
  }
  long exponent = 0;
  if (pos < text.size()) {
    if (text[pos] != 'e' && text[pos] != 'E') {
      return fail();
    }
    ++pos;
    const auto* first = text.data() + pos;
    const auto* last = text.data() + text.size();
    if (first != last && *first == '+') {
      ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, exponent);
    if (ec != std::errc{} || ptr != last) {
      return fail();
    }
  }
  mpz_class numerator(digits, 10);
  long scale = exponent - static_cast<long>(fraction_digits);
  Rational out;
  if (scale >= 0) {
    out = Rational(mpz_class(numerator * pow10(static_cast<unsigned>(scale))));
  } else {
    out = Rational(numerator, pow10(static_cast<unsigned>(-scale)));
    out.canonicalize();
  }
  return negative ? Rational(-out) : out;
}

Rational ratio(std::int64_t num, std::int64_t den) {
  Rational out(mpz_class(std::to_string(num)), mpz_class(std::to_string(den)));
  out.canonicalize();
  return out;
}

Rational from_double(double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("non-finite value has no rational form");
  }
  return Rational(value);
}

Rational from_shortest_double(double value) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("non-finite value has no rational form");
  }
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) {
    throw std::invalid_argument("cannot render double");
  }
  return parse_decimal(std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data())));
}

std::string format_decimal(const Rational& value, int digits) {
  const mpz_class scale = pow10(static_cast<unsigned>(digits));
  const bool negative = sgn(value) < 0;
  Rational magnitude = abs(value) * scale;
  // Half away from zero.
  magnitude += Rational(1, 2);
  mpz_class scaled = magnitude.get_num() / magnitude.get_den();
  std::string text = scaled.get_str();
  if (digits > 0) {
    if (text.size() <= static_cast<std::size_t>(digits)) {
      text.insert(0, static_cast<std::size_t>(digits) + 1 - text.size(), '0');
    }
    text.insert(text.size() - static_cast<std::size_t>(digits), ".");
  }
  if (negative && scaled != 0) {
    text.insert(0, "-");
  }
  return text;
}

std::string format_exact(const Rational& value) { return value.get_str(); }

std::string to_text(const Rational& value) {
  // Terminating iff the denominator has no prime factors besides 2 and 5.
  mpz_class den = value.get_den();
  unsigned twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) {
    den /= 2;
    ++twos;
  }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return value.get_str();
  const auto digits = static_cast<int>(std::max(twos, fives));
  return format_decimal(value, digits);
}

Rational parse_text(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return parse_decimal(text);
  auto integer = [&](std::string_view part) {
    const auto body = !part.empty() && part[0] == '-' ? part.substr(1) : part;
    if (body.empty() || body.find_first_not_of("0123456789") != std::string_view::npos) {
      throw std::invalid_argument("malformed fraction '" + std::string(text) + "'");
    }
    return mpz_class(std::string(part), 10);
  };
  const auto den = integer(text.substr(slash + 1));
  if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  Rational out(integer(text.substr(0, slash)), den);
  out.canonicalize();
  return out;
}

double to_double(const Rational& value) { return value.get_d(); }

std::int64_t ceil_scaled(const Rational& value, std::int64_t scale) {
  Rational scaled = value * Rational(scale);
  mpz_class out;
  mpz_cdiv_q(out.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
  return to_int64(out);
}

std::int64_t floor_scaled(const Rational& value, std::int64_t scale) {
  Rational scaled = value * Rational(scale);
  mpz_class out;
  mpz_fdiv_q(out.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
  return to_int64(out);
}

Rational pow_int(const Rational& base, unsigned exp) {
  Rational out(1);
  for (unsigned k = 0; k < exp; ++k) {
    out *= base;
  }
  return out;
}

}  // namespace droneplan
