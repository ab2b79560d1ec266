#pragma once

#include <boost/rational.hpp>

#include <charconv>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cgolab {

using Rational = boost::rational<long long>;

/// Lebesgue exponent p in [1, inf], stored through 1/p so that infinity is exact.
class Exponent {
 public:
  Exponent() = default;

  /// p = num/den.
  Exponent(long long num, long long den = 1) {
    if (num <= 0 || den <= 0) throw std::invalid_argument("exponent must be positive");
    set_recip(Rational(den, num));
  }

  static Exponent infinity() { return from_recip(Rational(0)); }

  static Exponent from_recip(Rational r) {
    Exponent e;
    e.set_recip(r);
    return e;
  }

  /// Accepts "2", "6/5", "inf".
  static Exponent parse(std::string_view s) {
    if (s == "inf" || s == "infinity" || s == "∞") return infinity();
    const auto slash = s.find('/');
    long long num = 0, den = 1;
    auto read = [](std::string_view part, long long& out) {
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
      if (ec != std::errc() || ptr != part.data() + part.size())
        throw std::invalid_argument("bad exponent '" + std::string(part) + "'");
    };
    if (slash == std::string_view::npos) {
      read(s, num);
    } else {
      read(s.substr(0, slash), num);
      read(s.substr(slash + 1), den);
    }
    return Exponent(num, den);
  }

  Rational recip() const { return recip_; }
  bool is_infinite() const { return recip_.numerator() == 0; }
  double value() const {
    return is_infinite() ? std::numeric_limits<double>::infinity()
                         : static_cast<double>(recip_.denominator()) / recip_.numerator();
  }
  /// Hoelder conjugate p' with 1/p + 1/p' = 1.
  Exponent conjugate() const { return from_recip(Rational(1) - recip_); }

  std::string str() const {
    if (is_infinite()) return "inf";
    const Rational v(recip_.denominator(), recip_.numerator());
    if (v.denominator() == 1) return std::to_string(v.numerator());
    return std::to_string(v.numerator()) + "/" + std::to_string(v.denominator());
  }

  friend bool operator==(const Exponent& a, const Exponent& b) { return a.recip_ == b.recip_; }

 private:
  void set_recip(Rational r) {
    if (r < Rational(0) || r > Rational(1)) throw std::invalid_argument("exponent outside [1, inf]");
    recip_ = r;
  }
  Rational recip_{1, 2};
};

}  // namespace cgolab
