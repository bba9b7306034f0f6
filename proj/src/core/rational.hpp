#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace heartsim {

// Exact ratio used by report math (endurance, delivery ratio) so that
// quantities like 1800/200 compare as integers, not as rounded doubles.
struct Rational {
    int64_t num = 0;
    int64_t den = 1;

    static Rational of(int64_t n, int64_t d) {
        if (d == 0) throw std::invalid_argument("rational: zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        const int64_t g = std::gcd(n < 0 ? -n : n, d);
        return Rational{n / g, d / g};
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool is_integer() const { return den == 1; }

    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

    friend bool operator==(const Rational&, const Rational&) = default;
};

inline Rational operator*(const Rational& a, const Rational& b) {
    return Rational::of(a.num * b.num, a.den * b.den);
}

}  // namespace heartsim
