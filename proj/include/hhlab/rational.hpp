#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hhlab {

// Exact rational when both operands are exact and nothing overflows; otherwise
// a double. Comparisons between inexact values use an absolute/relative 1e-12
// tolerance so that equality still registers as a boundary case.
class Num {
public:
    static constexpr double tolerance = 1e-12;

    Num() : exact_(true), p_(0), q_(1), v_(0.0) {}
    Num(int n) : exact_(true), p_(n), q_(1), v_(n) {}
    Num(long n) : exact_(true), p_(n), q_(1), v_(static_cast<double>(n)) {}
    Num(long long n) : exact_(true), p_(n), q_(1), v_(static_cast<double>(n)) {}
    Num(double x) : exact_(false), p_(0), q_(1), v_(x) {}

    static Num ratio(long long p, long long q) {
        if (q == 0) throw std::invalid_argument("rational with zero denominator");
        Num r;
        r.set_exact(static_cast<__int128>(p), static_cast<__int128>(q));
        return r;
    }

    static Num inexact(double x) { return Num(x); }

    /// Parses "3", "-6/5", "0.05", "1e-3". Integers, fractions and plain
    /// decimals stay exact; anything with an exponent becomes a double.
    static Num parse(const std::string& text);

    bool exact() const { return exact_; }
    long long num() const { return p_; }
    long long den() const { return q_; }
    double value() const { return exact_ ? static_cast<double>(p_) / static_cast<double>(q_) : v_; }
    explicit operator double() const { return value(); }

    std::string str() const {
        if (!exact_) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", v_);
            return buf;
        }
        if (q_ == 1) return std::to_string(p_);
        return std::to_string(p_) + "/" + std::to_string(q_);
    }

    friend Num operator+(const Num& a, const Num& b) {
        if (a.exact_ && b.exact_)
            return from128(static_cast<__int128>(a.p_) * b.q_ + static_cast<__int128>(b.p_) * a.q_,
                           static_cast<__int128>(a.q_) * b.q_);
        return Num(a.value() + b.value());
    }
    friend Num operator-(const Num& a) {
        if (a.exact_) return ratio(-a.p_, a.q_);
        return Num(-a.v_);
    }
    friend Num operator-(const Num& a, const Num& b) { return a + (-b); }
    friend Num operator*(const Num& a, const Num& b) {
        if (a.exact_ && b.exact_)
            return from128(static_cast<__int128>(a.p_) * b.p_, static_cast<__int128>(a.q_) * b.q_);
        return Num(a.value() * b.value());
    }
    friend Num operator/(const Num& a, const Num& b) {
        if (b.is_zero()) throw std::domain_error("division by zero in exponent arithmetic");
        if (a.exact_ && b.exact_)
            return from128(static_cast<__int128>(a.p_) * b.q_, static_cast<__int128>(a.q_) * b.p_);
        return Num(a.value() / b.value());
    }
    Num& operator+=(const Num& o) { return *this = *this + o; }
    Num& operator-=(const Num& o) { return *this = *this - o; }
    Num& operator*=(const Num& o) { return *this = *this * o; }
    Num& operator/=(const Num& o) { return *this = *this / o; }

    bool is_zero() const { return exact_ ? p_ == 0 : v_ == 0.0; }

    // -1, 0, +1. Zero means exactly equal (exact) or within tolerance (inexact).
    friend int compare(const Num& a, const Num& b) {
        if (a.exact_ && b.exact_) {
            __int128 l = static_cast<__int128>(a.p_) * b.q_;
            __int128 r = static_cast<__int128>(b.p_) * a.q_;
            return l < r ? -1 : (l > r ? 1 : 0);
        }
        double x = a.value(), y = b.value();
        double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
        if (std::fabs(x - y) <= tolerance * scale) return 0;
        return x < y ? -1 : 1;
    }
    friend bool operator<(const Num& a, const Num& b) { return compare(a, b) < 0; }
    friend bool operator>(const Num& a, const Num& b) { return compare(a, b) > 0; }
    friend bool operator<=(const Num& a, const Num& b) { return compare(a, b) <= 0; }
    friend bool operator>=(const Num& a, const Num& b) { return compare(a, b) >= 0; }
    friend bool operator==(const Num& a, const Num& b) { return compare(a, b) == 0; }
    friend bool operator!=(const Num& a, const Num& b) { return compare(a, b) != 0; }

    friend Num min(const Num& a, const Num& b) { return b < a ? b : a; }
    friend Num max(const Num& a, const Num& b) { return a < b ? b : a; }

private:
    static __int128 gcd128(__int128 a, __int128 b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b != 0) {
            __int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    static Num from128(__int128 p, __int128 q) {
        Num r;
        if (!r.set_exact(p, q)) {
            r.exact_ = false;
            r.v_ = static_cast<double>(p) / static_cast<double>(q);
        }
        return r;
    }

    bool set_exact(__int128 p, __int128 q) {
        if (q < 0) {
            p = -p;
            q = -q;
        }
        __int128 g = gcd128(p, q);
        if (g > 1) {
            p /= g;
            q /= g;
        }
        constexpr __int128 lim = std::numeric_limits<long long>::max();
        if (p > lim || p < -lim || q > lim) return false;
        exact_ = true;
        p_ = static_cast<long long>(p);
        q_ = static_cast<long long>(q);
        v_ = static_cast<double>(p_) / static_cast<double>(q_);
        return true;
    }

    bool exact_;
    long long p_, q_;
    double v_;
};

inline Num Num::parse(const std::string& raw) {
    std::string s;
    for (char c : raw)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw std::invalid_argument("empty number");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        Num a = parse(s.substr(0, slash));
        Num b = parse(s.substr(slash + 1));
        return a / b;
    }
    bool plain = true;
    std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    int dots = 0;
    for (std::size_t i = start; i < s.size(); ++i) {
        if (s[i] == '.') ++dots;
        else if (!std::isdigit(static_cast<unsigned char>(s[i]))) plain = false;
    }
    if (start == s.size()) plain = false;
    if (plain && dots <= 1 && s.size() - start <= 17) {
        bool neg = s[0] == '-';
        std::string digits = s.substr(start);
        long long den = 1;
        auto dot = digits.find('.');
        if (dot != std::string::npos) {
            std::string frac = digits.substr(dot + 1);
            digits = digits.substr(0, dot) + frac;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        }
        if (digits.empty()) throw std::invalid_argument("malformed number '" + raw + "'");
        long long n = std::stoll(digits);
        return ratio(neg ? -n : n, den);
    }
    std::size_t used = 0;
    double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("malformed number '" + raw + "'");
    return Num(x);
}

// A Lebesgue/Lorentz exponent in [1, inf]; the infinity token keeps 1/q = 0 exact.
class Exponent {
public:
    Exponent() : inf_(true) {}
    Exponent(const Num& v) : inf_(false), v_(v) {}
    Exponent(int v) : inf_(false), v_(v) {}
    static Exponent infinity() { return Exponent(); }
    static Exponent parse(const std::string& s) {
        if (s == "inf" || s == "infty" || s == "infinity" || s == "oo") return infinity();
        return Exponent(Num::parse(s));
    }

    bool is_inf() const { return inf_; }
    const Num& finite() const {
        if (inf_) throw std::logic_error("infinite exponent has no finite value");
        return v_;
    }
    Num inverse() const { return inf_ ? Num(0) : Num(1) / v_; }
    double value() const { return inf_ ? std::numeric_limits<double>::infinity() : v_.value(); }
    std::string str() const { return inf_ ? "inf" : v_.str(); }

    friend bool operator==(const Exponent& a, const Exponent& b) {
        if (a.inf_ || b.inf_) return a.inf_ == b.inf_;
        return a.v_ == b.v_;
    }

private:
    bool inf_;
    Num v_;
};

}  // namespace hhlab
