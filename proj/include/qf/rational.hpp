#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qf {

/// Exact rational with 64-bit numerator/denominator. Arithmetic goes through
/// 128-bit intermediates and throws on overflow instead of wrapping.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT(google-explicit-constructor)
    Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

    [[nodiscard]] std::int64_t num() const { return num_; }
    [[nodiscard]] std::int64_t den() const { return den_; }
    [[nodiscard]] bool is_zero() const { return num_ == 0; }
    [[nodiscard]] bool is_one() const { return num_ == 1 && den_ == 1; }
    [[nodiscard]] bool is_integer() const { return den_ == 1; }
    [[nodiscard]] double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        const __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
        const __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return from_wide(n, d);
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        return from_wide(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
    }
    Rational operator-() const {
        Rational r;
        r.num_ = -num_;
        r.den_ = den_;
        return r;
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.num_ == b.num_ && a.den_ == b.den_; }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }

    [[nodiscard]] std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }
    [[nodiscard]] std::size_t hash() const {
        return std::hash<std::int64_t>{}(num_) * 1000003u ^ std::hash<std::int64_t>{}(den_);
    }

private:
    static Rational from_wide(__int128 n, __int128 d) {
        if (d == 0) throw std::domain_error("rational with zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 a = n < 0 ? -n : n;
        __int128 b = d;
        while (b != 0) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            n /= a;
            d /= a;
        }
        constexpr __int128 lim = INT64_MAX;
        if (n > lim || n < -lim || d > lim) throw std::overflow_error("rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }
    void assign(std::int64_t n, std::int64_t d) { *this = from_wide(n, d); }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Exact Gaussian rational re + i*im.
struct CRational {
    Rational re;
    Rational im;

    constexpr CRational() = default;
    CRational(Rational r) : re(r) {}  // NOLINT(google-explicit-constructor)
    CRational(std::int64_t r) : re(r) {}  // NOLINT(google-explicit-constructor)
    CRational(Rational r, Rational i) : re(r), im(i) {}

    static CRational imag_unit() { return {Rational(0), Rational(1)}; }

    [[nodiscard]] bool is_zero() const { return re.is_zero() && im.is_zero(); }
    [[nodiscard]] bool is_one() const { return re.is_one() && im.is_zero(); }
    [[nodiscard]] bool is_real() const { return im.is_zero(); }
    [[nodiscard]] CRational conj() const { return {re, -im}; }
    [[nodiscard]] std::complex<double> to_complex() const { return {re.to_double(), im.to_double()}; }

    friend CRational operator+(const CRational& a, const CRational& b) { return {a.re + b.re, a.im + b.im}; }
    friend CRational operator-(const CRational& a, const CRational& b) { return {a.re - b.re, a.im - b.im}; }
    friend CRational operator*(const CRational& a, const CRational& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend CRational operator/(const CRational& a, const CRational& b) {
        const Rational n = b.re * b.re + b.im * b.im;
        if (n.is_zero()) throw std::domain_error("complex rational division by zero");
        const CRational t = a * b.conj();
        return {t.re / n, t.im / n};
    }
    CRational operator-() const { return {-re, -im}; }
    CRational& operator+=(const CRational& o) { return *this = *this + o; }
    CRational& operator*=(const CRational& o) { return *this = *this * o; }

    friend bool operator==(const CRational& a, const CRational& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const CRational& a, const CRational& b) { return !(a == b); }

    [[nodiscard]] std::size_t hash() const { return re.hash() * 31u + im.hash(); }
};

/// Parses "3", "-2/7" or a finite decimal such as "0.125" into an exact rational.
Rational parse_rational(const std::string& text);

}  // namespace qf
