#pragma once

// Truncated multivariate Taylor series in the bundle coordinates
// (x1, x2, x3, r) with complex coefficients.

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

namespace qf {

using cplx = std::complex<double>;

inline constexpr int kJetVars = 4;

/// Monomial bookkeeping for one storage order.
struct JetTable {
    int order = 0;
    std::vector<std::array<std::uint8_t, kJetVars>> exps;  // graded by total degree
    std::vector<int> degree_start;                         // first index of each degree, plus end
    std::vector<std::vector<std::pair<int, int>>> products; // products[k] = pairs (i, j) with exps i+j = k
    std::array<std::vector<std::pair<int, double>>, kJetVars> deriv;  // deriv[v][k] = (source index, factor)

    [[nodiscard]] int size_upto(int degree) const { return degree_start[static_cast<std::size_t>(degree) + 1]; }
    [[nodiscard]] int index_of(const std::array<std::uint8_t, kJetVars>& e) const;
    static const JetTable& get(int order);
};

class Jet {
public:
    Jet() = default;
    Jet(cplx constant, int order);
    static Jet variable(int v, double at, int order);

    [[nodiscard]] int order() const { return valid_; }
    [[nodiscard]] int storage_order() const { return table_ ? table_->order : 0; }
    [[nodiscard]] cplx value() const { return c_.empty() ? cplx(0) : c_[0]; }
    [[nodiscard]] const std::vector<cplx>& coeffs() const { return c_; }
    /// Partial derivative of the given multi-index order at the expansion point.
    [[nodiscard]] cplx partial(const std::array<std::uint8_t, kJetVars>& e) const;
    /// Series evaluated at an offset from the expansion point.
    [[nodiscard]] cplx at_offset(const std::array<double, kJetVars>& h) const;

    [[nodiscard]] Jet d(int v) const;
    [[nodiscard]] Jet conj() const;
    [[nodiscard]] Jet real() const;
    [[nodiscard]] Jet imag() const;
    [[nodiscard]] Jet truncated(int order) const;

    friend Jet operator+(const Jet& a, const Jet& b);
    friend Jet operator-(const Jet& a, const Jet& b);
    friend Jet operator*(const Jet& a, const Jet& b);
    friend Jet operator/(const Jet& a, const Jet& b);
    friend Jet operator*(cplx k, const Jet& a);
    friend Jet operator+(cplx k, const Jet& a);
    friend Jet operator+(const Jet& a, cplx k) { return k + a; }
    friend Jet operator*(const Jet& a, cplx k) { return k * a; }
    friend Jet operator-(const Jet& a, cplx k) { return (-k) + a; }
    friend Jet operator-(cplx k, const Jet& a) { return k + (-a); }
    Jet operator-() const;
    Jet& operator+=(const Jet& o) { return *this = *this + o; }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }

    /// g(a) for a univariate g with Taylor coefficients g^(n)(a0)/n!.
    [[nodiscard]] Jet compose(const std::vector<cplx>& taylor) const;

private:
    const JetTable* table_ = nullptr;
    int valid_ = 0;
    std::vector<cplx> c_;
    friend Jet make_jet(const JetTable* t, int valid);
};

Jet exp(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet log(const Jet& a);
Jet pow(const Jet& a, double q);
Jet atan(const Jet& a);

}  // namespace qf
