#pragma once

// Exterior algebra on the bundle over the basis (mu, conj(mu), lambda, dr),
// with coefficients in the normal-form algebra. Bit L of a mask stands for
// the L-th basis 1-form; d uses the structure equations
//
//   dmu     = alpha mu^lambda + beta mubar^lambda
//   dlambda = i mu^mubar + c mu^lambda + conj(c) mubar^lambda
//   d(dr)   = 0

#include "qf/symbolic.hpp"

#include <array>
#include <string>

namespace qf {

class Form {
public:
    Form() = default;
    static Form scalar(const sym::NormalForm& f);
    /// Basis 1-form with index 0..3 (mu, mubar, lambda, dr).
    static Form basis(int l);
    /// sum_L comps[L] * basis(L)
    static Form one_form(const std::array<sym::NormalForm, 4>& comps);

    [[nodiscard]] const sym::NormalForm& coef(unsigned mask) const { return c_[mask]; }
    void set(unsigned mask, sym::NormalForm v) { c_[mask] = std::move(v); }
    [[nodiscard]] bool is_zero() const;

    friend Form operator+(const Form& a, const Form& b);
    friend Form operator-(const Form& a, const Form& b);
    friend Form operator*(const sym::NormalForm& f, const Form& a);
    friend Form wedge(const Form& a, const Form& b);

    [[nodiscard]] Form substitute(const sym::Substitution& s) const;
    [[nodiscard]] std::string str() const;

private:
    std::array<sym::NormalForm, 16> c_{};
};

/// Sign of moving the bits of b past those of a (0 when they overlap).
int wedge_sign(unsigned a, unsigned b);

/// Exterior derivative; the substitution table is applied to every coefficient.
Form d(const Form& f, const sym::Substitution& s = {});
Form d_basis(int l);

/// Determinant of a 4x4 matrix of normal forms (Leibniz expansion).
sym::NormalForm det4(const std::array<std::array<sym::NormalForm, 4>, 4>& m);

}  // namespace qf
