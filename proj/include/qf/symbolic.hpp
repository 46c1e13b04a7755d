#pragma once

// Normal-form algebra for scalar fields on a 3-dimensional CR manifold and on
// the trivialised circle bundle over it.
//
// A NormalForm is a finite sum of monomials with exact Gaussian-rational
// coefficients. Each monomial is a product of interned factors raised to
// rational powers. Factors are derivative words applied to atoms, or the
// transcendental nodes exp/sin/cos/log, or an opaque power of a sum.
//
// Derivative words are kept in the fixed order D1^a D2^b D0^c Dr^d (D1
// outermost). Reordering uses
//
//   [D1, D2] = -i D0
//   [D1, D0] = -alpha D1 - conj(beta) D2 - c D0
//   [D2, D0] = -beta D1 - conj(alpha) D2 - conj(c) D0
//   [Dr, . ] = 0
//
// together with the integrability relations of the structure functions,
// applied as one-way reductions:
//
//   D1 beta       -> D2 alpha + alpha conj(c) - beta c
//   D2 conj(beta) -> D1 conj(alpha) + conj(alpha) c - conj(beta) conj(c)
//   D1 conj(c)    -> D2 c + i (alpha + conj(alpha))
//
// All atoms denote smooth functions.

#include "qf/rational.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace qf::sym {

enum class Letter : std::uint8_t { D1 = 0, D2 = 1, D0 = 2, Dr = 3 };
inline constexpr std::array<Letter, 4> kLetters{Letter::D1, Letter::D2, Letter::D0, Letter::Dr};

/// Exponents of D1, D2, D0, Dr in a canonically ordered derivative word.
struct Word {
    std::array<std::uint8_t, 4> n{0, 0, 0, 0};

    [[nodiscard]] int order() const { return n[0] + n[1] + n[2] + n[3]; }
    [[nodiscard]] bool empty() const { return order() == 0; }
    [[nodiscard]] int count(Letter l) const { return n[static_cast<int>(l)]; }
    [[nodiscard]] Word with(Letter l, int delta) const {
        Word w = *this;
        w.n[static_cast<int>(l)] = static_cast<std::uint8_t>(w.n[static_cast<int>(l)] + delta);
        return w;
    }
    friend bool operator==(const Word& a, const Word& b) { return a.n == b.n; }
    friend bool operator<(const Word& a, const Word& b) { return a.n < b.n; }
    [[nodiscard]] std::string str() const;
};

enum class Reality : std::uint8_t { Real, Complex };

using AtomId = std::uint32_t;
using FactorId = std::uint32_t;

struct AtomInfo {
    std::string name;
    Reality reality = Reality::Complex;
    bool r_dependent = true;
    AtomId conjugate = 0;
    bool fiber_coordinate = false;
    /// Annihilated by every derivative.
    bool constant = false;
    /// Letter that never appears in the normal form of this atom's words
    /// (integrability reduction), if any.
    std::optional<Letter> eliminated;
};

class NormalForm;

enum class FactorKind : std::uint8_t { AtomWord, Exp, Sin, Cos, Log, Pow };

struct Factor {
    FactorKind kind = FactorKind::AtomWord;
    AtomId atom = 0;
    Word word;
    std::shared_ptr<const NormalForm> arg;  // transcendental argument or power base
};

struct Monomial {
    std::vector<std::pair<FactorId, Rational>> factors;  // sorted by id, exponents non-zero

    [[nodiscard]] bool empty() const { return factors.empty(); }
    friend bool operator==(const Monomial& a, const Monomial& b) { return a.factors == b.factors; }
    friend bool operator<(const Monomial& a, const Monomial& b);
    [[nodiscard]] std::size_t hash() const;
};

struct Term {
    Monomial mono;
    CRational coef;
};

/// Sum of monomials with no repeated symbolic part and no zero coefficient.
class NormalForm {
public:
    NormalForm() = default;
    NormalForm(const CRational& c);  // NOLINT(google-explicit-constructor)
    NormalForm(std::int64_t c) : NormalForm(CRational(c)) {}  // NOLINT(google-explicit-constructor)

    static NormalForm from_terms(std::vector<Term> terms);
    static NormalForm imag_unit() { return NormalForm(CRational::imag_unit()); }
    static NormalForm atom(AtomId id);
    static NormalForm atom(const std::string& name);
    static NormalForm atom_word(AtomId id, Word w);
    static NormalForm factor_power(FactorId f, const Rational& q);

    [[nodiscard]] const std::vector<Term>& terms() const { return terms_; }
    [[nodiscard]] bool is_zero() const { return terms_.empty(); }
    [[nodiscard]] std::optional<CRational> as_constant() const;
    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] std::size_t hash() const;

    friend NormalForm operator+(const NormalForm& a, const NormalForm& b);
    friend NormalForm operator-(const NormalForm& a, const NormalForm& b);
    friend NormalForm operator*(const NormalForm& a, const NormalForm& b);
    friend NormalForm operator*(const CRational& k, const NormalForm& a);
    NormalForm operator-() const;
    NormalForm& operator+=(const NormalForm& o);
    NormalForm& operator-=(const NormalForm& o);
    NormalForm& operator*=(const NormalForm& o);
    friend bool operator==(const NormalForm& a, const NormalForm& b);
    friend bool operator!=(const NormalForm& a, const NormalForm& b) { return !(a == b); }

    /// Structural ordering, used only to key caches.
    friend bool operator<(const NormalForm& a, const NormalForm& b);

    [[nodiscard]] std::string str() const;
    [[nodiscard]] std::string latex() const;

private:
    std::vector<Term> terms_;
};

NormalForm pow(const NormalForm& base, const Rational& q);
NormalForm inverse(const NormalForm& base);
NormalForm exp(const NormalForm& arg);
NormalForm sin(const NormalForm& arg);
NormalForm cos(const NormalForm& arg);
NormalForm log(const NormalForm& arg);

/// Formal derivative along one of the four frame directions.
NormalForm derivative(const NormalForm& e, Letter l);
/// Word applied innermost-first: derivative(derivative(e, w_last), ...).
NormalForm apply_word(const NormalForm& e, const std::vector<Letter>& letters);
NormalForm conjugate(const NormalForm& e);

/// [A, B] f computed from the commutator table (not by composing derivatives).
NormalForm bracket(Letter a, Letter b, const NormalForm& f);
/// Cyclic sum of [X, [Y, Z]] f over (D1, D2, D0), with every bracket taken
/// from the table. Vanishes iff the table is consistent on f.
NormalForm jacobi_residual(const NormalForm& f);

/// Replaces every occurrence of an atom (and, through its words, of its
/// derivatives) by the given expression. Conjugate atoms are substituted by
/// the conjugate expression automatically.
using Substitution = std::map<AtomId, NormalForm>;
NormalForm substitute(const NormalForm& e, const Substitution& s);

/// Coefficient extraction helpers.
NormalForm real_part(const NormalForm& e);
NormalForm imag_part(const NormalForm& e);

// ---------------------------------------------------------------------------
// Atom and factor registry.

class Registry {
public:
    static Registry& instance();

    /// Declares (or returns) an atom. Complex atoms get a partner named
    /// "<name>_bar". Redeclaring with different flags throws.
    AtomId declare(const std::string& name, Reality reality, bool r_dependent);
    /// Declares a constant parameter (every derivative vanishes).
    AtomId declare_constant(const std::string& name, Reality reality = Reality::Real);
    [[nodiscard]] std::optional<AtomId> find(const std::string& name) const;
    /// Looks the atom up, declaring an unknown name as a complex,
    /// r-dependent generic atom.
    AtomId get_or_declare(const std::string& name);
    [[nodiscard]] const AtomInfo& atom(AtomId id) const;

    FactorId intern(const Factor& f);
    [[nodiscard]] const Factor& factor(FactorId id) const;
    [[nodiscard]] std::size_t factor_count() const;

    // Fixed atoms.
    AtomId r, c, c_bar, alpha, alpha_bar, beta, beta_bar;

private:
    Registry();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Names of the standard atoms used across the library.
namespace atoms {
NormalForm r();
NormalForm c();
NormalForm c_bar();
NormalForm alpha();
NormalForm alpha_bar();
NormalForm beta();
NormalForm beta_bar();
}  // namespace atoms

std::string factor_str(FactorId id);
std::string factor_latex(FactorId id);

}  // namespace qf::sym
