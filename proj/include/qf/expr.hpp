#pragma once

// Expression trees as written by users (config files, CLI flags, tests) and
// their evaluation against point samples.

#include "qf/symbolic.hpp"

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace qf::sym {

using cplx = std::complex<double>;

enum class Func : std::uint8_t { Exp, Sin, Cos, Log, Re, Im };

class FieldExpr {
public:
    enum class Kind : std::uint8_t { Number, Symbol, Add, Mul, Neg, Div, Pow, Call, Deriv, Conj, Normal };

    FieldExpr() : FieldExpr(CRational(0)) {}
    FieldExpr(const CRational& c);  // NOLINT(google-explicit-constructor)
    FieldExpr(std::int64_t c) : FieldExpr(CRational(c)) {}  // NOLINT(google-explicit-constructor)
    template <class F, std::enable_if_t<std::is_floating_point_v<F>, int> = 0>
    FieldExpr(F) = delete;

    static FieldExpr symbol(const std::string& name);
    static FieldExpr imag_unit() { return FieldExpr(CRational::imag_unit()); }
    static FieldExpr wrap(const NormalForm& nf);
    static FieldExpr call(Func f, const FieldExpr& arg);
    static FieldExpr deriv(Letter l, const FieldExpr& arg);
    static FieldExpr conj(const FieldExpr& arg);
    static FieldExpr power(const FieldExpr& base, const Rational& q);
    static FieldExpr binary(Kind k, const FieldExpr& a, const FieldExpr& b);

    /// Parses the plain-text grammar in docs/expression_grammar.md.
    static FieldExpr parse(const std::string& text);

    [[nodiscard]] Kind kind() const { return node_->kind; }
    [[nodiscard]] const CRational& value() const { return node_->value; }
    [[nodiscard]] const std::string& name() const { return node_->name; }
    [[nodiscard]] const Rational& exponent() const { return node_->exponent; }
    [[nodiscard]] Func func() const { return node_->func; }
    [[nodiscard]] Letter letter() const { return node_->letter; }
    [[nodiscard]] const std::vector<FieldExpr>& args() const { return node_->args; }
    [[nodiscard]] const NormalForm& normal() const { return node_->nf; }

    /// Identifiers referenced anywhere in the tree.
    [[nodiscard]] std::vector<std::string> symbols() const;
    [[nodiscard]] std::string str() const;

    friend FieldExpr operator+(const FieldExpr& a, const FieldExpr& b);
    friend FieldExpr operator-(const FieldExpr& a, const FieldExpr& b);
    friend FieldExpr operator*(const FieldExpr& a, const FieldExpr& b);
    friend FieldExpr operator/(const FieldExpr& a, const FieldExpr& b);
    FieldExpr operator-() const;

private:
    struct Node {
        Kind kind = Kind::Number;
        CRational value;
        std::string name;
        Rational exponent;
        Func func = Func::Exp;
        Letter letter = Letter::D1;
        std::vector<FieldExpr> args;
        NormalForm nf;
    };
    explicit FieldExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static FieldExpr make(Node n) { return FieldExpr(std::make_shared<const Node>(std::move(n))); }

    std::shared_ptr<const Node> node_;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

FieldExpr differentiate(const FieldExpr& e, Letter l);
/// Pushes conjugation to the leaves: swaps D1/D2 and paired atoms.
FieldExpr conjugate(const FieldExpr& e);
NormalForm normalize(const FieldExpr& e);
NormalForm normalize(const FieldExpr& e, const Substitution& s);

// ---------------------------------------------------------------------------
// Point samples

class MissingWordError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Values of derivative words of atoms at one point of the bundle.
class PointSample {
public:
    std::array<double, 3> base{0.0, 0.0, 0.0};
    double r = 0.0;

    void set(AtomId a, Word w, cplx v) { values_[{a, w}] = v; }
    [[nodiscard]] bool has(AtomId a, Word w) const { return values_.count({a, w}) != 0; }
    /// Value of a word; throws MissingWordError naming the word.
    [[nodiscard]] cplx get(AtomId a, Word w) const;
    [[nodiscard]] const std::map<std::pair<AtomId, Word>, cplx>& values() const { return values_; }

    /// Optional generator consulted for words without an explicit value.
    std::function<cplx(AtomId, Word)> fallback;

private:
    std::map<std::pair<AtomId, Word>, cplx> values_;
};

std::string word_name(AtomId a, Word w);

cplx evaluate(const NormalForm& e, const PointSample& p);
cplx evaluate(const FieldExpr& e, const PointSample& p);

/// Every (atom, word) pair a normal form depends on, including inside
/// transcendental arguments.
std::vector<std::pair<AtomId, Word>> required_words(const NormalForm& e);

/// Sample in which every word takes an independent pseudo-random value with a
/// small denominator (multiples of 1/16), deterministic in (seed, atom, word).
/// Words made only of D0 and Dr on real atoms are real, as is r.
PointSample free_sample(std::uint64_t seed);

// ---------------------------------------------------------------------------
// Equality

struct EqualityPolicy {
    enum class Mode : std::uint8_t { Structural, Randomized, Default };
    Mode mode = Mode::Default;
    int samples = 8;
    double tol = 1e-9;
    std::uint64_t seed = 0x5eed;

    static EqualityPolicy structural() { return {Mode::Structural}; }
    static EqualityPolicy randomized(int n = 8, double tol = 1e-9) { return {Mode::Randomized, n, tol}; }
};

using Sampler = std::function<PointSample(std::size_t index)>;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structural comparison of normal forms, or evaluation of the difference on
/// random samples. Default: structural, falling back to randomized. Without a
/// sampler, free_sample is used. A sampler that lacks a word raises
/// ConfigError.
bool equals(const NormalForm& a, const NormalForm& b, const EqualityPolicy& policy = {},
            const Sampler& sampler = nullptr);
bool equals(const FieldExpr& a, const FieldExpr& b, const EqualityPolicy& policy = {},
            const Sampler& sampler = nullptr);

}  // namespace qf::sym
