#include "doctest.h"
#include "generators.hpp"

#include "qf/expr.hpp"

using namespace qf;
using namespace qf::sym;

namespace {

NormalForm nf(const std::string& s) { return normalize(FieldExpr::parse(s)); }

NormalForm word_on(const std::vector<Letter>& w, const NormalForm& f) { return apply_word(f, w); }

// Rewrites the first out-of-order adjacent pair with the commutator table,
// then finishes by plain normalization.
NormalForm rewrite_once(const std::vector<Letter>& w, const NormalForm& f) {
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        if (static_cast<int>(w[i]) <= static_cast<int>(w[i + 1])) continue;
        std::vector<Letter> outer(w.begin(), w.begin() + static_cast<long>(i));
        std::vector<Letter> inner(w.begin() + static_cast<long>(i) + 2, w.end());
        std::vector<Letter> swapped = outer;
        swapped.push_back(w[i + 1]);
        swapped.push_back(w[i]);
        swapped.insert(swapped.end(), inner.begin(), inner.end());
        // B A g = A B g - [A, B] g  with A = w[i+1], B = w[i]
        const NormalForm g = word_on(inner, f);
        return word_on(swapped, f) - word_on(outer, bracket(w[i + 1], w[i], g));
    }
    return word_on(w, f);
}

}  // namespace

TEST_CASE("differentiate: constants and commutators") {
    CHECK(derivative(NormalForm(5), Letter::D1).is_zero());
    CHECK(nf("D1(D2(f)) - D2(D1(f))") == nf("-I*D0(f)"));
    CHECK(nf("D1(D0(f)) - D0(D1(f))") == nf("-alpha*D1(f) - beta_bar*D2(f) - c*D0(f)"));
    CHECK(nf("D2(D0(f)) - D0(D2(f))") == nf("-beta*D1(f) - alpha_bar*D2(f) - c_bar*D0(f)"));
    CHECK(nf("Dr(D1(P)) - D1(Dr(P))").is_zero());
    CHECK(nf("Dr(c)").is_zero());
    CHECK(nf("Dr(x)").is_zero());
    CHECK(nf("Dr(r)") == NormalForm(1));
    CHECK(nf("D1(r)").is_zero());
}

TEST_CASE("normalize: spec examples") {
    CHECK(nf("exp(I*r)*exp(-I*r)") == NormalForm(1));
    CHECK(nf("D2(D1(f))") == nf("D1(D2(f)) + I*D0(f)"));
    CHECK(nf("x + x") == nf("2*x"));
    CHECK(nf("(f + g)^2") == nf("f*f + 2*f*g + g*g"));
    CHECK(nf("exp(r)^2") == nf("exp(2*r)"));
    CHECK(nf("P^(3/2)*P^(1/2)") == nf("P^2"));
    CHECK(nf("2^(-1/2)*2^(-1/2)") == nf("1/2"));
    CHECK(nf("2^(-1/2)") == nf("2^(1/2)/2"));
    CHECK(nf("3^(5/2)") == nf("9*3^(1/2)"));
}

TEST_CASE("conjugate") {
    CHECK(conjugate(NormalForm::imag_unit()) == -NormalForm::imag_unit());
    CHECK(conjugate(atoms::c()) == atoms::c_bar());
    CHECK(nf("conj(D1(f))") == nf("D2(f_bar)"));
    CHECK(normalize(conjugate(FieldExpr::parse("D1(f)"))) == nf("D2(f_bar)"));
    CHECK(nf("conj(P)") == nf("P"));
    CHECK(nf("conj(D1(D2(P)))") == nf("D2(D1(P))"));
    CHECK(nf("conj(conj(c))") == atoms::c());
}

TEST_CASE("integrability reductions") {
    CHECK(nf("D1(beta)") == nf("D2(alpha) + alpha*c_bar - beta*c"));
    CHECK(nf("D2(beta_bar)") == nf("D1(alpha_bar) + alpha_bar*c - beta_bar*c_bar"));
    CHECK(nf("D1(c_bar)") == nf("D2(c) + I*(alpha + alpha_bar)"));
    CHECK(nf("conj(D1(beta))") == nf("D2(beta_bar)"));
    for (const char* f : {"f", "c", "c_bar", "alpha", "beta", "beta_bar", "P", "D0(D2(c_bar))*beta"})
        CHECK_MESSAGE(jacobi_residual(nf(f)).is_zero(), f);
}

TEST_CASE("substitution table") {
    Substitution exact;
    exact[Registry::instance().alpha] = NormalForm();
    exact[Registry::instance().beta] = NormalForm();
    CHECK(substitute(nf("D1(D0(f)) - D0(D1(f))"), exact) == nf("-c*D0(f)"));
    CHECK(substitute(nf("D1(c_bar)"), exact) == nf("D2(c)"));
    Substitution p_profile;
    p_profile[*Registry::instance().find("P")] = nf("a/cos((r+s)/2)");
    CHECK(substitute(nf("Dr(P)"), p_profile) == nf("Dr(a/cos((r+s)/2))"));
    Substitution bad;
    bad[*Registry::instance().find("P")] = nf("P + 1");
    CHECK_THROWS_AS((void)substitute(nf("P"), bad), std::invalid_argument);
}

TEST_CASE("equals") {
    CHECK_FALSE(equals(nf("D1(D2(f))"), nf("D2(D1(f))"), EqualityPolicy::structural()));
    CHECK(equals(nf("conj(conj(c))"), nf("c"), EqualityPolicy::structural()));
    // Structural misses trig identities; the randomized policy does not.
    const NormalForm lhs = nf("sin(r)^2 + cos(r)^2");
    CHECK_FALSE(equals(lhs, NormalForm(1), EqualityPolicy::structural()));
    CHECK(equals(lhs, NormalForm(1)));
    CHECK_FALSE(equals(nf("f"), nf("g")));
    const Sampler partial = [](std::size_t) {
        PointSample p;
        p.set(*Registry::instance().find("x"), Word{}, 1.0);
        return p;
    };
    CHECK_THROWS_AS((void)equals(nf("x"), nf("f"), EqualityPolicy::randomized(), partial), ConfigError);
}

TEST_CASE("evaluate") {
    PointSample p;
    p.set(Registry::instance().c, Word{}, 0.0);
    CHECK(std::abs(evaluate(atoms::c(), p)) == 0.0);
    PointSample q;
    q.set(*Registry::instance().find("x"), Word{}, 1.0);
    q.r = 0.0;
    const cplx v = evaluate(nf("I*x*exp(-I*r)"), q);
    CHECK(std::abs(v - cplx(0, 1)) < 1e-15);
    try {
        (void)evaluate(nf("D1(D2(f))"), q);
        FAIL("expected MissingWordError");
    } catch (const MissingWordError& e) {
        CHECK(std::string(e.what()).find("D1(D2(f))") != std::string::npos);
    }
}

TEST_CASE("parser") {
    CHECK(nf("1.5e-1") == NormalForm(CRational(Rational(3, 20))));
    CHECK(nf("sqrt(P)^2") == nf("P"));
    CHECK(nf("-2^2") == NormalForm(-4));
    CHECK_THROWS_AS(FieldExpr::parse("f^g"), ParseError);
    CHECK_THROWS_AS(FieldExpr::parse("foo(1)"), ParseError);
    CHECK_THROWS_AS(FieldExpr::parse("(1 + 2"), ParseError);
    CHECK_THROWS_AS(FieldExpr::parse("1 $ 2"), ParseError);
}

TEST_CASE("printing round-trips through the parser") {
    testing::TreeGen gen(11);
    for (int i = 0; i < 100; ++i) {
        const NormalForm e = normalize(gen.tree(3));
        CHECK_MESSAGE(nf(e.str()) == e, e.str());
    }
}

TEST_CASE("property: Leibniz, involution, Jacobi on random trees") {
    testing::TreeGen gen(2024);
    for (int i = 0; i < 200; ++i) {
        const NormalForm a = normalize(gen.tree(3));
        const NormalForm b = normalize(gen.tree(3));
        const Letter l = gen.letter();
        CHECK(derivative(a * b, l) == derivative(a, l) * b + a * derivative(b, l));
        CHECK(conjugate(conjugate(a)) == a);
        CHECK(jacobi_residual(a).is_zero());
    }
}

TEST_CASE("property: confluence on derivative words") {
    testing::TreeGen gen(99);
    const NormalForm f = nf("f*c + beta");
    for (int i = 0; i < 30; ++i) {
        const auto w = gen.word(2 + gen.pick(3));
        CHECK(word_on(w, f) == rewrite_once(w, f));
    }
    CHECK(nf("D1(D2(D0(f)))") == rewrite_once({Letter::D1, Letter::D0, Letter::D2}, nf("f")) +
                                     nf("D1(D2(D0(f))) - D1(D0(D2(f)))"));
}

TEST_CASE("property: structural equality implies randomized equality") {
    testing::TreeGen gen(5);
    for (int i = 0; i < 50; ++i) {
        const FieldExpr e = gen.tree(3);
        const NormalForm a = normalize(e);
        const NormalForm b = normalize(FieldExpr::conj(FieldExpr::conj(e)));
        REQUIRE(equals(a, b, EqualityPolicy::structural()));
        CHECK(equals(a, b, EqualityPolicy::randomized(8, 1e-12)));
    }
}
