#include "doctest.h"
#include "generators.hpp"

#include "qf/cr_structure.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace qf;
using namespace qf::sym;

namespace {

const cplx I(0, 1);

FieldExpr fe(const std::string& s) { return FieldExpr::parse(s); }
NormalForm nf(const std::string& s) { return normalize(FieldExpr::parse(s)); }

std::vector<Point3> random_points(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Point3> pts;
    for (int i = 0; i < n; ++i) pts.push_back({u(rng), u(rng), u(rng)});
    return pts;
}

std::shared_ptr<CoframeStructure> heis_coframe(const std::string& name, const char* mu1, const char* mu2,
                                               const char* mu3, const char* l1, const char* l2, const char* l3) {
    return std::make_shared<CoframeStructure>(name, std::array<FieldExpr, 3>{fe(mu1), fe(mu2), fe(mu3)},
                                              std::array<FieldExpr, 3>{fe(l1), fe(l2), fe(l3)});
}

// Coframe values of a gauged structure, evaluated pointwise without jets of
// the coframe itself; the oracle differentiates them by central differences.
Eigen::Matrix3cd coframe_values(const StructurePtr& s, const Point3& p) {
    const FrameJets f = s->jets(p, 0);
    Eigen::Matrix3cd m;
    for (int a = 0; a < 3; ++a)
        for (int j = 0; j < 3; ++j) m(a, j) = f.coframe[a][j].value();
    return m;
}

}  // namespace

TEST_CASE("jets: arithmetic and derivatives") {
    const Jet x = Jet::variable(0, 0.3, 4);
    const Jet y = Jet::variable(1, -0.2, 4);
    const Jet f = exp(x * y) + sin(x) * cos(y);
    CHECK(std::abs(f.value() - (std::exp(-0.06) + std::sin(0.3) * std::cos(-0.2))) < 1e-14);
    const cplx fx = f.d(0).value();
    CHECK(std::abs(fx - (-0.2 * std::exp(-0.06) + std::cos(0.3) * std::cos(-0.2))) < 1e-14);
    const cplx fxy = f.d(0).d(1).value();
    CHECK(std::abs(fxy - ((1.0 + 0.3 * -0.2) * std::exp(-0.06) - std::cos(0.3) * std::sin(-0.2))) < 1e-13);
    CHECK(f.d(0).d(1).order() == 2);
    const Jet l = log(2.0 + x);
    CHECK(std::abs(l.d(0).d(0).value() + 1.0 / (2.3 * 2.3)) < 1e-14);
    const Jet q = pow(x + 1.0, 1.5);
    CHECK(std::abs(q.d(0).value() - 1.5 * std::sqrt(1.3)) < 1e-14);
    const Jet a = atan(y);
    CHECK(std::abs(a.value() - std::atan(-0.2)) < 1e-15);
    CHECK(std::abs(a.d(1).value() - 1.0 / 1.04) < 1e-14);
    Jet z(1.0, 0);
    CHECK_THROWS_AS((void)z.d(0), std::runtime_error);
}

TEST_CASE("validate_coframe") {
    const auto pts = random_points(10, 1);
    auto heis = std::dynamic_pointer_cast<const CoframeStructure>(heisenberg());
    REQUIRE(heis);
    const CoframeReport ok = validate_coframe(*heis, pts);
    CHECK(ok.valid);
    for (const auto& r : ok.residuals) {
        CHECK(std::abs(r.dlambda_mumubar - I) < 1e-12);
        CHECK(std::abs(r.dmu_mumubar) < 1e-12);
    }
    auto scaled = heis_coframe("scaled", "1", "I", "0", "-2*x2", "2*x1", "1");
    const CoframeReport bad = validate_coframe(*scaled, pts);
    CHECK_FALSE(bad.valid);
    CHECK(std::abs(bad.residuals[0].dlambda_mumubar - 2.0 * I) < 1e-12);
    // mu = dz + zb dzb
    auto skew = heis_coframe("skew", "1 + x1 - I*x2", "I - I*x1 - x2", "0", "-x2", "x1", "1/2");
    const CoframeReport bad2 = validate_coframe(*skew, pts);
    CHECK_FALSE(bad2.valid);
    auto complex_lambda = heis_coframe("cl", "1", "I", "0", "-x2", "x1", "1/2 + I*x1");
    CHECK_FALSE(validate_coframe(*complex_lambda, pts).valid);
}

TEST_CASE("structure functions of Heisenberg vanish") {
    const auto& reg = Registry::instance();
    for (const auto& p : random_points(10, 2)) {
        const PointSample s = extract_structure_functions(heisenberg(), p, 3);
        CHECK(s.values().size() > 20);
        for (const auto& [key, v] : s.values()) CHECK(std::abs(v) < 1e-12);
        CHECK(s.has(reg.c, Word{{1, 1, 0, 0}}));
    }
}

TEST_CASE("produced samples are conjugate-consistent") {
    const auto g = builtin_structure("heisenberg-gauged(tau=x1*x2/3,theta=x3/2 + x1)");
    const PointSample s = extract_structure_functions(g, {0.2, -0.4, 0.5}, 2);
    for (const auto& [key, v] : s.values()) {
        const auto [a, w] = key;
        // The conjugate word, rewritten to canonical order, evaluated on the same sample.
        const NormalForm conj_word = conjugate(NormalForm::atom_word(a, w));
        CHECK(std::abs(evaluate(conj_word, s) - std::conj(v)) < 1e-10);
    }
}

TEST_CASE("cr and canonical section residuals") {
    const auto h = heisenberg();
    for (const auto& p : random_points(5, 3)) {
        CHECK(std::abs(cr_residual(fe("z"), h, p)) < 1e-14);
        CHECK(std::abs(cr_residual(fe("u + I*z*zb"), h, p)) < 1e-14);
        CHECK(std::abs(cr_residual(fe("zb") , h, p) - 1.0) < 1e-14);
        CHECK(std::abs(canonical_section_residual(fe("1"), h, p)) < 1e-14);
    }
    CHECK_THROWS_AS((void)canonical_section_residual(fe("x1"), h, {0, 0.5, 0}), std::domain_error);
    // c != 0: psi = 1 gives conj(c).
    const auto g = builtin_structure("heisenberg-gauged(tau=x1/2,theta=x2)");
    const Point3 p{0.1, 0.3, -0.2};
    const FrameJets f = g->jets(p, 1);
    REQUIRE(std::abs(f.c.value()) > 1e-3);
    CHECK(std::abs(canonical_section_residual(fe("1"), g, p) - std::conj(f.c.value())) < 1e-13);
    // psi pulled back through the gauge: psi mu' ^ lambda' = mu ^ lambda.
    CHECK(std::abs(canonical_section_residual(fe("exp(-3*x1/2 - I*x2)"), g, p)) < 1e-12);
}

TEST_CASE("builtin structure names") {
    CHECK(builtin_structure("heisenberg")->name() == "heisenberg");
    CHECK_NOTHROW(builtin_structure("heisenberg-gauged(tau=0.1,theta=-0.2)"));
    CHECK_NOTHROW(builtin_structure("heisenberg-gauged(tau=sin(x1*x2),theta=x3)"));
    try {
        (void)builtin_structure("sphere");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("unknown structure") != std::string::npos);
    }
    CHECK_THROWS_AS(builtin_structure("heisenberg-gauged(phi=1)"), ConfigError);
    CHECK_THROWS_AS(builtin_structure("heisenberg-gauged(tau=1+)"), ConfigError);
}

TEST_CASE("frame presentation agrees with coframe presentation") {
    // Heisenberg D1 = d/dz + (x2 + i x1) d/du.
    auto fs = std::make_shared<FrameStructure>(
        "heis-frame", std::array<FieldExpr, 3>{fe("1/2"), fe("-I/2"), fe("x2 + I*x1")});
    for (const auto& p : random_points(4, 4)) {
        const FrameJets a = fs->jets(p, 2);
        const FrameJets b = heisenberg()->jets(p, 2);
        for (int l = 0; l < 3; ++l)
            for (int j = 0; j < 3; ++j) CHECK(std::abs(a.frame[l][j].value() - b.frame[l][j].value()) < 1e-13);
        CHECK(std::abs(a.c.value()) < 1e-13);
    }
    // A deformed frame: structure functions agree with the coframe route.
    auto fs2 = std::make_shared<FrameStructure>(
        "deformed", std::array<FieldExpr, 3>{fe("1/2 + x3/5"), fe("-I/2"), fe("x2 + I*x1 + x1*x1/7")});
    const Point3 p{0.2, 0.1, -0.3};
    const FrameJets a = fs2->jets(p, 2);
    const FrameJets b = frame_from_coframe(a.coframe);
    CHECK(std::abs(a.c.value() - b.c.value()) < 1e-12);
    CHECK(std::abs(a.alpha.value() - b.alpha.value()) < 1e-12);
    CHECK(std::abs(a.beta.value() - b.beta.value()) < 1e-12);
}

TEST_CASE("apply_gauge: spec examples") {
    for (const char* k : {"t0", "th0", "t1", "t2", "u1", "u2"}) Registry::instance().declare_constant(k);
    const AbstractCRStructure s = generic_structure();
    const AbstractCRStructure id = apply_gauge(s, {});
    CHECK(id.c == atoms::c());
    CHECK(id.alpha == atoms::alpha());
    CHECK(id.last_h.is_zero());
    const AbstractCRStructure t = apply_gauge(s, {fe("t0"), FieldExpr(0)});
    CHECK(t.last_h.is_zero());
    CHECK(t.c == nf("exp(-t0)*c"));
    CHECK(t.alpha == nf("exp(-2*t0)*alpha"));
    const AbstractCRStructure th = apply_gauge(s, {FieldExpr(0), fe("th0")});
    CHECK(th.c == nf("exp(-I*th0)*c"));
}

TEST_CASE("apply_gauge: composition and round trip of constant gauges") {
    const AbstractCRStructure s = generic_structure();
    const GaugeTransform g1{fe("t1"), fe("u1")}, g2{fe("t2"), fe("u2")};
    const AbstractCRStructure twice = apply_gauge(apply_gauge(s, g1), g2);
    const AbstractCRStructure once = apply_gauge(s, {fe("t1 + t2"), fe("u1 + u2")});
    CHECK(twice.c == once.c);
    CHECK(twice.alpha == once.alpha);
    CHECK(twice.beta == once.beta);
    const AbstractCRStructure back = apply_gauge(apply_gauge(s, g1), {fe("-t1"), fe("-u1")});
    CHECK(back.c == atoms::c());
    CHECK(back.alpha == atoms::alpha());
    CHECK(back.beta == atoms::beta());
}

TEST_CASE("apply_gauge agrees with the frame commutators") {
    const AbstractCRStructure s = generic_structure();
    for (const auto& g : {GaugeTransform{fe("tau"), fe("theta")}, GaugeTransform{fe("tau"), FieldExpr(0)},
                          GaugeTransform{FieldExpr(0), fe("theta")}}) {
        const AbstractCRStructure t = apply_gauge(s, g);
        const auto sf = structure_functions_from_frame(t);
        CHECK(equals(sf[0], t.c));
        CHECK(equals(sf[1], t.alpha));
        CHECK(equals(sf[2], t.beta));
    }
}

TEST_CASE("gauged Heisenberg: abstract formulas, jets and finite differences agree") {
    const FieldExpr tau = fe("x1*x2/3 + x3/4"), theta = fe("x1 - x2*x3/2");
    const auto g = std::make_shared<GaugedStructure>(heisenberg(), tau, theta);
    const AbstractCRStructure abs = apply_gauge(generic_structure(), {fe("tau"), fe("theta")});
    for (const auto& p : random_points(5, 5)) {
        JetContext base(heisenberg(), {p[0], p[1], p[2], 0.0}, 4);
        base.bind("tau", tau);
        base.bind("theta", theta);
        const FrameJets f = g->jets(p, 1);
        CHECK(std::abs(base.eval(abs.c).value() - f.c.value()) < 1e-12);
        CHECK(std::abs(base.eval(abs.alpha).value() - f.alpha.value()) < 1e-12);
        CHECK(std::abs(base.eval(abs.beta).value() - f.beta.value()) < 1e-12);

        // c' = dlambda'(D1', D0') with dlambda' from central differences of the coframe values.
        const double h = 1e-4;
        const Eigen::Matrix3cd m = coframe_values(g, p);
        const Eigen::Matrix3cd inv = m.inverse();
        std::array<Eigen::Vector3cd, 3> dl;
        for (int j = 0; j < 3; ++j) {
            Point3 a = p, b = p;
            a[j] += h;
            b[j] -= h;
            dl[j] = (coframe_values(g, a).row(2) - coframe_values(g, b).row(2)).transpose() / (2 * h);
        }
        const Eigen::Vector3cd d1 = inv.col(0), d0 = inv.col(2);
        cplx c_fd = 0;
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) c_fd += dl[j](k) * (d1(j) * d0(k) - d1(k) * d0(j));
        CHECK(std::abs(c_fd - f.c.value()) < 1e-6);
    }
}
