#include "qf/embeddability.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qf {

using sym::FieldExpr;
using sym::Letter;
using sym::NormalForm;

namespace {

NormalForm nf(const std::string& s) { return sym::normalize(FieldExpr::parse(s)); }

const NormalForm kI = NormalForm::imag_unit();

}  // namespace

// ---------------------------------------------------------------------------

PProfileValue p_profile(double a, double s, double r) {
    const double off = std::remainder(r + s - std::numbers::pi, 2 * std::numbers::pi);
    if (std::abs(off) < 1e-6) throw std::domain_error("P has a pole: r + s is an odd multiple of pi");
    const Jet rj = Jet::variable(3, r, 2);
    const Jet P = Jet(a, 2) / cos((rj + s) * 0.5);
    const Jet Pr = P.d(3);
    const Jet Prr = Pr.d(3);
    PProfileValue out;
    out.P = P.value().real();
    out.residual = (-4.0 * P.value() * Prr.value() + 8.0 * Pr.value() * Pr.value() + P.value() * P.value()).real();
    return out;
}

double profile_residual(const FieldExpr& P, double r) {
    const Jet j = eval_jet(P, heisenberg(), {0.0, 0.0, 0.0, r}, 2);
    const cplx p = j.value(), pr = j.d(3).value(), prr = j.d(3).d(3).value();
    return (-4.0 * p * prr + 8.0 * pr * pr + p * p).real();
}

NormalForm profile_expression(const NormalForm& P) {
    const NormalForm Pr = sym::derivative(P, Letter::Dr);
    const NormalForm Prr = sym::derivative(Pr, Letter::Dr);
    return NormalForm(-4) * P * Prr + NormalForm(8) * Pr * Pr + P * P;
}

NormalForm profile_P() { return nf("a/cos((r + s)/2)"); }

NormalForm sec_expression() { return nf("D1(log(a^2)) + I*D1(s) - 2*x*exp(I*s) + 2*c/3"); }

NormalForm t_expression() { return nf("c + D1(log(a^2)) - x*exp(I*s)"); }

NormalForm equ_expression(const NormalForm& t) {
    return sym::derivative(t, Letter::D1) + t * (sym::atoms::c() - t);
}

// ---------------------------------------------------------------------------

Gamma24 gamma24_coefficients(const AdaptedFrameBundle& b, const Tensor3<NormalForm>& gamma) {
    const NormalForm& P = b.P;
    const NormalForm Pi = sym::inverse(P);
    const NormalForm Pr = sym::derivative(P, Letter::Dr);
    const NormalForm Wb = sym::conjugate(b.W);
    Gamma24 g;
    g.sigma = sym::substitute(NormalForm(CRational(Rational(1, 2))) * kI * Pi + Pr * Pi * Pi, b.subs);
    g.rho_coef = gamma[0][3][2];
    g.rho_coef_displayed = sym::substitute(-(sym::derivative(P, Letter::D2) * Pi * Pi) + Wb * Pr * Pi * Pi -
                                               NormalForm(CRational(Rational(1, 2))) * sym::atoms::c_bar() * Pi +
                                               sym::derivative(Wb, Letter::Dr) * Pi,
                                           b.subs);
    return g;
}

Form phi_form(const NormalForm& t) { return Form::one_form({NormalForm(1), NormalForm(), kI * sym::conjugate(t), NormalForm()}); }

PhiIntegrability phi_integrability(const NormalForm& t) {
    sym::Substitution exact;
    exact[sym::Registry::instance().alpha] = NormalForm();
    exact[sym::Registry::instance().beta] = NormalForm();
    PhiIntegrability out;
    out.phi = phi_form(t);
    const Form phibar = Form::one_form({NormalForm(), NormalForm(1), -(kI * t), NormalForm()});
    out.residual = sym::substitute(wedge(d(out.phi, exact), out.phi).coef(7), exact);
    out.witness = wedge(out.phi, phibar).coef(3);
    return out;
}

// ---------------------------------------------------------------------------

EmbeddableMetric build_embeddable_metric(const FieldExpr& psi, const StructurePtr& s, const FieldExpr& H,
                                         const std::vector<Point4>& samples, double tol) {
    const FieldExpr log_psibar = FieldExpr::call(sym::Func::Log, FieldExpr::conj(psi));
    EmbeddableMetric out;
    out.data.a = FieldExpr::call(sym::Func::Exp, FieldExpr(CRational(Rational(2, 3))) *
                                                     FieldExpr::call(sym::Func::Re, log_psibar));
    out.data.s = -(FieldExpr(CRational(Rational(4, 3))) * FieldExpr::call(sym::Func::Im, log_psibar));
    out.data.x = FieldExpr::parse("exp(-I*s)*(c + D1(log(a^2)))");
    out.data.H = H;
    for (const Point4& p : samples) {
        const Point3 q{p[0], p[1], p[2]};
        const cplx v = eval_jet(psi, s, p, 0).value();
        if (std::abs(v) < 1e-12) throw std::domain_error(fmt::format("psi vanishes at ({}, {}, {})", p[0], p[1], p[2]));
        if (v.real() < 0 && std::abs(v.imag()) < 1e-6 * std::abs(v))
            out.warnings.push_back(fmt::format("psi is near the branch cut of log at ({:.6g}, {:.6g}, {:.6g})", p[0], p[1], p[2]));
        const double res = std::abs(canonical_section_residual(psi, s, q));
        if (res > tol)
            out.warnings.push_back(fmt::format("closed-section residual {:.3e} at ({:.6g}, {:.6g}, {:.6g})", res, p[0], p[1], p[2]));
    }
    return out;
}

bool mu_exact_at(const StructurePtr& s, const std::vector<Point4>& samples, double tol) {
    for (const Point4& p : samples) {
        JetContext ctx(s, p, 1);
        if (std::abs(ctx.symbol("alpha").value()) > tol || std::abs(ctx.symbol("beta").value()) > tol) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

namespace {

struct SampleData {
    CurvatureValues curv;
    cplx sigma, profile;
    bool has_t = false;
    cplx sec, t, equ, phi, witness, clsec;
};

struct Expressions {
    NormalForm sigma, profile, sec, t, equ, phi, witness, clsec;
};

const Expressions& expressions() {
    static const Expressions e = [] {
        Expressions x;
        const NormalForm P = NormalForm::atom("P");
        x.sigma = NormalForm(CRational(Rational(1, 2))) * kI * sym::inverse(P) +
                  sym::derivative(P, Letter::Dr) * sym::inverse(P * P);
        x.profile = profile_expression(P);
        x.sec = sec_expression();
        x.t = t_expression();
        x.equ = equ_expression(x.t);
        const PhiIntegrability phi = phi_integrability(x.t);
        x.phi = phi.residual;
        x.witness = phi.witness;
        // conj of D2 log psi + conj(c) for psi = a^{3/2} e^{3is/4}
        x.clsec = nf("3*D1(log(a^2))/4 - 3*I*D1(s)/4 + c");
        return x;
    }();
    return e;
}

std::string pass_fail(bool ok) { return ok ? "pass" : "fail"; }

}  // namespace

EmbeddabilityReport check_embeddability(const StructurePtr& s, const QuasiFeffermanData& d,
                                        const std::vector<Point4>& samples, double tol, Execution exec) {
    warm_up();
    const Expressions& ex = expressions();
    const bool with_t = d.a && d.s && mu_exact_at(s, samples);

    const std::vector<SampleData> data = map_indices<SampleData>(
        samples.size(),
        [&](std::size_t i) {
            JetContext ctx(s, samples[i], 4);
            bind_data(ctx, d);
            SampleData sd;
            sd.curv = curvature_values(generic_bundle(), generic_structure_constants(), ctx);
            sd.sigma = ctx.eval(ex.sigma).value();
            sd.profile = ctx.eval(ex.profile).value();
            if (with_t) {
                sd.has_t = true;
                sd.sec = ctx.eval(ex.sec).value();
                sd.t = ctx.eval(ex.t).value();
                sd.equ = ctx.eval(ex.equ).value();
                sd.phi = ctx.eval(ex.phi).value();
                sd.witness = ctx.eval(ex.witness).value();
                sd.clsec = std::conj(ctx.eval(ex.clsec).value());
            }
            return sd;
        },
        exec);

    EmbeddabilityReport rep;
    rep.tolerance = tol;
    rep.structure = s->name();
    rep.parameters = {{"P", d.P_expr().str()}, {"H", d.H.str()}, {"x", d.x.str()}};
    if (d.a) rep.parameters.emplace_back("a", d.a->str());
    if (d.s) rep.parameters.emplace_back("s", d.s->str());

    auto small = [&](cplx v) { return std::abs(v) <= tol; };
    using Residuals = std::vector<std::pair<std::string, cplx>>;
    auto add_check = [&](const std::string& name, auto residuals, auto pass) {
        CheckResult c;
        c.name = name;
        bool all = true;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            SampleResult sr;
            sr.point = samples[i];
            sr.residuals = residuals(data[i]);
            sr.pass = pass(data[i], sr.residuals);
            all = all && sr.pass;
            c.samples.push_back(std::move(sr));
        }
        c.verdict = pass_fail(all);
        rep.checks.push_back(std::move(c));
        return &rep.checks.back();
    };
    auto all_small = [&](const SampleData&, const Residuals& r) {
        for (const auto& [n, v] : r)
            if (!small(v)) return false;
        return true;
    };

    add_check("shear_free", [](const SampleData& x) { return Residuals{{"shear_1", x.curv.shear[0]}, {"shear_2", x.curv.shear[1]}}; },
              all_small);
    add_check("alpha_plane_ricci",
              [](const SampleData& x) {
                  return Residuals{{"R22", x.curv.alpha_plane[0]}, {"R24", x.curv.alpha_plane[1]}, {"R44", x.curv.alpha_plane[2]}};
              },
              all_small);
    add_check("profile", [](const SampleData& x) { return Residuals{{"equp", x.profile}}; }, all_small);
    add_check("sigma", [](const SampleData& x) { return Residuals{{"sigma", x.sigma}}; },
              [&](const SampleData& x, const Residuals&) { return !small(x.sigma); });

    bool hyp = rep.find("shear_free")->verdict == "pass" && rep.find("alpha_plane_ricci")->verdict == "pass";
    CheckResult* gs = add_check("goldberg_sachs",
                                [](const SampleData& x) {
                                    return Residuals{{"psi0", x.curv.psi0},    {"psi1", x.curv.psi1},
                                                     {"R2412", x.curv.riecu[0]}, {"R2424", x.curv.riecu[1]},
                                                     {"R2414", x.curv.riecu[2]}, {"R2423", x.curv.riecu[3]},
                                                     {"R2434", x.curv.riecu[4]}};
                                },
                                all_small);
    if (!hyp) gs->verdict = "hypotheses not met";

    auto not_applicable = [&](const std::string& name) {
        CheckResult c;
        c.name = name;
        c.verdict = "not applicable";
        rep.checks.push_back(std::move(c));
    };
    if (with_t) {
        add_check("sec", [](const SampleData& x) { return Residuals{{"sec", x.sec}}; }, all_small);
        add_check("t_equation", [](const SampleData& x) { return Residuals{{"t", x.t}, {"equ", x.equ}}; },
                  [&](const SampleData& x, const Residuals&) { return small(x.equ); });
        bool t_zero = true;
        for (const auto& x : data) t_zero = t_zero && small(x.t);
        rep.branch = t_zero ? "t_zero" : "t_nonzero";
        add_check("phi_integrability",
                  [](const SampleData& x) { return Residuals{{"dphi_phi", x.phi}, {"phi_phibar", x.witness}}; },
                  [&](const SampleData& x, const Residuals&) { return small(x.phi) && !small(x.witness); });
        if (t_zero)
            add_check("canonical_section", [](const SampleData& x) { return Residuals{{"clsec", x.clsec}}; }, all_small);
        else
            not_applicable("canonical_section");
    } else {
        rep.branch = "not applicable";
        for (const char* n : {"sec", "t_equation", "phi_integrability", "canonical_section"}) not_applicable(n);
        if (!(d.a && d.s))
            rep.warnings.emplace_back("conditions on t need the profile parameters a, s");
        else
            rep.warnings.emplace_back("conditions on t need an exact mu (alpha = beta = 0)");
    }
    return rep;
}

const CheckResult* EmbeddabilityReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

bool EmbeddabilityReport::satisfied() const {
    for (const auto& c : checks)
        if (c.verdict == "fail") return false;
    const CheckResult* ap = find("alpha_plane_ricci");
    return ap && ap->verdict == "pass";
}

std::string EmbeddabilityReport::verdict() const {
    return satisfied() ? "criterion satisfied" : "criterion not satisfied";
}

nlohmann::json to_json(const EmbeddabilityReport& r) {
    using nlohmann::json;
    json checks = json::array();
    for (const auto& c : r.checks) {
        json samples = json::array();
        for (const auto& s : c.samples) {
            json res = json::object();
            for (const auto& [n, v] : s.residuals) res[n] = {v.real(), v.imag()};
            samples.push_back({{"point", s.point}, {"residuals", res}, {"pass", s.pass}});
        }
        checks.push_back({{"name", c.name}, {"samples", samples}, {"verdict", c.verdict}});
    }
    json params = json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    return {{"checks", checks},         {"branch", r.branch},    {"parameters", params},
            {"structure", r.structure}, {"tolerance", r.tolerance}, {"verdict", r.verdict()},
            {"warnings", r.warnings}};
}

std::string to_text(const EmbeddabilityReport& r) {
    std::ostringstream os;
    os << "structure: " << r.structure << "\n";
    for (const auto& [k, v] : r.parameters) os << "  " << k << " = " << v << "\n";
    os << fmt::format("tolerance: {:g}\n", r.tolerance);
    for (const auto& c : r.checks) {
        double worst = 0;
        for (const auto& s : c.samples)
            for (const auto& [n, v] : s.residuals) worst = std::max(worst, std::abs(v));
        if (c.samples.empty())
            os << fmt::format("{:<20} {}\n", c.name, c.verdict);
        else
            os << fmt::format("{:<20} {:<20} max |value| = {:.3e}\n", c.name, c.verdict, worst);
    }
    os << "branch: " << r.branch << "\n";
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    os << "verdict: " << r.verdict() << "\n";
    return os.str();
}

}  // namespace qf
