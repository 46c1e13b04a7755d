#include "qf/bundle_frame.hpp"

#include <cmath>

namespace qf {

using sym::FieldExpr;
using sym::Letter;
using sym::NormalForm;

namespace {

const NormalForm kI = NormalForm::imag_unit();

NormalForm q(std::int64_t n, std::int64_t d = 1) { return NormalForm(CRational(Rational(n, d))); }

NormalForm ratom(const char* name) { return NormalForm::atom(name); }

}  // namespace

FieldExpr QuasiFeffermanData::P_expr() const {
    if (a && s) {
        const FieldExpr half_angle = (FieldExpr::symbol("r") + FieldExpr::symbol("s")) / FieldExpr(2);
        return FieldExpr::symbol("a") / FieldExpr::call(sym::Func::Cos, half_angle);
    }
    return P;
}

const Eigen::Matrix4d& gram() {
    static const Eigen::Matrix4d g = [] {
        Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
        m(0, 1) = m(1, 0) = m(2, 3) = m(3, 2) = 1.0;
        return m;
    }();
    return g;
}

NormalForm AdaptedFrameBundle::e(int i, const NormalForm& f) const {
    NormalForm out;
    for (int l = 0; l < 4; ++l) {
        const NormalForm& a = frame[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
        if (!a.is_zero()) out += a * sym::derivative(f, sym::kLetters[static_cast<std::size_t>(l)]);
    }
    return sym::substitute(out, subs);
}

Form AdaptedFrameBundle::theta(int i) const { return Form::one_form(coframe[static_cast<std::size_t>(i)]); }

NormalForm w_of(const NormalForm& x) {
    return kI * x * sym::exp(-(kI * sym::atoms::r())) - q(1, 3) * kI * sym::atoms::c();
}

AdaptedFrameBundle build_quasi_fefferman(const NormalForm& P, const NormalForm& H, const NormalForm& x,
                                         const sym::Substitution& subs) {
    if (P.is_zero()) throw std::invalid_argument("P must not vanish");
    AdaptedFrameBundle b;
    b.subs = subs;
    auto sub = [&](const NormalForm& e) { return sym::substitute(e, subs); };
    b.P = sub(P);
    b.H = sub(H);
    b.x = sub(x);
    b.W = sub(w_of(b.x));
    const NormalForm Wb = sym::conjugate(b.W);
    const NormalForm Pi = sym::inverse(b.P);
    b.coframe = {{{b.P, 0, 0, 0}, {0, b.P, 0, 0}, {0, 0, b.P, 0}, {b.P * b.W, b.P * Wb, b.P * b.H, b.P}}};
    b.frame = {{{Pi, 0, 0, -(Pi * b.W)}, {0, Pi, 0, -(Pi * Wb)}, {0, 0, Pi, -(Pi * b.H)}, {0, 0, 0, Pi}}};
    return b;
}

AdaptedFrameBundle build_quasi_fefferman(bool mu_exact) {
    sym::Substitution subs;
    if (mu_exact) {
        subs[sym::Registry::instance().alpha] = NormalForm();
        subs[sym::Registry::instance().beta] = NormalForm();
    }
    return build_quasi_fefferman(ratom("P"), ratom("H"), ratom("x"), subs);
}

NormalForm fefferman_H() {
    using namespace sym::atoms;
    return -(q(1, 12) * (sym::derivative(c_bar(), Letter::D1) + sym::derivative(c(), Letter::D2))) +
           q(1, 4) * kI * (alpha() - alpha_bar());
}

AdaptedFrameBundle build_fefferman(const sym::Substitution& subs) {
    return build_quasi_fefferman(sym::pow(NormalForm(2), Rational(-1, 2)), fefferman_H(), NormalForm(), subs);
}

NFMatrix4 fefferman_metric_direct() {
    using namespace sym::atoms;
    NFMatrix4 g{};
    g[0][1] = g[1][0] = q(1, 2);
    g[2][3] = g[3][2] = q(1, 2);  // lambda (2/3) d rho = lambda dr
    g[2][0] = g[0][2] = -(q(1, 6) * kI * c());
    g[2][1] = g[1][2] = q(1, 6) * kI * c_bar();
    g[2][2] = fefferman_H();
    return g;
}

NFMatrix4 metric_components(const AdaptedFrameBundle& b) {
    NFMatrix4 g{};
    const Eigen::Matrix4d& G = gram();
    for (int l = 0; l < 4; ++l)
        for (int m = 0; m < 4; ++m) {
            NormalForm s;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    if (G(i, j) != 0.0) s += b.coframe[i][l] * b.coframe[j][m];
            g[l][m] = sym::substitute(s, b.subs);
        }
    return g;
}

NFMatrix4 duality(const AdaptedFrameBundle& b) {
    NFMatrix4 out{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            NormalForm s;
            for (int l = 0; l < 4; ++l) s += b.coframe[i][l] * b.frame[j][l];
            out[i][j] = sym::substitute(s, b.subs);
        }
    return out;
}

const StructureConstants& commutator_table() {
    static const StructureConstants t = [] {
        using namespace sym::atoms;
        StructureConstants m{};
        m[0][1] = {0, 0, -kI, 0};
        m[0][2] = {-alpha(), -beta_bar(), -c(), 0};
        m[1][2] = {-beta(), -alpha_bar(), -c_bar(), 0};
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < a; ++b)
                for (int k = 0; k < 4; ++k) m[a][b][k] = -m[b][a][k];
        return m;
    }();
    return t;
}

StructureConstants structure_constants(const AdaptedFrameBundle& b) {
    const StructureConstants& table = commutator_table();
    StructureConstants out{};
    for (int m = 0; m < 4; ++m)
        for (int n = m + 1; n < 4; ++n) {
            std::array<NormalForm, 4> br{};
            for (int k = 0; k < 4; ++k) {
                br[k] = b.e(m, b.frame[n][k]) - b.e(n, b.frame[m][k]);
                for (int M = 0; M < 4; ++M) {
                    if (b.frame[m][M].is_zero()) continue;
                    for (int N = 0; N < 4; ++N)
                        if (!b.frame[n][N].is_zero() && !table[M][N][k].is_zero())
                            br[k] += b.frame[m][M] * b.frame[n][N] * table[M][N][k];
                }
            }
            for (int k = 0; k < 4; ++k) {
                NormalForm s;
                for (int l = 0; l < 4; ++l)
                    if (!b.coframe[k][l].is_zero()) s += b.coframe[k][l] * br[l];
                out[k][m][n] = sym::substitute(s, b.subs);
                out[k][n][m] = -out[k][m][n];
            }
        }
    return out;
}

std::array<NormalForm, 2> shear_free_residual(const NFMatrix4& coframe, const sym::Substitution& subs) {
    const Form t1 = Form::one_form(coframe[0]);
    const Form t3 = Form::one_form(coframe[2]);
    const Form t13 = wedge(t1, t3);
    const NormalForm vol = sym::inverse(sym::substitute(det4(coframe), subs));
    const NormalForm r1 = wedge(d(t3, subs), t13).coef(15);
    const NormalForm r2 = wedge(d(t1, subs), t13).coef(15);
    return {sym::substitute(r1 * vol, subs), sym::substitute(r2 * vol, subs)};
}

std::array<NormalForm, 2> shear_free_residual(const AdaptedFrameBundle& b) {
    return shear_free_residual(b.coframe, b.subs);
}

// ---------------------------------------------------------------------------

FieldExpr replace_symbol(const FieldExpr& e, const std::string& name, const FieldExpr& value) {
    using K = FieldExpr::Kind;
    switch (e.kind()) {
        case K::Number: return e;
        case K::Symbol: return e.name() == name ? value : e;
        case K::Add:
        case K::Mul:
        case K::Div:
            return FieldExpr::binary(e.kind(), replace_symbol(e.args()[0], name, value),
                                     replace_symbol(e.args()[1], name, value));
        case K::Neg: return -replace_symbol(e.args()[0], name, value);
        case K::Pow: return FieldExpr::power(replace_symbol(e.args()[0], name, value), e.exponent());
        case K::Call: return FieldExpr::call(e.func(), replace_symbol(e.args()[0], name, value));
        case K::Deriv: return FieldExpr::deriv(e.letter(), replace_symbol(e.args()[0], name, value));
        case K::Conj: return FieldExpr::conj(replace_symbol(e.args()[0], name, value));
        case K::Normal: {
            const auto id = sym::Registry::instance().find(name);
            if (!id) return e;
            sym::Substitution s;
            s[*id] = sym::normalize(value);
            return FieldExpr::wrap(sym::substitute(e.normal(), s));
        }
    }
    return e;
}

namespace {

bool has_derivative(const FieldExpr& e) {
    if (e.kind() == FieldExpr::Kind::Deriv) return true;
    if (e.kind() == FieldExpr::Kind::Normal) {
        for (const auto& [a, w] : sym::required_words(e.normal()))
            if (!w.empty() && !sym::Registry::instance().atom(a).fiber_coordinate) return true;
        return false;
    }
    for (const auto& a : e.args())
        if (has_derivative(a)) return true;
    return false;
}

}  // namespace

QuasiFeffermanData transform_parameters(const GaugeTransform& g, const QuasiFeffermanData& primed) {
    for (const FieldExpr* e : {&primed.P, &primed.H, &primed.x})
        if (has_derivative(*e)) throw sym::ConfigError("primed parameters may not contain frame derivatives");
    const FieldExpr I = FieldExpr::imag_unit();
    const FieldExpr& tau = g.tau;
    const FieldExpr& theta = g.theta;
    const FieldExpr L = tau + I * theta;
    const FieldExpr h = -(I * FieldExpr::deriv(Letter::D2, L));
    const FieldExpr hb = FieldExpr::conj(h);
    const FieldExpr two_thirds(CRational(Rational(2, 3)));
    const FieldExpr rp = FieldExpr::symbol("r") - two_thirds * theta;
    auto exp = [](const FieldExpr& a) { return FieldExpr::call(sym::Func::Exp, a); };

    QuasiFeffermanData out;
    if (primed.a && primed.s) {
        out.a = exp(tau) * *primed.a;
        out.s = *primed.s - two_thirds * theta;
    }
    out.P = exp(tau) * replace_symbol(primed.P_expr(), "r", rp);
    out.x = exp(tau + FieldExpr(CRational(Rational(5, 3))) * I * theta) * primed.x;
    const FieldExpr cprime =
        exp(-L) * (FieldExpr::symbol("c") - FieldExpr(2) * I * hb + FieldExpr::deriv(Letter::D1, L));
    const FieldExpr wprime =
        I * primed.x * exp(-(I * rp)) - FieldExpr(CRational(Rational(1, 3))) * I * cprime;
    const FieldExpr cross = exp(L) * h * wprime;
    out.H = exp(FieldExpr(2) * tau) * replace_symbol(primed.H, "r", rp) + h * hb + cross + FieldExpr::conj(cross) -
            two_thirds * FieldExpr::deriv(Letter::D0, theta);
    return out;
}

// ---------------------------------------------------------------------------

void bind_data(JetContext& ctx, const QuasiFeffermanData& d) {
    if (d.a) ctx.bind("a", *d.a);
    if (d.s) ctx.bind("s", *d.s);
    ctx.bind("P", d.P_expr());
    ctx.bind("H", d.H);
    ctx.bind("x", d.x);
}

namespace {

// Coordinate components of D_L (rows) and omega^L (rows) at the context's point.
void coordinate_bases(JetContext& ctx, Eigen::Matrix4cd& D, Eigen::Matrix4cd& omega) {
    D.setZero();
    omega.setZero();
    const FrameJets& f = ctx.frame();
    for (int l = 0; l < 3; ++l)
        for (int j = 0; j < 3; ++j) {
            D(l, j) = f.frame[l][j].value();
            omega(l, j) = f.coframe[l][j].value();
        }
    D(3, 3) = 1.0;
    omega(3, 3) = 1.0;
}

}  // namespace

PointFrame evaluate_frame(const AdaptedFrameBundle& b, JetContext& ctx) {
    Eigen::Matrix4cd D, omega, A, C;
    coordinate_bases(ctx, D, omega);
    for (int i = 0; i < 4; ++i)
        for (int l = 0; l < 4; ++l) {
            A(i, l) = b.frame[i][l].is_zero() ? cplx(0) : ctx.eval(b.frame[i][l]).value();
            C(i, l) = b.coframe[i][l].is_zero() ? cplx(0) : ctx.eval(b.coframe[i][l]).value();
        }
    PointFrame out;
    out.e = A * D;
    out.theta = C * omega;
    const Eigen::Matrix4cd g = out.theta.transpose() * gram().cast<cplx>() * out.theta;
    out.g = g.real();
    return out;
}

PointFrame quasi_fefferman_point(const StructurePtr& s, const QuasiFeffermanData& d, const Point4& p) {
    static const AdaptedFrameBundle generic = build_quasi_fefferman(false);
    JetContext ctx(s, p, 3);
    bind_data(ctx, d);
    return evaluate_frame(generic, ctx);
}

Eigen::Matrix4d fefferman_point(const StructurePtr& s, const Point4& p) {
    static const NFMatrix4 direct = fefferman_metric_direct();
    JetContext ctx(s, p, 2);
    Eigen::Matrix4cd D, omega, G;
    coordinate_bases(ctx, D, omega);
    for (int l = 0; l < 4; ++l)
        for (int m = 0; m < 4; ++m) G(l, m) = direct[l][m].is_zero() ? cplx(0) : ctx.eval(direct[l][m]).value();
    return (omega.transpose() * G * omega).real();
}

// ---------------------------------------------------------------------------

Eigen::Matrix4cd AdaptedFrame::gram(const Eigen::Matrix4d& g) const {
    Eigen::Matrix4cd out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) out(i, j) = e[i].transpose() * g.cast<cplx>() * e[j];
    return out;
}

AdaptedFrame adapt_frame(const Eigen::Matrix4d& g, const Eigen::Vector4d& k, double tol) {
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff()) * std::max(1.0, k.squaredNorm());
    if (std::abs(k.dot(g * k)) > tol * scale) throw std::domain_error("k is not null");
    if (k.norm() == 0.0) throw std::domain_error("k vanishes");
    if (std::abs(g.determinant()) <= tol * std::pow(g.cwiseAbs().maxCoeff(), 4))
        throw std::domain_error("metric is degenerate");
    auto ip = [&](const Eigen::Vector4d& a, const Eigen::Vector4d& b) { return a.dot(g * b); };

    int best = 0;
    for (int a = 1; a < 4; ++a)
        if (std::abs((g * k)(a)) > std::abs((g * k)(best))) best = a;
    Eigen::Vector4d v = Eigen::Vector4d::Unit(best);
    v /= ip(v, k);
    const Eigen::Vector4d l = v - 0.5 * ip(v, v) * k;

    auto project = [&](const Eigen::Vector4d& u) { return Eigen::Vector4d(u - ip(u, l) * k - ip(u, k) * l); };
    Eigen::Vector4d eps1 = Eigen::Vector4d::Zero(), eps2 = Eigen::Vector4d::Zero();
    int first = -1;
    for (int a = 0; a < 4 && first < 0; ++a) {
        const Eigen::Vector4d u = project(Eigen::Vector4d::Unit(a));
        const double n2 = ip(u, u);
        if (n2 > tol) {
            eps1 = u / std::sqrt(n2);
            first = a;
        }
    }
    if (first < 0) throw std::domain_error("metric is not Lorentzian (no spacelike screen direction)");
    bool found = false;
    for (int a = 0; a < 4 && !found; ++a) {
        if (a == first) continue;
        Eigen::Vector4d u = project(Eigen::Vector4d::Unit(a));
        u -= ip(u, eps1) * eps1;
        const double n2 = ip(u, u);
        if (n2 > tol) {
            eps2 = u / std::sqrt(n2);
            found = true;
        }
    }
    if (!found) throw std::domain_error("metric is not Lorentzian (degenerate screen space)");
    Eigen::Matrix4d basis;
    basis << eps1, eps2, l, k;
    if (basis.determinant() < 0) eps2 = -eps2;

    AdaptedFrame out;
    const cplx I(0, 1);
    out.e[0] = (eps1.cast<cplx>() - I * eps2.cast<cplx>()) / std::sqrt(2.0);
    out.e[1] = (eps1.cast<cplx>() + I * eps2.cast<cplx>()) / std::sqrt(2.0);
    out.e[2] = l.cast<cplx>();
    out.e[3] = k.cast<cplx>();
    return out;
}

}  // namespace qf
