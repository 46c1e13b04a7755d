#include "qf/connection_curvature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qf {

using sym::NormalForm;

namespace {

int pair_index(int a, int b) {
    static const int idx[4][4] = {{-1, 0, 1, 2}, {-1, -1, 3, 4}, {-1, -1, -1, 5}, {-1, -1, -1, -1}};
    return idx[a][b];
}

// Gauss-Jordan inverse over the rationals.
std::array<std::array<Rational, 24>, 24> invert(std::array<std::array<Rational, 24>, 24> a) {
    std::array<std::array<Rational, 24>, 24> inv{};
    for (int i = 0; i < 24; ++i) inv[i][i] = Rational(1);
    for (int col = 0; col < 24; ++col) {
        int piv = col;
        while (piv < 24 && a[piv][col].is_zero()) ++piv;
        if (piv == 24) throw std::logic_error("connection system is singular");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const Rational p = a[col][col];
        for (int j = 0; j < 24; ++j) {
            a[col][j] = a[col][j] / p;
            inv[col][j] = inv[col][j] / p;
        }
        for (int r = 0; r < 24; ++r) {
            if (r == col || a[r][col].is_zero()) continue;
            const Rational f = a[r][col];
            for (int j = 0; j < 24; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

}  // namespace

int LeviCivitaSystem::unknown(int i, int j, int k) { return pair_index(i, j) * 4 + k; }
int LeviCivitaSystem::equation(int l, int m, int n) { return l * 6 + pair_index(m, n); }

const LeviCivitaSystem& levi_civita_system() {
    static const LeviCivitaSystem sys = [] {
        LeviCivitaSystem s{};
        // Gamma_{lnm} - Gamma_{lmn} = c_{lmn}, with Gamma_{ijk} = -Gamma_{jik}
        auto add = [&](int eq, int i, int j, int k, int sign) {
            if (i == j) return;
            if (i < j)
                s.matrix[eq][LeviCivitaSystem::unknown(i, j, k)] += Rational(sign);
            else
                s.matrix[eq][LeviCivitaSystem::unknown(j, i, k)] -= Rational(sign);
        };
        for (int l = 0; l < 4; ++l)
            for (int m = 0; m < 4; ++m)
                for (int n = m + 1; n < 4; ++n) {
                    const int eq = LeviCivitaSystem::equation(l, m, n);
                    add(eq, l, n, m, 1);
                    add(eq, l, m, n, -1);
                }
        s.inverse = invert(s.matrix);
        return s;
    }();
    return sys;
}

// ---------------------------------------------------------------------------

Tensor3<NormalForm> symbolic_connection(const StructureConstants& c) { return levi_civita<NormalForm>(c); }

SymbolicCurvature symbolic_curvature(const AdaptedFrameBundle& b, const StructureConstants& c) {
    const sym::Substitution subs = b.subs;
    return SymbolicCurvature(
        symbolic_connection(c), c, [&b](int k, const NormalForm& f) { return b.e(k, f); },
        [subs](const NormalForm& f) { return subs.empty() ? f : sym::substitute(f, subs); });
}

std::array<std::array<NormalForm, 6>, 4> torsion_residual(const Tensor3<NormalForm>& gamma,
                                                          const StructureConstants& c) {
    std::array<std::array<NormalForm, 6>, 4> out{};
    for (int i = 0; i < 4; ++i)
        for (int m = 0; m < 4; ++m)
            for (int n = m + 1; n < 4; ++n)
                out[i][pair_index(m, n)] = -c[i][m][n] + gamma[i][n][m] - gamma[i][m][n];
    return out;
}

std::array<NormalForm, 4> connection_form(const Tensor3<NormalForm>& gamma, int i, int j) { return gamma[i][j]; }

// ---------------------------------------------------------------------------

NumericCurvature numeric_curvature(const AdaptedFrameBundle& b, const StructureConstants& c, JetContext& ctx) {
    const int k = ctx.frame().frame[0][0].storage_order();
    auto ev = [&](const NormalForm& e) { return e.is_zero() ? Jet(0.0, k) : ctx.eval(e); };
    Tensor3<Jet> cj;
    for (int a = 0; a < 4; ++a)
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) cj[a][m][n] = n > m ? ev(c[a][m][n]) : Jet(0.0, k);
    for (int a = 0; a < 4; ++a)
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < m; ++n) cj[a][m][n] = -cj[a][n][m];
    // e_i = A_i^L D_L with jets of the components
    std::array<std::array<std::optional<Jet>, 4>, 4> A;
    for (int i = 0; i < 4; ++i)
        for (int l = 0; l < 4; ++l)
            if (!b.frame[i][l].is_zero()) A[i][l] = ctx.eval(b.frame[i][l]);
    const JetContext* cp = &ctx;
    auto derive = [A, cp, k](int i, const Jet& f) {
        Jet out(0.0, k);
        bool any = false;
        for (int l = 0; l < 4; ++l) {
            if (!A[i][l]) continue;
            const Jet t = *A[i][l] * cp->apply(sym::kLetters[static_cast<std::size_t>(l)], f);
            out = any ? out + t : t;
            any = true;
        }
        return out;
    };
    return NumericCurvature(levi_civita<Jet>(cj), cj, derive);
}

CurvatureValues curvature_values(const AdaptedFrameBundle& b, const StructureConstants& c, JetContext& ctx,
                                 bool with_identities) {
    const NumericCurvature cs = numeric_curvature(b, c, ctx);
    CurvatureValues v;
    const auto ap = cs.alpha_plane_ricci();
    for (int i = 0; i < 3; ++i) v.alpha_plane[i] = ap[i].value();
    v.psi0 = cs.psi0().value();
    v.psi1 = cs.psi1().value();
    v.riecu = {cs.riemann(1, 3, 0, 1).value(), cs.riemann(1, 3, 1, 3).value(), cs.riemann(1, 3, 0, 3).value(),
               cs.riemann(1, 3, 1, 2).value(), cs.riemann(1, 3, 2, 3).value()};
    static const std::array<NormalForm, 2> shear = shear_free_residual(generic_bundle());
    for (int i = 0; i < 2; ++i) v.shear[i] = shear[i].is_zero() ? cplx(0) : ctx.eval(shear[i]).value();
    if (with_identities) {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                v.ricci_asym = std::max(v.ricci_asym, std::abs((cs.ricci(i, j) - cs.ricci(j, i)).value()));
                for (int kk = 0; kk < 4; ++kk)
                    for (int l = 0; l < 4; ++l) {
                        const cplx bi = cs.riemann_up(i, j, kk, l).value() + cs.riemann_up(i, kk, l, j).value() +
                                        cs.riemann_up(i, l, j, kk).value();
                        v.bianchi = std::max(v.bianchi, std::abs(bi));
                    }
                for (int l = 0; l < 4; ++l) {
                    cplx tr = 0;
                    for (int a = 0; a < 4; ++a) tr += cs.weyl(a, i, partner(a), l).value();
                    v.weyl_trace = std::max(v.weyl_trace, std::abs(tr));
                }
            }
    }
    return v;
}

std::string GoldbergSachsReport::verdict() const {
    if (!hypotheses_met) return "hypotheses not met";
    return conclusion_holds ? "conclusion holds" : "conclusion violated";
}

GoldbergSachsReport goldberg_sachs_check(const StructurePtr& s, const QuasiFeffermanData& d,
                                         const std::vector<Point4>& pts, double tol) {
    GoldbergSachsReport rep;
    rep.hypotheses_met = true;
    rep.conclusion_holds = true;
    static const char* names[5] = {"R2412", "R2424", "R2414", "R2423", "R2434"};
    for (const Point4& p : pts) {
        JetContext ctx(s, p, 4);
        bind_data(ctx, d);
        const CurvatureValues v = curvature_values(generic_bundle(), generic_structure_constants(), ctx);
        GoldbergSachsSample smp;
        smp.point = p;
        double h = 0;
        for (const cplx& x : v.alpha_plane) h = std::max(h, std::abs(x));
        for (const cplx& x : v.shear) h = std::max(h, std::abs(x));
        smp.hypothesis_residual = h;
        smp.hypotheses_met = h <= tol;
        smp.residuals["psi0"] = std::abs(v.psi0);
        smp.residuals["psi1"] = std::abs(v.psi1);
        for (int i = 0; i < 5; ++i) smp.residuals[names[i]] = std::abs(v.riecu[i]);
        rep.hypotheses_met = rep.hypotheses_met && smp.hypotheses_met;
        if (smp.hypotheses_met)
            for (const auto& [n, r] : smp.residuals) rep.conclusion_holds = rep.conclusion_holds && r <= tol;
        rep.samples.push_back(std::move(smp));
    }
    if (!rep.hypotheses_met) rep.conclusion_holds = false;
    return rep;
}

const AdaptedFrameBundle& generic_bundle() {
    static const AdaptedFrameBundle b = build_quasi_fefferman(false);
    return b;
}

const StructureConstants& generic_structure_constants() {
    static const StructureConstants c = structure_constants(generic_bundle());
    return c;
}

}  // namespace qf
