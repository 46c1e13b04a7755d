#pragma once

// Levi-Civita connection and curvature of g = 2 theta^1 theta^2 + 2 theta^3 theta^4
// in the adapted frame. Indices run 0..3 for 1..4. Conventions:
//   Gamma^i_j = Gamma^i_{jk} theta^k,  d theta^i + Gamma^i_k ^ theta^k = 0,
//   d Gamma^i_j + Gamma^i_m ^ Gamma^m_j = R^i_{jkl} theta^k ^ theta^l  (k < l),
//   R_{ijkl} = g_{im} R^m_{jkl},  R_{jl} = R^k_{jkl}.
// Everything is templated on the scalar: NormalForm for symbolic work and Jet
// for numeric evaluation at a point.

#include "qf/bundle_frame.hpp"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qf {

template <class T>
using Tensor3 = std::array<std::array<std::array<T, 4>, 4>, 4>;

/// Index paired with i by the Gram matrix: g_{i, partner(i)} = 1.
constexpr int partner(int i) { return i ^ 1; }
constexpr int gram_entry(int i, int j) { return j == partner(i) ? 1 : 0; }

inline sym::NormalForm scale(const sym::NormalForm& a, const CRational& k) { return sym::NormalForm(k) * a; }
inline Jet scale(const Jet& a, const CRational& k) { return a * k.to_complex(); }

/// Rational coefficients expressing the 24 independent Gamma_{ijk} (i < j) in
/// terms of the lowered structure constants c_{lmn} (m < n):
/// Gamma_{ijk} = sum over (l, m<n) of solve[u][eq] c_{lmn}.
struct LeviCivitaSystem {
    std::array<std::array<Rational, 24>, 24> matrix;   // equations x unknowns
    std::array<std::array<Rational, 24>, 24> inverse;  // unknowns x equations
    static int unknown(int i, int j, int k);           // i < j
    static int equation(int l, int m, int n);          // m < n
};
const LeviCivitaSystem& levi_civita_system();

/// Gamma^i_{jk} from c^k_{mn} (c[k][m][n]) by the rational solve.
template <class T>
Tensor3<T> levi_civita(const Tensor3<T>& c) {
    const LeviCivitaSystem& sys = levi_civita_system();
    const T zero = scale(c[0][0][0], CRational(0));
    std::array<T, 24> rhs;
    for (int l = 0; l < 4; ++l)
        for (int m = 0; m < 4; ++m)
            for (int n = m + 1; n < 4; ++n) rhs[LeviCivitaSystem::equation(l, m, n)] = c[partner(l)][m][n];
    Tensor3<T> lowered;
    for (auto& a : lowered)
        for (auto& b : a) b.fill(zero);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                const int u = LeviCivitaSystem::unknown(i, j, k);
                T s = zero;
                for (int e = 0; e < 24; ++e)
                    if (!sys.inverse[u][e].is_zero()) s = s + scale(rhs[e], CRational(sys.inverse[u][e]));
                lowered[i][j][k] = s;
                lowered[j][i][k] = scale(s, CRational(-1));
            }
    Tensor3<T> up;
    for (int i = 0; i < 4; ++i) up[i] = lowered[partner(i)];
    return up;
}

/// Lazily evaluated curvature of a connection. The derivation e(k, f) applies
/// the k-th frame vector; reduce (optional) is applied to every stored value.
template <class T>
class CurvatureSet {
public:
    using Derivation = std::function<T(int, const T&)>;
    using Reduction = std::function<T(const T&)>;

    CurvatureSet(Tensor3<T> gamma, Tensor3<T> c, Derivation e, Reduction reduce = nullptr)
        : gamma_(std::move(gamma)), c_(std::move(c)), e_(std::move(e)), reduce_(std::move(reduce)),
          zero_(scale(c_[0][0][0], CRational(0))) {}

    const Tensor3<T>& gamma() const { return gamma_; }
    const Tensor3<T>& structure_constants() const { return c_; }
    const T& zero() const { return zero_; }

    /// R^i_{jkl}
    const T& riemann_up(int i, int j, int k, int l) const {
        const int key = ((i * 4 + j) * 4 + k) * 4 + l;
        if (auto it = up_.find(key); it != up_.end()) return it->second;
        T v = zero_;
        if (k != l) {
            if (k > l) {
                v = scale(riemann_up(i, j, l, k), CRational(-1));
            } else {
                v = e_(k, gamma_[i][j][l]) - e_(l, gamma_[i][j][k]);
                for (int m = 0; m < 4; ++m) {
                    v = v - gamma_[i][j][m] * c_[m][k][l];
                    v = v + gamma_[i][m][k] * gamma_[m][j][l] - gamma_[i][m][l] * gamma_[m][j][k];
                }
                v = red(v);
            }
        }
        return up_.emplace(key, std::move(v)).first->second;
    }
    /// R_{ijkl}
    const T& riemann(int i, int j, int k, int l) const { return riemann_up(partner(i), j, k, l); }

    /// R_{jl} = R^k_{jkl}
    const T& ricci(int j, int l) const {
        const int key = j * 4 + l;
        if (auto it = ricci_.find(key); it != ricci_.end()) return it->second;
        T v = zero_;
        for (int k = 0; k < 4; ++k) v = v + riemann_up(k, j, k, l);
        return ricci_.emplace(key, red(v)).first->second;
    }

    const T& scalar() const {
        if (!scalar_) scalar_ = red(ricci(0, 1) + ricci(1, 0) + ricci(2, 3) + ricci(3, 2));
        return *scalar_;
    }

    T weyl(int i, int j, int k, int l) const {
        auto g = [](int a, int b) { return CRational(gram_entry(a, b)); };
        T v = riemann(i, j, k, l);
        const CRational gg = g(i, k) * g(l, j) - g(i, l) * g(k, j);
        if (!gg.is_zero()) v = v + scale(scalar(), gg * CRational(Rational(1, 6)));
        const CRational half(Rational(1, 2));
        if (gram_entry(i, l)) v = v + scale(ricci(k, j), half);
        if (gram_entry(i, k)) v = v - scale(ricci(l, j), half);
        if (gram_entry(j, k)) v = v + scale(ricci(l, i), half);
        if (gram_entry(j, l)) v = v - scale(ricci(k, i), half);
        return red(v);
    }

    T psi0() const { return weyl(3, 0, 3, 0); }
    T psi1() const { return weyl(3, 2, 3, 0); }

    /// (R_22, R_24, R_44): their vanishing is the Ricci condition on alpha-planes.
    std::array<T, 3> alpha_plane_ricci() const { return {ricci(1, 1), ricci(1, 3), ricci(3, 3)}; }

private:
    T red(const T& v) const { return reduce_ ? reduce_(v) : v; }

    Tensor3<T> gamma_, c_;
    Derivation e_;
    Reduction reduce_;
    T zero_;
    mutable std::map<int, T> up_, ricci_;
    mutable std::optional<T> scalar_;
};

// ---------------------------------------------------------------------------
// Symbolic instance

using SymbolicCurvature = CurvatureSet<sym::NormalForm>;

Tensor3<sym::NormalForm> symbolic_connection(const StructureConstants& c);
SymbolicCurvature symbolic_curvature(const AdaptedFrameBundle& b, const StructureConstants& c);

/// Torsion residual (d theta^i + Gamma^i_k ^ theta^k)(e_m, e_n) for m < n.
std::array<std::array<sym::NormalForm, 6>, 4> torsion_residual(const Tensor3<sym::NormalForm>& gamma,
                                                               const StructureConstants& c);

/// Gamma^i_j as a 1-form in the theta basis: component k is Gamma^i_{jk}.
std::array<sym::NormalForm, 4> connection_form(const Tensor3<sym::NormalForm>& gamma, int i, int j);

// ---------------------------------------------------------------------------
// Numeric instance

using NumericCurvature = CurvatureSet<Jet>;

/// Curvature at the context's point; the context carries the data bindings.
/// c is the symbolic structure-constant table of b.
NumericCurvature numeric_curvature(const AdaptedFrameBundle& b, const StructureConstants& c, JetContext& ctx);

struct CurvatureValues {
    std::array<cplx, 3> alpha_plane{};  // R22, R24, R44
    cplx psi0{}, psi1{};
    std::array<cplx, 5> riecu{};  // R2412, R2424, R2414, R2423, R2434
    std::array<cplx, 2> shear{};
    double bianchi = 0, weyl_trace = 0, ricci_asym = 0;
};

/// The values a Goldberg-Sachs style check needs, at one point.
CurvatureValues curvature_values(const AdaptedFrameBundle& b, const StructureConstants& c, JetContext& ctx,
                                 bool with_identities = false);

struct GoldbergSachsSample {
    Point4 point{};
    bool hypotheses_met = false;
    double hypothesis_residual = 0;
    std::map<std::string, double> residuals;  // psi0, psi1, R2412, ...
};

struct GoldbergSachsReport {
    std::vector<GoldbergSachsSample> samples;
    bool hypotheses_met = false;
    bool conclusion_holds = false;  // only meaningful when hypotheses_met
    [[nodiscard]] std::string verdict() const;
};

GoldbergSachsReport goldberg_sachs_check(const StructurePtr& s, const QuasiFeffermanData& d,
                                         const std::vector<Point4>& pts, double tol = 1e-9);

/// The shared generic quasi-Fefferman bundle and its structure constants.
const AdaptedFrameBundle& generic_bundle();
const StructureConstants& generic_structure_constants();

}  // namespace qf
