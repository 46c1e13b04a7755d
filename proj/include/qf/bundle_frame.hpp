#pragma once

// Quasi-Fefferman metrics g = 2P^2 [mu mubar + lambda (dr + W mu + conj(W) mubar + H lambda)],
// W = i x e^{-ir} - (i/3) c, on the trivialised circle bundle, with the adapted
// coframe theta^1 = P mu, theta^2 = P mubar, theta^3 = P lambda,
// theta^4 = P (dr + W mu + conj(W) mubar + H lambda) and its dual frame.

#include "qf/cr_structure.hpp"
#include "qf/forms.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>

namespace qf {

using NFMatrix4 = std::array<std::array<sym::NormalForm, 4>, 4>;
/// c[k][m][n] with [e_m, e_n] = c^k_{mn} e_k (indices 0..3 for 1..4).
using StructureConstants = std::array<std::array<std::array<sym::NormalForm, 4>, 4>, 4>;

/// Parameters as coordinate expressions in (x1, x2, x3, r) and the structure's
/// own names. When a and s are both given, P = a / cos((r + s)/2).
struct QuasiFeffermanData {
    sym::FieldExpr P = sym::FieldExpr(1);
    sym::FieldExpr H = sym::FieldExpr(0);
    sym::FieldExpr x = sym::FieldExpr(0);
    std::optional<sym::FieldExpr> a, s;

    [[nodiscard]] sym::FieldExpr P_expr() const;
};

/// The constant Gram matrix of an adapted frame.
const Eigen::Matrix4d& gram();

struct AdaptedFrameBundle {
    NFMatrix4 coframe;  // theta^i = coframe[i][L] omega^L, omega = (mu, mubar, lambda, dr)
    NFMatrix4 frame;    // e_i = frame[i][L] D_L, D = (D1, D2, D0, Dr)
    sym::NormalForm P, H, x, W;
    sym::Substitution subs;

    /// Derivative of f along e_i.
    [[nodiscard]] sym::NormalForm e(int i, const sym::NormalForm& f) const;
    [[nodiscard]] Form theta(int i) const;
};

/// W = i x e^{-ir} - (i/3) c
sym::NormalForm w_of(const sym::NormalForm& x);

/// Throws std::invalid_argument when P is identically zero.
AdaptedFrameBundle build_quasi_fefferman(const sym::NormalForm& P, const sym::NormalForm& H,
                                         const sym::NormalForm& x, const sym::Substitution& subs = {});
/// Generic atoms P, H, x (optionally with alpha = beta = 0).
AdaptedFrameBundle build_quasi_fefferman(bool mu_exact = false);

/// Fefferman H = -(D1 conj(c) + D2 c)/12 + i (alpha - conj(alpha))/4.
sym::NormalForm fefferman_H();
/// The Fefferman representative as the quasi-Fefferman member x = 0, P = 1/sqrt(2).
AdaptedFrameBundle build_fefferman(const sym::Substitution& subs = {});
/// Components g(D_L, D_M) of the Fefferman metric read directly from its
/// defining formula, with d rho = (3/2) dr.
NFMatrix4 fefferman_metric_direct();
/// Components g(D_L, D_M) of 2 theta^1 theta^2 + 2 theta^3 theta^4.
NFMatrix4 metric_components(const AdaptedFrameBundle& b);

/// theta^i(e_j), normalised.
NFMatrix4 duality(const AdaptedFrameBundle& b);

/// [D_M, D_N] = table[M][N][K] D_K.
const StructureConstants& commutator_table();
StructureConstants structure_constants(const AdaptedFrameBundle& b);

/// The two 4-form coefficients dtheta^3^theta^1^theta^3 and dtheta^1^theta^1^theta^3,
/// evaluated on (e1, e2, e3, e4), for an arbitrary coframe matrix.
std::array<sym::NormalForm, 2> shear_free_residual(const NFMatrix4& coframe, const sym::Substitution& subs = {});
std::array<sym::NormalForm, 2> shear_free_residual(const AdaptedFrameBundle& b);

/// (P, x, H) in the original coframe from (P', x', H') in the coframe changed by g.
/// The primed expressions use r for the primed fiber coordinate r' = r - (2/3) theta
/// and may not contain frame derivatives.
QuasiFeffermanData transform_parameters(const GaugeTransform& g, const QuasiFeffermanData& primed);

/// Replaces every occurrence of a symbol (including inside wrapped normal forms
/// for the fiber coordinate r).
sym::FieldExpr replace_symbol(const sym::FieldExpr& e, const std::string& name, const sym::FieldExpr& value);

// ---------------------------------------------------------------------------
// Numeric evaluation at one point of the bundle

/// Binds P, H, x (and a, s when present) in the context.
void bind_data(JetContext& ctx, const QuasiFeffermanData& d);

struct PointFrame {
    Eigen::Matrix4cd e;      // row i: coordinate components of e_i in (x1, x2, x3, r)
    Eigen::Matrix4cd theta;  // row i: coordinate components of theta^i
    Eigen::Matrix4d g;       // coordinate metric
};

/// Evaluates the bundle's frame, coframe and metric in coordinates; the
/// context supplies the structure and the data bindings.
PointFrame evaluate_frame(const AdaptedFrameBundle& b, JetContext& ctx);
/// Convenience: quasi-Fefferman metric of the data on s at p, in coordinates.
PointFrame quasi_fefferman_point(const StructurePtr& s, const QuasiFeffermanData& d, const Point4& p);
/// Fefferman metric on s at (x, r) in coordinates (x1, x2, x3, r), from its defining formula.
Eigen::Matrix4d fefferman_point(const StructurePtr& s, const Point4& p);

struct AdaptedFrame {
    std::array<Eigen::Vector4cd, 4> e;  // (e1, e2, l, k)
    [[nodiscard]] Eigen::Matrix4cd gram(const Eigen::Matrix4d& g) const;
};

/// Adapted null frame for a Lorentzian metric g (coordinates) and a null
/// vector k: l null with g(l, k) = 1, e1 = (eps1 - i eps2)/sqrt(2) with eps1,
/// eps2 orthonormal in the screen space. eps1 comes from the first coordinate
/// direction with a spacelike screen projection; eps2 is oriented so that
/// (eps1, eps2, l, k) is positively oriented. Throws std::domain_error when k
/// is not null or g is degenerate.
AdaptedFrame adapt_frame(const Eigen::Matrix4d& g, const Eigen::Vector4d& k, double tol = 1e-10);

}  // namespace qf
