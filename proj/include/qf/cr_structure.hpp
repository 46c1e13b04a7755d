#pragma once

// Three-dimensional strictly pseudoconvex CR structures, abstractly (through
// the structure functions c, alpha, beta) and in coordinates (through the
// coframe mu, lambda or through the frame operator D1).

#include "qf/expr.hpp"
#include "qf/jet.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace qf {

using Point3 = std::array<double, 3>;
using Point4 = std::array<double, 4>;  // (x1, x2, x3, r)

/// Frame, coframe and structure functions as jets at one base point.
/// frame[L][j] is the dx^j component of D1, D2, D0 (L = 0, 1, 2);
/// coframe[a][j] is the dx^j component of mu, conj(mu), lambda.
struct FrameJets {
    int order = 0;
    std::array<std::array<Jet, 3>, 3> frame;
    std::array<std::array<Jet, 3>, 3> coframe;
    Jet c, alpha, beta;
};

class CoordinateCRStructure {
public:
    virtual ~CoordinateCRStructure() = default;
    /// Jets at p, every entry valid to at least the requested order.
    [[nodiscard]] virtual FrameJets jets(const Point3& p, int order) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual std::array<std::string, 3> coordinates() const { return {"x1", "x2", "x3"}; }
};

using StructurePtr = std::shared_ptr<const CoordinateCRStructure>;

/// Presentation by coordinate expressions for mu (complex) and lambda (real).
/// The frame is the inverse of the coframe matrix; c = dlambda(D1, D0),
/// alpha = dmu(D1, D0), beta = dmu(D2, D0).
class CoframeStructure : public CoordinateCRStructure {
public:
    CoframeStructure(std::string name, std::array<sym::FieldExpr, 3> mu, std::array<sym::FieldExpr, 3> lambda,
                     std::array<std::string, 3> coords = {"x1", "x2", "x3"});
    [[nodiscard]] FrameJets jets(const Point3& p, int order) const override;
    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] std::array<std::string, 3> coordinates() const override { return coords_; }
    /// Coframe component jets (mu, lambda) without inverting.
    [[nodiscard]] std::array<std::array<Jet, 3>, 2> coframe_jets(const Point3& p, int order) const;

private:
    std::string name_;
    std::array<sym::FieldExpr, 3> mu_, lambda_;
    std::array<std::string, 3> coords_;
};

/// Presentation by the components of D1. D2 is its conjugate and
/// D0 = i[D1, D2], which makes the normalization automatic.
class FrameStructure : public CoordinateCRStructure {
public:
    FrameStructure(std::string name, std::array<sym::FieldExpr, 3> d1);
    [[nodiscard]] FrameJets jets(const Point3& p, int order) const override;
    [[nodiscard]] std::string name() const override { return name_; }

private:
    std::string name_;
    std::array<sym::FieldExpr, 3> d1_;
};

/// mu' = f (mu + h lambda), lambda' = e^{2 tau} lambda with f = e^{tau + i theta}
/// and h = -i D2(tau + i theta); tau, theta are coordinate expressions.
class GaugedStructure : public CoordinateCRStructure {
public:
    GaugedStructure(StructurePtr base, sym::FieldExpr tau, sym::FieldExpr theta);
    [[nodiscard]] FrameJets jets(const Point3& p, int order) const override;
    [[nodiscard]] std::string name() const override;
    [[nodiscard]] std::array<std::string, 3> coordinates() const override { return base_->coordinates(); }
    [[nodiscard]] const StructurePtr& base() const { return base_; }
    [[nodiscard]] const sym::FieldExpr& tau() const { return tau_; }
    [[nodiscard]] const sym::FieldExpr& theta() const { return theta_; }

private:
    StructurePtr base_;
    sym::FieldExpr tau_, theta_;
};

/// Heisenberg structure: z = x1 + i x2, u = x3, mu = dz,
/// lambda = (du + i z dzb - i zb dz) / 2.
StructurePtr heisenberg();
/// "heisenberg" or "heisenberg-gauged(tau=<expr>,theta=<expr>)".
/// Throws sym::ConfigError("unknown structure ...") otherwise.
StructurePtr builtin_structure(const std::string& spec);

/// Frame jets of a coframe matrix; shared by the presentations.
FrameJets frame_from_coframe(const std::array<std::array<Jet, 3>, 3>& coframe);

// ---------------------------------------------------------------------------
// Evaluation of expressions on the bundle at one point

class JetContext {
public:
    JetContext(StructurePtr s, const Point4& point, int order = 6);
    /// Uses precomputed frame jets (s may be null; then only the frame is used).
    JetContext(StructurePtr s, FrameJets frame, const Point4& point, std::array<std::string, 3> coords);

    /// Binds a name to an expression evaluated lazily (may use other names).
    void bind(const std::string& name, const sym::FieldExpr& e);
    void bind(const std::string& name, const Jet& j);
    [[nodiscard]] bool bound(const std::string& name) const;

    Jet eval(const sym::FieldExpr& e);
    Jet eval(const sym::NormalForm& e);
    Jet symbol(const std::string& name);
    [[nodiscard]] Jet apply(sym::Letter l, const Jet& j) const;
    Jet word(sym::AtomId a, sym::Word w);

    /// Values of every word the expressions need.
    sym::PointSample sample(const std::vector<sym::NormalForm>& exprs);

    [[nodiscard]] const FrameJets& frame() const { return frame_; }
    [[nodiscard]] const Point4& point() const { return point_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] const StructurePtr& structure() const { return s_; }

private:
    StructurePtr s_;
    Point4 point_;
    int order_;
    std::array<std::string, 3> coords_;
    FrameJets frame_;
    std::map<std::string, sym::FieldExpr> pending_;
    std::map<std::string, Jet> resolved_;
    std::vector<std::string> resolving_;
    std::map<std::pair<sym::AtomId, sym::Word>, Jet> words_;
};

/// Jet of a coordinate expression in (x1, x2, x3, r) with frame operators
/// from the given structure. Convenience wrapper over JetContext.
Jet eval_jet(const sym::FieldExpr& e, const StructurePtr& s, const Point4& p, int order);

// ---------------------------------------------------------------------------
// Operations on coordinate structures

struct CoframeResidual {
    Point3 point{};
    cplx dlambda_mumubar;     // should equal i
    cplx dmu_mumubar;         // should vanish
    double dlambda_wedge_lambda = 0.0;  // dx1^dx2^dx3 coefficient, must not vanish
    double lambda_imag = 0.0;           // max |Im lambda_j|
};

struct CoframeReport {
    bool valid = true;
    std::vector<std::string> violations;
    std::vector<CoframeResidual> residuals;
};

CoframeReport validate_coframe(const CoframeStructure& s, const std::vector<Point3>& pts, double tol = 1e-9);

/// Words of c, alpha, beta (and conjugates) up to the given length at p.
sym::PointSample extract_structure_functions(const StructurePtr& s, const Point3& p, int order = 3);

/// D2 f at p.
cplx cr_residual(const sym::FieldExpr& f, const StructurePtr& s, const Point3& p);
/// D2 log(psi) + conj(c) at p. Throws std::domain_error when psi vanishes.
cplx canonical_section_residual(const sym::FieldExpr& psi, const StructurePtr& s, const Point3& p);

// ---------------------------------------------------------------------------
// Abstract structures and gauge transformations

struct GaugeTransform {
    sym::FieldExpr tau = sym::FieldExpr(0);
    sym::FieldExpr theta = sym::FieldExpr(0);
};

/// Structure functions expressed through base atoms, together with the frame
/// D'_L = sum_M frame[L][M] D_M in terms of the base letters.
struct AbstractCRStructure {
    sym::NormalForm c = sym::atoms::c();
    sym::NormalForm alpha = sym::atoms::alpha();
    sym::NormalForm beta = sym::atoms::beta();
    std::array<std::array<sym::NormalForm, 3>, 3> frame{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    /// mu', conj(mu'), lambda' in terms of the base coframe.
    std::array<std::array<sym::NormalForm, 3>, 3> coframe{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    sym::Substitution substitutions;
    sym::NormalForm last_h;  // h of the most recent gauge

    /// Derivative along this structure's own D1, D2, D0 (Dr passes through).
    [[nodiscard]] sym::NormalForm d(const sym::NormalForm& f, sym::Letter l) const;
    [[nodiscard]] sym::NormalForm c_bar() const { return sym::conjugate(c); }
    [[nodiscard]] sym::NormalForm alpha_bar() const { return sym::conjugate(alpha); }
    [[nodiscard]] sym::NormalForm beta_bar() const { return sym::conjugate(beta); }
};

/// The generic structure, optionally with alpha = beta = 0.
AbstractCRStructure generic_structure(bool mu_exact = false);

AbstractCRStructure apply_gauge(const AbstractCRStructure& s, const GaugeTransform& g);
/// h = -i D2(tau + i theta) along the structure's frame.
sym::NormalForm gauge_h(const AbstractCRStructure& s, const GaugeTransform& g);
/// c, alpha, beta recomputed from the frame commutators (cross-check of apply_gauge).
std::array<sym::NormalForm, 3> structure_functions_from_frame(const AbstractCRStructure& s);

}  // namespace qf
