#pragma once

// The Ricci-on-alpha-planes criterion for embeddability and the quantities
// that enter it: the P profile, the conditions on (a, s, x), the function t,
// the connection form Gamma_24, the form phi = mu + i conj(t) lambda and the
// converse construction from a closed section of the canonical bundle.
// Conditions on t assume mu is exact (alpha = beta = 0).

#include "qf/connection_curvature.hpp"
#include "qf/kernels.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qf {

// ---------------------------------------------------------------------------
// P profile

struct PProfileValue {
    double P = 0;
    double residual = 0;  // -4 P P_rr + 8 P_r^2 + P^2
};

/// P = a / cos((r + s)/2) and its profile residual; throws std::domain_error
/// within 1e-6 of a pole.
PProfileValue p_profile(double a, double s, double r);
/// The profile residual of an arbitrary P(r) at r.
double profile_residual(const sym::FieldExpr& P, double r);
/// -4 P P_rr + 8 P_r^2 + P^2
sym::NormalForm profile_expression(const sym::NormalForm& P);
/// a / cos((r + s)/2) with the standard atoms a, s.
sym::NormalForm profile_P();

// ---------------------------------------------------------------------------
// Conditions on (a, s, x); expressions use the atoms a, s, x and the structure's c.

/// D1 log a^2 + i D1 s - 2 x e^{is} + (2/3) c
sym::NormalForm sec_expression();
/// t = c + D1 log a^2 - x e^{is}
sym::NormalForm t_expression();
/// D1 t + t (c - t) for a given t
sym::NormalForm equ_expression(const sym::NormalForm& t);

// ---------------------------------------------------------------------------
// Gamma_24 = Gamma^1_4 = sigma theta^1 + rho_coef theta^3

struct Gamma24 {
    sym::NormalForm sigma;
    sym::NormalForm rho_coef;            // from the connection solve
    sym::NormalForm rho_coef_displayed;  // the closed form as printed
};
Gamma24 gamma24_coefficients(const AdaptedFrameBundle& b, const Tensor3<sym::NormalForm>& gamma);

/// phi = mu + i conj(t) lambda
Form phi_form(const sym::NormalForm& t);
struct PhiIntegrability {
    sym::NormalForm residual;  // mu^mubar^lambda coefficient of dphi^phi
    sym::NormalForm witness;   // mu^mubar coefficient of phi^conj(phi)
    Form phi;
};
PhiIntegrability phi_integrability(const sym::NormalForm& t);

// ---------------------------------------------------------------------------
// Converse construction

struct EmbeddableMetric {
    QuasiFeffermanData data;
    std::vector<std::string> warnings;
};

/// Data (a, s, x, H) built from a section psi with D1 log conj(psi) = -c.
/// Throws std::domain_error when psi vanishes at a sample; a closed-section
/// residual above tol or a sample near the branch cut adds a warning.
EmbeddableMetric build_embeddable_metric(const sym::FieldExpr& psi, const StructurePtr& s, const sym::FieldExpr& H,
                                         const std::vector<Point4>& samples, double tol = 1e-8);

// ---------------------------------------------------------------------------
// Report

struct SampleResult {
    Point4 point{};
    std::vector<std::pair<std::string, cplx>> residuals;
    bool pass = true;
};

struct CheckResult {
    std::string name;
    std::vector<SampleResult> samples;
    std::string verdict;  // "pass", "fail", "not applicable", "hypotheses not met"
};

struct EmbeddabilityReport {
    std::vector<CheckResult> checks;
    std::string branch;  // "t_zero", "t_nonzero" or "not applicable"
    std::string structure;
    std::vector<std::pair<std::string, std::string>> parameters;
    double tolerance = 1e-8;
    std::vector<std::string> warnings;

    /// "criterion satisfied" iff every applicable check passes.
    [[nodiscard]] std::string verdict() const;
    [[nodiscard]] bool satisfied() const;
    [[nodiscard]] const CheckResult* find(const std::string& name) const;
};

EmbeddabilityReport check_embeddability(const StructurePtr& s, const QuasiFeffermanData& d,
                                        const std::vector<Point4>& samples, double tol = 1e-8,
                                        Execution exec = Execution::Parallel);

nlohmann::json to_json(const EmbeddabilityReport& r);
std::string to_text(const EmbeddabilityReport& r);

/// Whether alpha = beta = 0 at every sample (within tol).
bool mu_exact_at(const StructurePtr& s, const std::vector<Point4>& samples, double tol = 1e-10);

}  // namespace qf
