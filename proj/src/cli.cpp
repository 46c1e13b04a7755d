#include "qf/cli.hpp"

#include "qf/embeddability.hpp"
#include "qf/kernels.hpp"

#include "CLI11.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace qf {

using nlohmann::json;
using sym::ConfigError;
using sym::FieldExpr;
using sym::NormalForm;

namespace {

constexpr double kCheckTolerance = 1e-8;
constexpr double kInvarianceTolerance = 1e-9;

json complex_json(cplx v) { return json::array({v.real(), v.imag()}); }

std::string fmt_cplx(cplx v) { return fmt::format("{:.12g}{:+.12g}i", v.real() + 0.0, v.imag() + 0.0); }

std::string latex_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '_' || c == '&' || c == '%' || c == '#' || c == '$') out += '\\';
        out += c;
    }
    return out;
}

struct Prepared {
    StructurePtr structure;
    std::vector<Point4> samples;
    QuasiFeffermanData data;
    std::vector<std::string> warnings;
};

FieldExpr parse_param(const std::optional<std::string>& v, const char* fallback) {
    return FieldExpr::parse(v ? *v : fallback);
}

// Data for the metric on structure s from the configured parameters.
QuasiFeffermanData make_data(const RunConfig& cfg, const StructurePtr& s, const std::vector<Point4>& pts,
                             std::vector<std::string>& warnings) {
    QuasiFeffermanData d;
    d.H = parse_param(cfg.H, "0");
    if (cfg.psi) {
        if (cfg.P || cfg.a || cfg.s || cfg.x) throw ConfigError("--psi determines P and x; drop --P/--a/--s/--x");
        EmbeddableMetric m = build_embeddable_metric(FieldExpr::parse(*cfg.psi), s, d.H, pts,
                                                     cfg.tolerance.value_or(kCheckTolerance));
        for (auto& w : m.warnings) warnings.push_back(std::move(w));
        return m.data;
    }
    if (cfg.a.has_value() != cfg.s.has_value()) throw ConfigError("--a and --s must be given together");
    if (cfg.a) {
        if (cfg.P) throw ConfigError("--P conflicts with --a/--s, which determine P");
        d.a = FieldExpr::parse(*cfg.a);
        d.s = FieldExpr::parse(*cfg.s);
    } else {
        d.P = parse_param(cfg.P, "1");
    }
    d.x = parse_param(cfg.x, "0");
    return d;
}

Prepared prepare(const RunConfig& cfg, const StructurePtr& s) {
    Prepared p;
    p.structure = s;
    p.samples = resolve_samples(cfg.samples);
    p.data = make_data(cfg, s, p.samples, p.warnings);
    return p;
}

json sample_spec_json(const RunConfig& cfg) {
    if (!cfg.samples.points.empty()) return {{"mode", "explicit"}, {"count", cfg.samples.points.size()}};
    return {{"mode", "random"},
            {"count", cfg.samples.count},
            {"seed", cfg.samples.seed},
            {"box", cfg.samples.box},
            {"margin", cfg.samples.margin}};
}

json parameters_json(const QuasiFeffermanData& d) {
    json p = {{"P", d.P_expr().str()}, {"H", d.H.str()}, {"x", d.x.str()}};
    if (d.a) p["a"] = d.a->str();
    if (d.s) p["s"] = d.s->str();
    return p;
}

// ---------------------------------------------------------------------------
// curvature

const char* kIndex[4] = {"1", "2", "3", "4"};

// Whether every atom of e is the fiber coordinate or a structure function,
// so that e can enter the symbolic frame directly.
bool symbolic_ok(const NormalForm& e) {
    const sym::Registry& reg = sym::Registry::instance();
    for (const auto& [atom, word] : sym::required_words(e)) {
        if (atom == reg.r || atom == reg.c || atom == reg.c_bar || atom == reg.alpha || atom == reg.alpha_bar ||
            atom == reg.beta || atom == reg.beta_bar)
            continue;
        return false;
    }
    return true;
}

struct SymbolicDump {
    std::string mode;  // "substituted" or "generic"
    Tensor3<NormalForm> gamma;
    std::optional<NormalForm> psi0, psi1;
};

SymbolicDump symbolic_dump(const RunConfig& cfg, const QuasiFeffermanData& d) {
    SymbolicDump out;
    FieldExpr Pe = d.P_expr();
    if (d.a && d.s) Pe = replace_symbol(replace_symbol(Pe, "a", *d.a), "s", *d.s);
    const NormalForm P = sym::normalize(Pe);
    const NormalForm H = sym::normalize(d.H);
    const NormalForm x = sym::normalize(d.x);
    if (symbolic_ok(P) && symbolic_ok(H) && symbolic_ok(x) && !P.is_zero()) {
        sym::Substitution subs;
        if (cfg.structure.builtin == "heisenberg" && !cfg.structure.mu && !cfg.structure.d1) {
            subs[sym::Registry::instance().c] = NormalForm();
            subs[sym::Registry::instance().alpha] = NormalForm();
            subs[sym::Registry::instance().beta] = NormalForm();
        }
        const AdaptedFrameBundle b = build_quasi_fefferman(P, H, x, subs);
        const StructureConstants c = structure_constants(b);
        out.mode = "substituted";
        out.gamma = symbolic_connection(c);
        for (auto& t : out.gamma)
            for (auto& row : t)
                for (auto& v : row) v = subs.empty() ? v : sym::substitute(v, subs);
        if (subs.size() == 3) {
            const SymbolicCurvature cs = symbolic_curvature(b, c);
            out.psi0 = cs.psi0();
            out.psi1 = cs.psi1();
        }
    } else {
        out.mode = "generic";
        out.gamma = symbolic_connection(generic_structure_constants());
    }
    return out;
}

std::string form_text(const std::array<NormalForm, 4>& coef) {
    std::string s;
    for (int k = 0; k < 4; ++k) {
        if (coef[k].is_zero()) continue;
        if (!s.empty()) s += " + ";
        s += "(" + coef[k].str() + ") θ^" + kIndex[k];
    }
    return s.empty() ? "0" : s;
}

std::string form_latex(const std::array<NormalForm, 4>& coef) {
    std::string s;
    for (int k = 0; k < 4; ++k) {
        if (coef[k].is_zero()) continue;
        if (!s.empty()) s += " + ";
        s += "\\left(" + coef[k].latex() + "\\right)\\theta^{" + kIndex[k] + "}";
    }
    return s.empty() ? "0" : s;
}

struct NumericSample {
    Tensor3<cplx> gamma;
    std::array<std::array<cplx, 4>, 4> ricci;
    cplx scalar, psi0, psi1;
    std::array<cplx, 3> alpha_plane;
};

}  // namespace

CommandResult cmd_curvature(const RunConfig& cfg) {
    const Prepared p = prepare(cfg, make_structure(cfg.structure));
    const SymbolicDump sd = symbolic_dump(cfg, p.data);
    warm_up();
    const std::vector<NumericSample> num = map_indices<NumericSample>(
        p.samples.size(),
        [&](std::size_t i) {
            JetContext ctx(p.structure, p.samples[i], 4);
            bind_data(ctx, p.data);
            const NumericCurvature cs = numeric_curvature(generic_bundle(), generic_structure_constants(), ctx);
            NumericSample ns;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    for (int k = 0; k < 4; ++k) ns.gamma[a][b][k] = cs.gamma()[a][b][k].value();
                    ns.ricci[a][b] = cs.ricci(a, b).value();
                }
            ns.scalar = cs.scalar().value();
            ns.psi0 = cs.psi0().value();
            ns.psi1 = cs.psi1().value();
            const auto ap = cs.alpha_plane_ricci();
            for (int k = 0; k < 3; ++k) ns.alpha_plane[k] = ap[k].value();
            return ns;
        },
        Execution::Parallel);

    CommandResult r;
    json forms = json::object();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            json f = json::object();
            for (int k = 0; k < 4; ++k)
                if (!sd.gamma[i][j][k].is_zero()) f[std::string("theta^") + kIndex[k]] = sd.gamma[i][j][k].str();
            forms[fmt::format("Gamma^{}_{}", kIndex[i], kIndex[j])] = f;
        }
    json symbolic = {{"mode", sd.mode}, {"connection_forms", forms}};
    if (sd.psi0) symbolic["psi0"] = sd.psi0->str();
    if (sd.psi1) symbolic["psi1"] = sd.psi1->str();

    json samples = json::array();
    for (std::size_t n = 0; n < num.size(); ++n) {
        const NumericSample& ns = num[n];
        json gam = json::object();
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                json row = json::array();
                for (int k = 0; k < 4; ++k) row.push_back(complex_json(ns.gamma[i][j][k]));
                gam[fmt::format("Gamma^{}_{}", kIndex[i], kIndex[j])] = row;
            }
        json ric = json::array();
        for (int i = 0; i < 4; ++i) {
            json row = json::array();
            for (int j = 0; j < 4; ++j) row.push_back(complex_json(ns.ricci[i][j]));
            ric.push_back(row);
        }
        samples.push_back({{"point", p.samples[n]},
                           {"connection", gam},
                           {"ricci", ric},
                           {"scalar", complex_json(ns.scalar)},
                           {"psi0", complex_json(ns.psi0)},
                           {"psi1", complex_json(ns.psi1)},
                           {"alpha_plane_ricci",
                            {{"R22", complex_json(ns.alpha_plane[0])},
                             {"R24", complex_json(ns.alpha_plane[1])},
                             {"R44", complex_json(ns.alpha_plane[2])}}}});
    }
    r.report = {{"command", "curvature"},     {"structure", p.structure->name()},
                {"parameters", parameters_json(p.data)}, {"sampling", sample_spec_json(cfg)},
                {"symbolic", symbolic},       {"samples", samples},
                {"warnings", p.warnings}};

    std::ostringstream t;
    t << "structure: " << p.structure->name() << "\n";
    const json params = parameters_json(p.data);
    for (const auto& [k, v] : params.items()) t << "  " << k << " = " << v.get<std::string>() << "\n";
    t << "connection forms (" << sd.mode << "):\n";
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            t << fmt::format("  Γ^{}_{} = {}\n", kIndex[i], kIndex[j], form_text(sd.gamma[i][j]));
    if (sd.psi0) t << "  Ψ0 = " << sd.psi0->str() << "\n  Ψ1 = " << sd.psi1->str() << "\n";
    for (std::size_t n = 0; n < num.size(); ++n) {
        const NumericSample& ns = num[n];
        const Point4& q = p.samples[n];
        t << fmt::format("sample ({:.6g}, {:.6g}, {:.6g}, r={:.6g})\n", q[0], q[1], q[2], q[3]);
        t << "  Ψ0 = " << fmt_cplx(ns.psi0) << "\n  Ψ1 = " << fmt_cplx(ns.psi1) << "\n";
        t << "  scalar = " << fmt_cplx(ns.scalar) << "\n";
        t << "  R22 = " << fmt_cplx(ns.alpha_plane[0]) << "  R24 = " << fmt_cplx(ns.alpha_plane[1])
          << "  R44 = " << fmt_cplx(ns.alpha_plane[2]) << "\n";
    }
    for (const auto& w : p.warnings) t << "warning: " << w << "\n";
    r.text = t.str();

    std::ostringstream l;
    l << "% connection forms for " << latex_escape(p.structure->name()) << " (" << sd.mode << ")\n";
    l << "\\begin{align*}\n";
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            l << fmt::format("\\Gamma^{{{}}}{{}}_{{{}}} &= {} \\\\\n", kIndex[i], kIndex[j], form_latex(sd.gamma[i][j]));
    if (sd.psi0) l << "\\Psi_0 &= " << sd.psi0->latex() << " \\\\\n\\Psi_1 &= " << sd.psi1->latex() << "\n";
    l << "\\end{align*}\n";
    r.latex = l.str();
    r.exit_code = 0;
    return r;
}

// ---------------------------------------------------------------------------
// check

CommandResult cmd_check(const RunConfig& cfg) {
    const Prepared p = prepare(cfg, make_structure(cfg.structure));
    EmbeddabilityReport rep =
        check_embeddability(p.structure, p.data, p.samples, cfg.tolerance.value_or(kCheckTolerance));
    rep.warnings.insert(rep.warnings.begin(), p.warnings.begin(), p.warnings.end());
    CommandResult r;
    r.report = to_json(rep);
    r.report["command"] = "check";
    r.report["sampling"] = sample_spec_json(cfg);
    r.text = to_text(rep);

    std::ostringstream l;
    l << "% embeddability checks for " << latex_escape(rep.structure) << "\n";
    l << "\\begin{tabular}{lll}\n\\hline\ncheck & verdict & $\\max|\\text{residual}|$ \\\\\n\\hline\n";
    for (const auto& c : rep.checks) {
        double worst = 0;
        for (const auto& s : c.samples)
            for (const auto& [n, v] : s.residuals) worst = std::max(worst, std::abs(v));
        l << latex_escape(c.name) << " & " << c.verdict << " & "
          << (c.samples.empty() ? std::string("--") : fmt::format("${:.3e}$", worst)) << " \\\\\n";
    }
    l << "\\hline\n\\end{tabular}\n% verdict: " << rep.verdict() << "\n";
    r.latex = l.str();
    r.exit_code = rep.satisfied() ? 0 : 1;
    return r;
}

// ---------------------------------------------------------------------------
// invariance

CommandResult cmd_invariance(const RunConfig& cfg) {
    if (!cfg.gauge_tau && !cfg.gauge_theta)
        throw ConfigError("invariance needs a gauge block (--gauge-tau and/or --gauge-theta)");
    const StructurePtr base = make_structure(cfg.structure);
    const GaugeTransform g{parse_param(cfg.gauge_tau, "0"), parse_param(cfg.gauge_theta, "0")};
    const StructurePtr primed_s = std::make_shared<GaugedStructure>(base, g.tau, g.theta);
    const std::vector<Point4> pts = resolve_samples(cfg.samples);
    const double tol = cfg.tolerance.value_or(kInvarianceTolerance);

    std::vector<std::string> warnings;
    std::optional<QuasiFeffermanData> primed, original;
    if (!cfg.fefferman) {
        primed = make_data(cfg, primed_s, pts, warnings);
        original = transform_parameters(g, *primed);
    }

    struct Row {
        double deviation = 0;
        double factor = 0, expected = 0;
    };
    warm_up();
    const std::vector<Row> rows = map_indices<Row>(
        pts.size(),
        [&](std::size_t i) {
            const Point4& p = pts[i];
            const Jet th = eval_jet(g.theta, base, p, 1);
            Eigen::Matrix4d J = Eigen::Matrix4d::Identity();
            for (int j = 0; j < 3; ++j) J(3, j) = -(2.0 / 3.0) * th.d(j).value().real();
            const Point4 pp{p[0], p[1], p[2], p[3] - 2.0 * th.value().real() / 3.0};
            Row row;
            if (cfg.fefferman) {
                const Eigen::Matrix4d A = J.transpose() * fefferman_point(primed_s, pp) * J;
                const Eigen::Matrix4d B = fefferman_point(base, p);
                row.factor = (A.array() * B.array()).sum() / B.squaredNorm();
                row.expected = std::exp(2.0 * eval_jet(g.tau, base, p, 0).value().real());
                row.deviation = (A - row.factor * B).cwiseAbs().maxCoeff();
            } else {
                const Eigen::Matrix4d lhs = quasi_fefferman_point(base, *original, p).g;
                const Eigen::Matrix4d rhs = J.transpose() * quasi_fefferman_point(primed_s, *primed, pp).g * J;
                row.deviation = (lhs - rhs).cwiseAbs().maxCoeff();
            }
            return row;
        },
        Execution::Parallel);

    double max_dev = 0, max_factor_err = 0;
    json samples = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        max_dev = std::max(max_dev, rows[i].deviation);
        json s = {{"point", pts[i]}};
        if (cfg.fefferman) {
            const double err = std::abs(rows[i].factor - rows[i].expected);
            max_factor_err = std::max(max_factor_err, err);
            s["fit_residual"] = rows[i].deviation;
            s["conformal_factor"] = rows[i].factor;
            s["expected_factor"] = rows[i].expected;
        } else {
            s["deviation"] = rows[i].deviation;
        }
        samples.push_back(s);
    }
    const bool pass = max_dev <= tol && max_factor_err <= tol;

    CommandResult r;
    r.report = {{"command", "invariance"},
                {"structure", base->name()},
                {"gauge", {{"tau", g.tau.str()}, {"theta", g.theta.str()}}},
                {"mode", cfg.fefferman ? "fefferman" : "quasi-fefferman"},
                {"sampling", sample_spec_json(cfg)},
                {"samples", samples},
                {"tolerance", tol},
                {"pass", pass},
                {"warnings", warnings}};
    if (cfg.fefferman) {
        r.report["max_fit_residual"] = max_dev;
        r.report["max_factor_error"] = max_factor_err;
    } else {
        r.report["max_deviation"] = max_dev;
        r.report["parameters"] = parameters_json(*primed);
        r.report["transformed_parameters"] = parameters_json(*original);
    }

    std::ostringstream t;
    t << "structure: " << base->name() << "\n";
    t << "gauge: tau = " << g.tau.str() << ", theta = " << g.theta.str() << "\n";
    if (cfg.fefferman) {
        t << fmt::format("Fefferman metric, conformal factor e^(2 tau)\nmax fit residual: {:.3e}\nmax factor error: {:.3e}\n",
                         max_dev, max_factor_err);
    } else {
        t << "primed parameters:\n";
        const json pp = parameters_json(*primed), op = parameters_json(*original);
        for (const auto& [k, v] : pp.items()) t << "  " << k << " = " << v.get<std::string>() << "\n";
        t << "transformed parameters:\n";
        for (const auto& [k, v] : op.items()) t << "  " << k << " = " << v.get<std::string>() << "\n";
        t << fmt::format("max deviation: {:.3e}\n", max_dev);
    }
    for (const auto& w : warnings) t << "warning: " << w << "\n";
    t << fmt::format("tolerance: {:g}\nresult: {}\n", tol, pass ? "pass" : "fail");
    r.text = t.str();

    std::ostringstream l;
    l << "% CR invariance for " << latex_escape(base->name()) << "\n";
    l << fmt::format("\\[ \\tau = {},\\quad \\theta = {} \\]\n", sym::normalize(g.tau).latex(),
                     sym::normalize(g.theta).latex());
    if (cfg.fefferman)
        l << fmt::format("\\[ \\max\\|\\tilde g - k\\,g\\| = {:.3e},\\quad \\max|k - e^{{2\\tau}}| = {:.3e} \\]\n", max_dev,
                         max_factor_err);
    else
        l << fmt::format("\\[ \\max\\|g' - g\\| = {:.3e} \\]\n", max_dev);
    r.latex = l.str();
    r.exit_code = pass ? 0 : 1;
    return r;
}

// ---------------------------------------------------------------------------

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quasi-Fefferman metrics: curvature, embeddability and CR-invariance checks", "quasifeff"};
    app.require_subcommand(1);

    struct Flags {
        std::optional<std::string> structure, config, P, a, s, x, H, psi, tau, theta, format, out;
        std::optional<std::size_t> samples;
        std::optional<std::uint64_t> seed;
        std::optional<double> tolerance;
        bool fefferman = false;
    } f;

    auto add_flags = [&f](CLI::App* sub) {
        sub->add_option("--structure", f.structure, "builtin structure or structure file (.toml)");
        sub->add_option("--config", f.config, "TOML run configuration");
        sub->add_option("--P", f.P, "P as an expression in x1, x2, x3, r");
        sub->add_option("--a", f.a, "profile amplitude a (with --s)");
        sub->add_option("--s", f.s, "profile phase s (with --a)");
        sub->add_option("--x", f.x, "the function x");
        sub->add_option("--H", f.H, "the function H");
        sub->add_option("--psi", f.psi, "closed section psi; builds a, s, x");
        sub->add_option("--gauge-tau", f.tau, "gauge tau");
        sub->add_option("--gauge-theta", f.theta, "gauge theta");
        sub->add_flag("--fefferman", f.fefferman, "invariance of the Fefferman representative");
        sub->add_option("--samples", f.samples, "number of random samples")->check(CLI::PositiveNumber);
        sub->add_option("--seed", f.seed, "random seed");
        sub->add_option("--tolerance", f.tolerance, "verdict tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--format", f.format, "text, json or latex")->check(CLI::IsMember({"text", "json", "latex"}));
        sub->add_option("--out", f.out, "write the report to a file");
    };
    CLI::App* curv = app.add_subcommand("curvature", "connection forms, curvature and Weyl scalars");
    CLI::App* check = app.add_subcommand("check", "embeddability report");
    CLI::App* inv = app.add_subcommand("invariance", "compare a metric with its gauge transform");
    for (CLI::App* sub : {curv, check, inv}) add_flags(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        RunConfig cfg;
        if (f.config) apply_config(cfg, load_toml(*f.config));
        if (f.structure) {
            if (std::filesystem::is_regular_file(*f.structure)) {
                const json doc = load_toml(*f.structure);
                cfg.structure = read_structure_source(doc.contains("structure") ? doc["structure"] : doc);
            } else {
                cfg.structure = builtin_source(*f.structure);
            }
        }
        for (auto [flag, slot] : {std::pair{&f.P, &cfg.P}, {&f.a, &cfg.a}, {&f.s, &cfg.s}, {&f.x, &cfg.x},
                                  {&f.H, &cfg.H}, {&f.psi, &cfg.psi}, {&f.tau, &cfg.gauge_tau},
                                  {&f.theta, &cfg.gauge_theta}, {&f.out, &cfg.out}})
            if (*flag) *slot = *flag;
        if (f.fefferman) cfg.fefferman = true;
        if (f.samples) {
            cfg.samples.count = *f.samples;
            cfg.samples.points.clear();
        }
        if (f.seed) {
            cfg.samples.seed = *f.seed;
            cfg.samples.points.clear();
        }
        if (f.tolerance) cfg.tolerance = *f.tolerance;
        if (f.format) cfg.format = *f.format;
        if (cfg.format != "text" && cfg.format != "json" && cfg.format != "latex")
            throw ConfigError("unknown format '" + cfg.format + "'");

        CommandResult res;
        if (curv->parsed())
            res = cmd_curvature(cfg);
        else if (check->parsed())
            res = cmd_check(cfg);
        else
            res = cmd_invariance(cfg);

        std::string body;
        if (cfg.format == "json")
            body = res.report.dump(2) + "\n";
        else if (cfg.format == "latex")
            body = res.latex;
        else
            body = res.text;
        if (cfg.out) {
            std::ofstream o(*cfg.out);
            if (!o) throw ConfigError("cannot write '" + *cfg.out + "'");
            o << body;
        } else {
            out << body;
        }
        return res.exit_code;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const sym::ParseError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const sym::MissingWordError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
    }
    return 2;
}

}  // namespace qf
