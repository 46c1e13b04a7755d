#include "qf/cr_structure.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace qf {

using sym::FieldExpr;
using sym::Letter;
using sym::NormalForm;

namespace {

using Mat3 = std::array<std::array<Jet, 3>, 3>;

const cplx I(0.0, 1.0);

Mat3 inverse(const Mat3& m) {
    auto cof = [&](int r, int c) {
        const int r1 = (r + 1) % 3, r2 = (r + 2) % 3, c1 = (c + 1) % 3, c2 = (c + 2) % 3;
        return m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
    };
    const Jet det = m[0][0] * cof(0, 0) + m[0][1] * cof(0, 1) + m[0][2] * cof(0, 2);
    if (std::abs(det.value()) < 1e-14) throw std::domain_error("singular coframe matrix");
    const Jet inv_det = pow(det, -1.0);
    Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out[c][r] = cof(r, c) * inv_det;
    return out;
}

// dw(X, Y) for a coordinate 1-form w and coordinate vectors X, Y.
Jet two_form(const std::array<Jet, 3>& w, const std::array<Jet, 3>& x, const std::array<Jet, 3>& y) {
    Jet out;
    bool first = true;
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
            if (j == k) continue;
            const Jet term = w[k].d(j) * (x[j] * y[k] - x[k] * y[j]);
            out = first ? term : out + term;
            first = false;
        }
    return out;
}

// Lie bracket of coordinate vector fields.
std::array<Jet, 3> bracket(const std::array<Jet, 3>& x, const std::array<Jet, 3>& y) {
    std::array<Jet, 3> out;
    for (int k = 0; k < 3; ++k) {
        Jet s = x[0] * y[k].d(0) - y[0] * x[k].d(0);
        for (int j = 1; j < 3; ++j) s = s + x[j] * y[k].d(j) - y[j] * x[k].d(j);
        out[k] = s;
    }
    return out;
}

Jet pair(const std::array<Jet, 3>& w, const std::array<Jet, 3>& v) { return w[0] * v[0] + w[1] * v[1] + w[2] * v[2]; }

Jet ipow(const Jet& j, std::int64_t n) {
    if (n < 0) return ipow(pow(j, -1.0), -n);
    Jet out(1.0, j.storage_order());
    out = out.truncated(j.order());
    Jet base = j;
    while (n > 0) {
        if (n & 1) out = out * base;
        n >>= 1;
        if (n) base = base * base;
    }
    return out;
}

// Evaluates a coordinate expression with no frame operators available.
Jet eval_plain(const FieldExpr& e, const std::array<std::string, 3>& coords, const Point3& p, int order) {
    FrameJets none;
    const Jet zero(0.0, order);
    for (auto& row : none.frame) row = {zero, zero, zero};
    for (auto& row : none.coframe) row = {zero, zero, zero};
    none.c = none.alpha = none.beta = zero;
    none.order = order;
    JetContext ctx(nullptr, none, {p[0], p[1], p[2], 0.0}, coords);
    return ctx.eval(e);
}

}  // namespace

FrameJets frame_from_coframe(const Mat3& coframe) {
    FrameJets out;
    out.coframe = coframe;
    const Mat3 inv = inverse(coframe);
    for (int l = 0; l < 3; ++l)
        for (int j = 0; j < 3; ++j) out.frame[l][j] = inv[j][l];
    out.c = two_form(coframe[2], out.frame[0], out.frame[2]);
    out.alpha = two_form(coframe[0], out.frame[0], out.frame[2]);
    out.beta = two_form(coframe[0], out.frame[1], out.frame[2]);
    out.order = out.c.order();
    return out;
}

// ---------------------------------------------------------------------------

CoframeStructure::CoframeStructure(std::string name, std::array<FieldExpr, 3> mu, std::array<FieldExpr, 3> lambda,
                                   std::array<std::string, 3> coords)
    : name_(std::move(name)), mu_(std::move(mu)), lambda_(std::move(lambda)), coords_(std::move(coords)) {}

std::array<std::array<Jet, 3>, 2> CoframeStructure::coframe_jets(const Point3& p, int order) const {
    std::array<std::array<Jet, 3>, 2> out;
    for (int j = 0; j < 3; ++j) {
        out[0][j] = eval_plain(mu_[j], coords_, p, order);
        out[1][j] = eval_plain(lambda_[j], coords_, p, order);
    }
    return out;
}

FrameJets CoframeStructure::jets(const Point3& p, int order) const {
    const auto cf = coframe_jets(p, order + 1);
    Mat3 m;
    for (int j = 0; j < 3; ++j) {
        m[0][j] = cf[0][j];
        m[1][j] = cf[0][j].conj();
        m[2][j] = cf[1][j];
    }
    return frame_from_coframe(m);
}

FrameStructure::FrameStructure(std::string name, std::array<FieldExpr, 3> d1)
    : name_(std::move(name)), d1_(std::move(d1)) {}

FrameJets FrameStructure::jets(const Point3& p, int order) const {
    const std::array<std::string, 3> coords{"x1", "x2", "x3"};
    std::array<Jet, 3> d1, d2;
    for (int j = 0; j < 3; ++j) {
        d1[j] = eval_plain(d1_[j], coords, p, order + 2);
        d2[j] = d1[j].conj();
    }
    std::array<Jet, 3> d0 = bracket(d1, d2);
    for (auto& x : d0) x = I * x;
    FrameJets out;
    for (int j = 0; j < 3; ++j) {
        out.frame[0][j] = d1[j].truncated(order + 1);
        out.frame[1][j] = d2[j].truncated(order + 1);
        out.frame[2][j] = d0[j];
    }
    Mat3 cols;
    for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) cols[j][l] = out.frame[l][j];
    out.coframe = inverse(cols);
    const auto b10 = bracket(out.frame[0], out.frame[2]);
    const auto b20 = bracket(out.frame[1], out.frame[2]);
    out.c = -pair(out.coframe[2], b10);
    out.alpha = -pair(out.coframe[0], b10);
    out.beta = -pair(out.coframe[0], b20);
    out.order = out.c.order();
    return out;
}

GaugedStructure::GaugedStructure(StructurePtr base, FieldExpr tau, FieldExpr theta)
    : base_(std::move(base)), tau_(std::move(tau)), theta_(std::move(theta)) {}

std::string GaugedStructure::name() const {
    return base_->name() + "-gauged(tau=" + tau_.str() + ",theta=" + theta_.str() + ")";
}

FrameJets GaugedStructure::jets(const Point3& p, int order) const {
    const FrameJets b = base_->jets(p, order + 1);
    JetContext ctx(base_, b, {p[0], p[1], p[2], 0.0}, base_->coordinates());
    const Jet tau = ctx.eval(tau_).real();
    const Jet theta = ctx.eval(theta_).real();
    const Jet L = tau + I * theta;
    const Jet h = (-I) * ctx.apply(Letter::D2, L);
    const Jet f = exp(L);
    const Jet e2t = exp(2.0 * tau);
    Mat3 m;
    for (int j = 0; j < 3; ++j) {
        m[0][j] = f * (b.coframe[0][j] + h * b.coframe[2][j]);
        m[1][j] = m[0][j].conj();
        m[2][j] = e2t * b.coframe[2][j];
    }
    return frame_from_coframe(m);
}

StructurePtr heisenberg() {
    static const StructurePtr h = std::make_shared<CoframeStructure>(
        "heisenberg", std::array<FieldExpr, 3>{FieldExpr(1), FieldExpr::imag_unit(), FieldExpr(0)},
        std::array<FieldExpr, 3>{FieldExpr::parse("-x2"), FieldExpr::parse("x1"), FieldExpr::parse("1/2")});
    return h;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

StructurePtr builtin_structure(const std::string& spec) {
    const std::string s = trim(spec);
    if (s == "heisenberg") return heisenberg();
    const std::string prefix = "heisenberg-gauged";
    if (s.rfind(prefix, 0) == 0) {
        std::string rest = trim(s.substr(prefix.size()));
        FieldExpr tau(0), theta(0);
        if (!rest.empty()) {
            if (rest.front() != '(' || rest.back() != ')')
                throw sym::ConfigError("malformed structure spec '" + spec + "'");
            rest = rest.substr(1, rest.size() - 2);
            int depth = 0;
            std::size_t start = 0;
            std::vector<std::string> parts;
            for (std::size_t i = 0; i <= rest.size(); ++i) {
                if (i == rest.size() || (rest[i] == ',' && depth == 0)) {
                    parts.push_back(rest.substr(start, i - start));
                    start = i + 1;
                } else if (rest[i] == '(') {
                    ++depth;
                } else if (rest[i] == ')') {
                    --depth;
                }
            }
            for (const auto& part : parts) {
                if (trim(part).empty()) continue;
                const auto eq = part.find('=');
                if (eq == std::string::npos) throw sym::ConfigError("expected key=value in '" + part + "'");
                const std::string key = trim(part.substr(0, eq));
                FieldExpr value;
                try {
                    value = FieldExpr::parse(part.substr(eq + 1));
                } catch (const sym::ParseError& e) {
                    throw sym::ConfigError(e.what());
                }
                if (key == "tau")
                    tau = value;
                else if (key == "theta")
                    theta = value;
                else
                    throw sym::ConfigError("unknown gauge parameter '" + key + "'");
            }
        }
        return std::make_shared<GaugedStructure>(heisenberg(), tau, theta);
    }
    throw sym::ConfigError("unknown structure '" + spec + "'");
}

// ---------------------------------------------------------------------------
// JetContext

JetContext::JetContext(StructurePtr s, const Point4& point, int order)
    : s_(std::move(s)), point_(point), order_(order) {
    if (!s_) throw std::invalid_argument("JetContext needs a structure");
    coords_ = s_->coordinates();
    frame_ = s_->jets({point[0], point[1], point[2]}, order);
}

JetContext::JetContext(StructurePtr s, FrameJets frame, const Point4& point, std::array<std::string, 3> coords)
    : s_(std::move(s)), point_(point), order_(frame.order), coords_(std::move(coords)), frame_(std::move(frame)) {}

void JetContext::bind(const std::string& name, const FieldExpr& e) {
    pending_[name] = e;
    resolved_.erase(name);
    words_.clear();
}

void JetContext::bind(const std::string& name, const Jet& j) {
    pending_.erase(name);
    resolved_[name] = j;
    words_.clear();
}

bool JetContext::bound(const std::string& name) const { return pending_.count(name) || resolved_.count(name); }

Jet JetContext::apply(Letter l, const Jet& j) const {
    if (l == Letter::Dr) return j.d(3);
    const auto& f = frame_.frame[static_cast<int>(l)];
    return f[0] * j.d(0) + f[1] * j.d(1) + f[2] * j.d(2);
}

Jet JetContext::symbol(const std::string& name) {
    if (auto it = resolved_.find(name); it != resolved_.end()) return it->second;
    const int k = frame_.frame[0][0].storage_order();
    const Point3 p{point_[0], point_[1], point_[2]};
    auto var = [&](int v) { return Jet::variable(v, point_[static_cast<std::size_t>(v)], k); };
    for (int j = 0; j < 3; ++j)
        if (name == coords_[j]) return var(j);
    if (name == "r") return var(3);
    if (name == "z") return var(0) + I * var(1);
    if (name == "zb") return var(0) - I * var(1);
    if (name == "u") return var(2);
    (void)p;
    if (auto it = pending_.find(name); it != pending_.end()) {
        if (std::find(resolving_.begin(), resolving_.end(), name) != resolving_.end())
            throw sym::ConfigError("circular definition of '" + name + "'");
        resolving_.push_back(name);
        Jet j;
        try {
            j = eval(it->second);
        } catch (...) {
            resolving_.pop_back();
            throw;
        }
        resolving_.pop_back();
        resolved_[name] = j;
        return j;
    }
    if (name == "c") return frame_.c;
    if (name == "alpha") return frame_.alpha;
    if (name == "beta") return frame_.beta;
    if (name == "c_bar") return frame_.c.conj();
    if (name == "alpha_bar") return frame_.alpha.conj();
    if (name == "beta_bar") return frame_.beta.conj();
    const std::string suffix = "_bar";
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        const std::string base = name.substr(0, name.size() - suffix.size());
        if (bound(base)) return symbol(base).conj();
    }
    if (const auto id = sym::Registry::instance().find(name)) {
        const auto& info = sym::Registry::instance().atom(*id);
        if (info.reality == sym::Reality::Real && info.conjugate == *id && bound(name)) return symbol(name);
    }
    throw sym::ConfigError("unbound symbol '" + name + "'");
}

Jet JetContext::eval(const FieldExpr& e) {
    using K = FieldExpr::Kind;
    const int k = frame_.frame[0][0].storage_order();
    switch (e.kind()) {
        case K::Number: return Jet(e.value().to_complex(), k);
        case K::Symbol: return symbol(e.name());
        case K::Add: return eval(e.args()[0]) + eval(e.args()[1]);
        case K::Mul: return eval(e.args()[0]) * eval(e.args()[1]);
        case K::Div: return eval(e.args()[0]) / eval(e.args()[1]);
        case K::Neg: return -eval(e.args()[0]);
        case K::Pow: {
            const Jet b = eval(e.args()[0]);
            return e.exponent().is_integer() ? ipow(b, e.exponent().num()) : pow(b, e.exponent().to_double());
        }
        case K::Call: {
            const Jet a = eval(e.args()[0]);
            switch (e.func()) {
                case sym::Func::Exp: return exp(a);
                case sym::Func::Sin: return sin(a);
                case sym::Func::Cos: return cos(a);
                case sym::Func::Log: return log(a);
                case sym::Func::Re: return a.real();
                case sym::Func::Im: return a.imag();
            }
            break;
        }
        case K::Deriv: return apply(e.letter(), eval(e.args()[0]));
        case K::Conj: return eval(e.args()[0]).conj();
        case K::Normal: return eval(e.normal());
    }
    throw std::logic_error("bad expression node");
}

namespace {

Jet eval_factor(JetContext& ctx, sym::FactorId id, std::unordered_map<sym::FactorId, Jet>& memo);

Jet eval_nf(JetContext& ctx, const NormalForm& e, std::unordered_map<sym::FactorId, Jet>& memo) {
    const int k = ctx.frame().frame[0][0].storage_order();
    Jet sum(0.0, k);
    for (const sym::Term& t : e.terms()) {
        Jet m(t.coef.to_complex(), k);
        for (const auto& [id, q] : t.mono.factors) {
            const Jet v = eval_factor(ctx, id, memo);
            m = m * (q.is_integer() ? ipow(v, q.num()) : pow(v, q.to_double()));
        }
        sum = sum + m;
    }
    return sum;
}

Jet eval_factor(JetContext& ctx, sym::FactorId id, std::unordered_map<sym::FactorId, Jet>& memo) {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    const sym::Factor& f = sym::Registry::instance().factor(id);
    Jet v;
    switch (f.kind) {
        case sym::FactorKind::AtomWord: v = ctx.word(f.atom, f.word); break;
        case sym::FactorKind::Exp: v = exp(eval_nf(ctx, *f.arg, memo)); break;
        case sym::FactorKind::Sin: v = sin(eval_nf(ctx, *f.arg, memo)); break;
        case sym::FactorKind::Cos: v = cos(eval_nf(ctx, *f.arg, memo)); break;
        case sym::FactorKind::Log: v = log(eval_nf(ctx, *f.arg, memo)); break;
        case sym::FactorKind::Pow: v = eval_nf(ctx, *f.arg, memo); break;
    }
    memo.emplace(id, v);
    return v;
}

}  // namespace

Jet JetContext::eval(const NormalForm& e) {
    std::unordered_map<sym::FactorId, Jet> memo;
    return eval_nf(*this, e, memo);
}

Jet JetContext::word(sym::AtomId a, sym::Word w) {
    if (auto it = words_.find({a, w}); it != words_.end()) return it->second;
    Jet out;
    if (w.empty()) {
        out = symbol(sym::Registry::instance().atom(a).name);
    } else {
        Letter l = Letter::Dr;
        for (Letter x : sym::kLetters)
            if (w.count(x) > 0) {
                l = x;
                break;
            }
        out = apply(l, word(a, w.with(l, -1)));
    }
    if (out.order() < 0) throw std::runtime_error("jet order exhausted evaluating " + sym::word_name(a, w));
    words_.emplace(std::make_pair(a, w), out);
    return out;
}

sym::PointSample JetContext::sample(const std::vector<NormalForm>& exprs) {
    sym::PointSample p;
    p.base = {point_[0], point_[1], point_[2]};
    p.r = point_[3];
    std::set<std::pair<sym::AtomId, sym::Word>> need;
    for (const auto& e : exprs)
        for (const auto& w : sym::required_words(e)) need.insert(w);
    for (const auto& [a, w] : need) {
        if (sym::Registry::instance().atom(a).fiber_coordinate && w.empty()) continue;
        p.set(a, w, word(a, w).value());
    }
    return p;
}

Jet eval_jet(const FieldExpr& e, const StructurePtr& s, const Point4& p, int order) {
    JetContext ctx(s, p, order);
    return ctx.eval(e);
}

// ---------------------------------------------------------------------------

CoframeReport validate_coframe(const CoframeStructure& s, const std::vector<Point3>& pts, double tol) {
    CoframeReport rep;
    auto violate = [&](const std::string& what, const Point3& p) {
        rep.valid = false;
        std::ostringstream os;
        os << what << " at (" << p[0] << ", " << p[1] << ", " << p[2] << ")";
        rep.violations.push_back(os.str());
    };
    for (const auto& p : pts) {
        CoframeResidual res;
        res.point = p;
        const auto cf = s.coframe_jets(p, 1);
        Mat3 m;
        for (int j = 0; j < 3; ++j) {
            m[0][j] = cf[0][j];
            m[1][j] = cf[0][j].conj();
            m[2][j] = cf[1][j];
            res.lambda_imag = std::max(res.lambda_imag, std::abs(cf[1][j].value().imag()));
        }
        if (res.lambda_imag > tol) violate("lambda is not real", p);
        const auto& l = cf[1];
        const Jet w = (l[1].d(0) - l[0].d(1)) * l[2] + (l[2].d(1) - l[1].d(2)) * l[0] + (l[0].d(2) - l[2].d(0)) * l[1];
        res.dlambda_wedge_lambda = w.value().real();
        if (std::abs(res.dlambda_wedge_lambda) <= tol) violate("dlambda^lambda vanishes (not strictly pseudoconvex)", p);
        Mat3 inv;
        try {
            inv = inverse(m);
        } catch (const std::domain_error&) {
            violate("singular coframe matrix", p);
            rep.residuals.push_back(res);
            continue;
        }
        std::array<Jet, 3> d1, d2;
        for (int j = 0; j < 3; ++j) {
            d1[j] = inv[j][0];
            d2[j] = inv[j][1];
        }
        res.dlambda_mumubar = two_form(cf[1], d1, d2).value();
        res.dmu_mumubar = two_form(cf[0], d1, d2).value();
        if (std::abs(res.dlambda_mumubar - I) > tol) {
            std::ostringstream os;
            os << "dlambda mu^mubar coefficient is " << res.dlambda_mumubar.real() << "+" << res.dlambda_mumubar.imag()
               << "i, expected i";
            violate(os.str(), p);
        }
        if (std::abs(res.dmu_mumubar) > tol) violate("dmu has a mu^mubar component", p);
        rep.residuals.push_back(res);
    }
    return rep;
}

sym::PointSample extract_structure_functions(const StructurePtr& s, const Point3& p, int order) {
    JetContext ctx(s, {p[0], p[1], p[2], 0.0}, order);
    sym::PointSample out;
    out.base = p;
    const auto& reg = sym::Registry::instance();
    const sym::AtomId ids[] = {reg.c, reg.c_bar, reg.alpha, reg.alpha_bar, reg.beta, reg.beta_bar};
    for (sym::AtomId a : ids) {
        const auto elim = reg.atom(a).eliminated;
        for (int n1 = 0; n1 <= order; ++n1)
            for (int n2 = 0; n1 + n2 <= order; ++n2)
                for (int n0 = 0; n1 + n2 + n0 <= order; ++n0) {
                    sym::Word w;
                    w.n = {static_cast<std::uint8_t>(n1), static_cast<std::uint8_t>(n2), static_cast<std::uint8_t>(n0), 0};
                    if (elim && w.count(*elim) > 0) continue;
                    out.set(a, w, ctx.word(a, w).value());
                }
    }
    return out;
}

cplx cr_residual(const FieldExpr& f, const StructurePtr& s, const Point3& p) {
    JetContext ctx(s, {p[0], p[1], p[2], 0.0}, 2);
    return ctx.apply(Letter::D2, ctx.eval(f)).value();
}

cplx canonical_section_residual(const FieldExpr& psi, const StructurePtr& s, const Point3& p) {
    JetContext ctx(s, {p[0], p[1], p[2], 0.0}, 2);
    const Jet v = ctx.eval(psi);
    if (std::abs(v.value()) < 1e-300) throw std::domain_error("section psi vanishes at the sample point");
    return ctx.apply(Letter::D2, v).value() / v.value() + std::conj(ctx.frame().c.value());
}

// ---------------------------------------------------------------------------
// Abstract structures

NormalForm AbstractCRStructure::d(const NormalForm& f, Letter l) const {
    if (l == Letter::Dr) return sym::derivative(f, l);
    const auto& row = frame[static_cast<int>(l)];
    NormalForm out;
    for (int m = 0; m < 3; ++m)
        if (!row[m].is_zero()) out += row[m] * sym::derivative(f, sym::kLetters[m]);
    return out;
}

AbstractCRStructure generic_structure(bool mu_exact) {
    AbstractCRStructure s;
    if (mu_exact) {
        const auto& reg = sym::Registry::instance();
        s.substitutions[reg.alpha] = NormalForm();
        s.substitutions[reg.beta] = NormalForm();
        s.alpha = NormalForm();
        s.beta = NormalForm();
    }
    return s;
}

NormalForm gauge_h(const AbstractCRStructure& s, const GaugeTransform& g) {
    const NormalForm L = sym::normalize(g.tau, s.substitutions) +
                         NormalForm::imag_unit() * sym::normalize(g.theta, s.substitutions);
    return sym::substitute(-(NormalForm::imag_unit() * s.d(L, Letter::D2)), s.substitutions);
}

AbstractCRStructure apply_gauge(const AbstractCRStructure& s, const GaugeTransform& g) {
    const NormalForm i = NormalForm::imag_unit();
    const NormalForm tau = sym::normalize(g.tau, s.substitutions);
    const NormalForm theta = sym::normalize(g.theta, s.substitutions);
    const NormalForm L = tau + i * theta;
    const NormalForm Lb = tau - i * theta;
    const NormalForm h = gauge_h(s, g);
    const NormalForm hb = sym::conjugate(h);
    auto sub = [&](const NormalForm& e) { return sym::substitute(e, s.substitutions); };

    AbstractCRStructure out;
    out.substitutions = s.substitutions;
    out.last_h = h;
    out.c = sub(sym::exp(-L) * (s.c - CRational(2) * i * hb + s.d(L, Letter::D1)));
    out.alpha = sub(sym::exp(CRational(-2) * tau) *
                    (s.alpha - s.d(L, Letter::D0) + h * s.d(L, Letter::D1) + s.d(h, Letter::D1) + h * s.c));
    out.beta = sub(sym::exp(CRational(-2) * tau + CRational(2) * i * theta) *
                   (s.beta + s.d(h, Letter::D2) + h * s.d(L, Letter::D2) + h * s.c_bar()));

    // D1' = e^{-L} D1, D2' = e^{-Lb} D2, D0' = e^{-2 tau}(D0 - h D1 - hb D2)
    const std::array<std::array<NormalForm, 3>, 3> g_frame{{{sym::exp(-L), 0, 0},
                                                           {0, sym::exp(-Lb), 0},
                                                           {-(sym::exp(CRational(-2) * tau) * h),
                                                            -(sym::exp(CRational(-2) * tau) * hb),
                                                            sym::exp(CRational(-2) * tau)}}};
    // mu' = f(mu + h lambda), mubar' = fb(mubar + hb lambda), lambda' = e^{2 tau} lambda
    const std::array<std::array<NormalForm, 3>, 3> g_coframe{{{sym::exp(L), 0, sym::exp(L) * h},
                                                             {0, sym::exp(Lb), sym::exp(Lb) * hb},
                                                             {0, 0, sym::exp(CRational(2) * tau)}}};
    for (int a = 0; a < 3; ++a)
        for (int m = 0; m < 3; ++m) {
            NormalForm fr, co;
            for (int b = 0; b < 3; ++b) {
                fr += g_frame[a][b] * s.frame[b][m];
                co += g_coframe[a][b] * s.coframe[b][m];
            }
            out.frame[a][m] = sub(fr);
            out.coframe[a][m] = sub(co);
        }
    return out;
}

std::array<NormalForm, 3> structure_functions_from_frame(const AbstractCRStructure& s) {
    using namespace sym::atoms;
    const NormalForm i = NormalForm::imag_unit();
    // table[m][n] = coefficients of [D_m, D_n] on (D1, D2, D0)
    std::array<std::array<std::array<NormalForm, 3>, 3>, 3> table{};
    table[0][1] = {0, 0, -i};
    table[0][2] = {-alpha(), -beta_bar(), -c()};
    table[1][2] = {-beta(), -alpha_bar(), -c_bar()};
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < m; ++n)
            for (int k = 0; k < 3; ++k) table[m][n][k] = -table[n][m][k];
    auto br = [&](const std::array<NormalForm, 3>& x, const std::array<NormalForm, 3>& y) {
        std::array<NormalForm, 3> out;
        for (int n = 0; n < 3; ++n)
            for (int m = 0; m < 3; ++m) {
                out[n] += x[m] * sym::derivative(y[n], sym::kLetters[m]) - y[m] * sym::derivative(x[n], sym::kLetters[m]);
                for (int k = 0; k < 3; ++k) out[k] += x[m] * y[n] * table[m][n][k];
            }
        return out;
    };
    auto pair = [&](const std::array<NormalForm, 3>& w, const std::array<NormalForm, 3>& v) {
        return w[0] * v[0] + w[1] * v[1] + w[2] * v[2];
    };
    const auto b10 = br(s.frame[0], s.frame[2]);
    const auto b20 = br(s.frame[1], s.frame[2]);
    auto sub = [&](const NormalForm& e) { return sym::substitute(e, s.substitutions); };
    return {sub(-pair(s.coframe[2], b10)), sub(-pair(s.coframe[0], b10)), sub(-pair(s.coframe[0], b20))};
}

}  // namespace qf
