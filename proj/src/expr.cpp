#include "qf/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace qf::sym {

FieldExpr::FieldExpr(const CRational& c) {
    Node n;
    n.kind = Kind::Number;
    n.value = c;
    node_ = std::make_shared<const Node>(std::move(n));
}

FieldExpr FieldExpr::symbol(const std::string& name) {
    Node n;
    n.kind = Kind::Symbol;
    n.name = name;
    return make(std::move(n));
}

FieldExpr FieldExpr::wrap(const NormalForm& nf) {
    Node n;
    n.kind = Kind::Normal;
    n.nf = nf;
    return make(std::move(n));
}

FieldExpr FieldExpr::call(Func f, const FieldExpr& arg) {
    Node n;
    n.kind = Kind::Call;
    n.func = f;
    n.args = {arg};
    return make(std::move(n));
}

FieldExpr FieldExpr::deriv(Letter l, const FieldExpr& arg) {
    Node n;
    n.kind = Kind::Deriv;
    n.letter = l;
    n.args = {arg};
    return make(std::move(n));
}

FieldExpr FieldExpr::conj(const FieldExpr& arg) {
    Node n;
    n.kind = Kind::Conj;
    n.args = {arg};
    return make(std::move(n));
}

FieldExpr FieldExpr::power(const FieldExpr& base, const Rational& q) {
    Node n;
    n.kind = Kind::Pow;
    n.exponent = q;
    n.args = {base};
    return make(std::move(n));
}

FieldExpr operator+(const FieldExpr& a, const FieldExpr& b) { return FieldExpr::binary(FieldExpr::Kind::Add, a, b); }
FieldExpr operator*(const FieldExpr& a, const FieldExpr& b) { return FieldExpr::binary(FieldExpr::Kind::Mul, a, b); }
FieldExpr operator/(const FieldExpr& a, const FieldExpr& b) { return FieldExpr::binary(FieldExpr::Kind::Div, a, b); }
FieldExpr operator-(const FieldExpr& a, const FieldExpr& b) { return a + (-b); }

FieldExpr FieldExpr::operator-() const {
    Node n;
    n.kind = Kind::Neg;
    n.args = {*this};
    return make(std::move(n));
}

std::vector<std::string> FieldExpr::symbols() const {
    std::set<std::string> out;
    std::vector<const FieldExpr*> stack{this};
    while (!stack.empty()) {
        const FieldExpr* e = stack.back();
        stack.pop_back();
        if (e->kind() == Kind::Symbol) out.insert(e->name());
        for (const auto& a : e->args()) stack.push_back(&a);
    }
    return {out.begin(), out.end()};
}

namespace {

const char* func_name(Func f) {
    switch (f) {
        case Func::Exp: return "exp";
        case Func::Sin: return "sin";
        case Func::Cos: return "cos";
        case Func::Log: return "log";
        case Func::Re: return "re";
        case Func::Im: return "im";
    }
    return "?";
}

std::string number_str(const CRational& c) {
    if (c.im.is_zero()) return c.re.is_integer() ? c.re.str() : "(" + c.re.str() + ")";
    if (c.re.is_zero()) return c.im.is_one() ? "I" : "(" + c.im.str() + "*I)";
    return "(" + c.re.str() + "+" + c.im.str() + "*I)";
}

}  // namespace

std::string FieldExpr::str() const {
    switch (kind()) {
        case Kind::Number: return number_str(value());
        case Kind::Symbol: return name();
        case Kind::Add: return "(" + args()[0].str() + " + " + args()[1].str() + ")";
        case Kind::Mul: return args()[0].str() + "*" + args()[1].str();
        case Kind::Div: return args()[0].str() + "/(" + args()[1].str() + ")";
        case Kind::Neg: return "-(" + args()[0].str() + ")";
        case Kind::Pow: return "(" + args()[0].str() + ")^(" + exponent().str() + ")";
        case Kind::Call: return std::string(func_name(func())) + "(" + args()[0].str() + ")";
        case Kind::Deriv: {
            static const char* names[] = {"D1", "D2", "D0", "Dr"};
            return std::string(names[static_cast<int>(letter())]) + "(" + args()[0].str() + ")";
        }
        case Kind::Conj: return "conj(" + args()[0].str() + ")";
        case Kind::Normal: return "(" + normal().str() + ")";
    }
    return "?";
}

FieldExpr FieldExpr::binary(Kind k, const FieldExpr& a, const FieldExpr& b) {
    Node n;
    n.kind = k;
    n.args = {a, b};
    return make(std::move(n));
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    FieldExpr parse() {
        FieldExpr e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("parse error at column " + std::to_string(pos_ + 1) + ": " + msg + " in \"" + s_ + "\"");
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    FieldExpr expr() {
        FieldExpr e = term();
        for (;;) {
            if (accept('+'))
                e = e + term();
            else if (accept('-'))
                e = e - term();
            else
                return e;
        }
    }

    FieldExpr term() {
        FieldExpr e = unary();
        for (;;) {
            if (accept('*'))
                e = e * unary();
            else if (accept('/'))
                e = e / unary();
            else
                return e;
        }
    }

    FieldExpr unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    FieldExpr power() {
        FieldExpr base = primary();
        if (accept('^')) {
            const std::size_t at = pos_;
            const FieldExpr ex = unary();
            const NormalForm q = normalize(ex);
            const auto k = q.as_constant();
            if (!k || !k->is_real()) {
                pos_ = at;
                fail("exponent must be a rational constant");
            }
            return FieldExpr::power(base, k->re);
        }
        return base;
    }

    FieldExpr number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        Rational v = parse_rational(s_.substr(start, pos_ - start));
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            bool neg = false;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) neg = s_[p++] == '-';
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                int ex = 0;
                while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ex = ex * 10 + (s_[p++] - '0');
                if (ex > 18) fail("exponent too large");
                std::int64_t ten = 1;
                for (int i = 0; i < ex; ++i) ten *= 10;
                v = neg ? v / Rational(ten) : v * Rational(ten);
                pos_ = p;
            }
        }
        return FieldExpr(CRational(v));
    }

    FieldExpr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char ch = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return number();
        if (accept('(')) {
            FieldExpr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string id = s_.substr(start, pos_ - start);
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') return call(id);
            if (id == "I") return FieldExpr::imag_unit();
            return FieldExpr::symbol(id);
        }
        fail("unexpected '" + std::string(1, ch) + "'");
    }

    FieldExpr call(const std::string& id) {
        expect('(');
        FieldExpr arg = expr();
        expect(')');
        static const std::map<std::string, Func> funcs = {{"exp", Func::Exp}, {"sin", Func::Sin}, {"cos", Func::Cos},
                                                          {"log", Func::Log}, {"re", Func::Re},   {"im", Func::Im}};
        static const std::map<std::string, Letter> ops = {
            {"D1", Letter::D1}, {"D2", Letter::D2}, {"D0", Letter::D0}, {"Dr", Letter::Dr}};
        if (auto it = funcs.find(id); it != funcs.end()) return FieldExpr::call(it->second, arg);
        if (auto it = ops.find(id); it != ops.end()) return FieldExpr::deriv(it->second, arg);
        if (id == "conj") return FieldExpr::conj(arg);
        if (id == "sqrt") return FieldExpr::power(arg, Rational(1, 2));
        fail("unknown function '" + id + "'");
    }

    std::string s_;
    std::size_t pos_ = 0;
};

}  // namespace

FieldExpr FieldExpr::parse(const std::string& text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------

FieldExpr differentiate(const FieldExpr& e, Letter l) { return FieldExpr::deriv(l, e); }

FieldExpr conjugate(const FieldExpr& e) {
    using K = FieldExpr::Kind;
    switch (e.kind()) {
        case K::Number: return FieldExpr(e.value().conj());
        case K::Symbol: {
            Registry& reg = Registry::instance();
            return FieldExpr::symbol(reg.atom(reg.atom(reg.get_or_declare(e.name())).conjugate).name);
        }
        case K::Add: return conjugate(e.args()[0]) + conjugate(e.args()[1]);
        case K::Mul: return conjugate(e.args()[0]) * conjugate(e.args()[1]);
        case K::Div: return conjugate(e.args()[0]) / conjugate(e.args()[1]);
        case K::Neg: return -conjugate(e.args()[0]);
        case K::Pow: return FieldExpr::power(conjugate(e.args()[0]), e.exponent());
        case K::Call:
            if (e.func() == Func::Re || e.func() == Func::Im) return e;
            return FieldExpr::call(e.func(), conjugate(e.args()[0]));
        case K::Deriv: {
            Letter l = e.letter();
            if (l == Letter::D1)
                l = Letter::D2;
            else if (l == Letter::D2)
                l = Letter::D1;
            return FieldExpr::deriv(l, conjugate(e.args()[0]));
        }
        case K::Conj: return e.args()[0];
        case K::Normal: return FieldExpr::wrap(sym::conjugate(e.normal()));
    }
    return e;
}

NormalForm normalize(const FieldExpr& e) {
    using K = FieldExpr::Kind;
    switch (e.kind()) {
        case K::Number: return NormalForm(e.value());
        case K::Symbol: return NormalForm::atom(e.name());
        case K::Add: return normalize(e.args()[0]) + normalize(e.args()[1]);
        case K::Mul: return normalize(e.args()[0]) * normalize(e.args()[1]);
        case K::Div: return normalize(e.args()[0]) * inverse(normalize(e.args()[1]));
        case K::Neg: return -normalize(e.args()[0]);
        case K::Pow: return pow(normalize(e.args()[0]), e.exponent());
        case K::Call: {
            const NormalForm a = normalize(e.args()[0]);
            switch (e.func()) {
                case Func::Exp: return exp(a);
                case Func::Sin: return sin(a);
                case Func::Cos: return cos(a);
                case Func::Log: return log(a);
                case Func::Re: return real_part(a);
                case Func::Im: return imag_part(a);
            }
            break;
        }
        case K::Deriv: return derivative(normalize(e.args()[0]), e.letter());
        case K::Conj: return sym::conjugate(normalize(e.args()[0]));
        case K::Normal: return e.normal();
    }
    return {};
}

NormalForm normalize(const FieldExpr& e, const Substitution& s) { return substitute(normalize(e), s); }

// ---------------------------------------------------------------------------
// Samples and evaluation

std::string word_name(AtomId a, Word w) {
    return factor_str(Registry::instance().intern(Factor{FactorKind::AtomWord, a, w, nullptr}));
}

cplx PointSample::get(AtomId a, Word w) const {
    if (auto it = values_.find({a, w}); it != values_.end()) return it->second;
    const AtomInfo& info = Registry::instance().atom(a);
    if (info.fiber_coordinate && w.empty()) return r;
    if (fallback) return fallback(a, w);
    throw MissingWordError("no value for " + word_name(a, w));
}

namespace {

cplx ipow(cplx z, std::int64_t n) {
    if (n < 0) return 1.0 / ipow(z, -n);
    cplx out = 1.0;
    while (n > 0) {
        if (n & 1) out *= z;
        z *= z;
        n >>= 1;
    }
    return out;
}

cplx eval_factor(FactorId id, const PointSample& p, std::unordered_map<FactorId, cplx>& memo);

cplx eval_nf(const NormalForm& e, const PointSample& p, std::unordered_map<FactorId, cplx>& memo) {
    cplx sum = 0.0;
    for (const Term& t : e.terms()) {
        cplx m = t.coef.to_complex();
        for (const auto& [id, q] : t.mono.factors) {
            const cplx v = eval_factor(id, p, memo);
            m *= q.is_integer() ? ipow(v, q.num()) : std::pow(v, q.to_double());
        }
        sum += m;
    }
    return sum;
}

cplx eval_factor(FactorId id, const PointSample& p, std::unordered_map<FactorId, cplx>& memo) {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    const Factor& f = Registry::instance().factor(id);
    cplx v;
    switch (f.kind) {
        case FactorKind::AtomWord: v = p.get(f.atom, f.word); break;
        case FactorKind::Exp: v = std::exp(eval_nf(*f.arg, p, memo)); break;
        case FactorKind::Sin: v = std::sin(eval_nf(*f.arg, p, memo)); break;
        case FactorKind::Cos: v = std::cos(eval_nf(*f.arg, p, memo)); break;
        case FactorKind::Log: v = std::log(eval_nf(*f.arg, p, memo)); break;
        case FactorKind::Pow: v = eval_nf(*f.arg, p, memo); break;
    }
    memo.emplace(id, v);
    return v;
}

void collect_words(const NormalForm& e, std::set<std::pair<AtomId, Word>>& out) {
    for (const Term& t : e.terms())
        for (const auto& [id, q] : t.mono.factors) {
            const Factor& f = Registry::instance().factor(id);
            if (f.kind == FactorKind::AtomWord)
                out.insert({f.atom, f.word});
            else
                collect_words(*f.arg, out);
        }
}

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double sixteenth(std::uint64_t h) { return static_cast<double>(static_cast<int>(h % 33) - 16) / 16.0; }

}  // namespace

cplx evaluate(const NormalForm& e, const PointSample& p) {
    std::unordered_map<FactorId, cplx> memo;
    return eval_nf(e, p, memo);
}

cplx evaluate(const FieldExpr& e, const PointSample& p) { return evaluate(normalize(e), p); }

std::vector<std::pair<AtomId, Word>> required_words(const NormalForm& e) {
    std::set<std::pair<AtomId, Word>> out;
    collect_words(e, out);
    return {out.begin(), out.end()};
}

PointSample free_sample(std::uint64_t seed) {
    PointSample p;
    p.r = sixteenth(splitmix(seed ^ 0xabcdefULL)) * 2.5;
    for (int i = 0; i < 3; ++i) p.base[static_cast<std::size_t>(i)] = sixteenth(splitmix(seed + 17 * (i + 1)));
    p.fallback = [seed](AtomId a, Word w) -> cplx {
        const AtomInfo& info = Registry::instance().atom(a);
        std::uint64_t h = splitmix(seed);
        h = splitmix(h ^ std::hash<std::string>{}(info.name));
        for (auto n : w.n) h = splitmix(h ^ n);
        const double re = sixteenth(h);
        const double im = sixteenth(splitmix(h));
        const bool real = info.reality == Reality::Real && w.count(Letter::D1) == 0 && w.count(Letter::D2) == 0;
        return real ? cplx(re, 0.0) : cplx(re, im);
    };
    return p;
}

// ---------------------------------------------------------------------------

bool equals(const NormalForm& a, const NormalForm& b, const EqualityPolicy& policy, const Sampler& sampler) {
    using M = EqualityPolicy::Mode;
    if (policy.mode != M::Randomized && a == b) return true;
    if (policy.mode == M::Structural) return false;
    const NormalForm diff = a - b;
    for (int i = 0; i < policy.samples; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        cplx v;
        if (sampler) {
            const PointSample p = sampler(idx);
            try {
                v = evaluate(diff, p);
            } catch (const MissingWordError& err) {
                throw ConfigError(std::string("sampler is incomplete: ") + err.what());
            }
        } else {
            v = evaluate(diff, free_sample(policy.seed + 0x1000 * idx));
        }
        if (!(std::abs(v) <= policy.tol)) return false;
    }
    return true;
}

bool equals(const FieldExpr& a, const FieldExpr& b, const EqualityPolicy& policy, const Sampler& sampler) {
    return equals(normalize(a), normalize(b), policy, sampler);
}

}  // namespace qf::sym
