#include "qf/symbolic.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <functional>
#include <cassert>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>

namespace qf::sym {

namespace {

constexpr std::size_t kChunkBits = 12;
constexpr std::size_t kChunkSize = std::size_t{1} << kChunkBits;
constexpr std::size_t kMaxChunks = 4096;

std::size_t mix(std::size_t h, std::size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

struct FactorKey {
    FactorKind kind;
    AtomId atom;
    Word word;
    const NormalForm* arg;  // non-owning view for lookups
    std::size_t h;
};

std::size_t factor_hash(const Factor& f) {
    std::size_t h = static_cast<std::size_t>(f.kind);
    if (f.kind == FactorKind::AtomWord) {
        h = mix(h, f.atom);
        for (auto n : f.word.n) h = mix(h, n);
    } else {
        h = mix(h, f.arg->hash());
    }
    return h;
}

bool factor_equal(const Factor& a, const Factor& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == FactorKind::AtomWord) return a.atom == b.atom && a.word == b.word;
    return *a.arg == *b.arg;
}

}  // namespace

std::string Word::str() const {
    static const char* names[] = {"D1", "D2", "D0", "Dr"};
    std::string out;
    for (int l = 0; l < 4; ++l)
        for (int k = 0; k < n[l]; ++k) out += names[l];
    return out.empty() ? "id" : out;
}

// ---------------------------------------------------------------------------
// Registry

struct Registry::Impl {
    mutable std::shared_mutex atom_mutex;
    std::deque<AtomInfo> atoms;
    std::unordered_map<std::string, AtomId> atom_index;

    std::mutex factor_mutex;
    std::array<std::atomic<Factor*>, kMaxChunks> chunks{};
    std::atomic<std::size_t> factor_count{0};
    std::unordered_multimap<std::size_t, FactorId> factor_index;

    ~Impl() {
        for (auto& c : chunks) delete[] c.load();
    }
};

Registry& Registry::instance() {
    static Registry reg;
    return reg;
}

Registry::Registry() : impl_(std::make_unique<Impl>()) {
    r = declare("r", Reality::Real, true);
    impl_->atoms[r].fiber_coordinate = true;
    c = declare("c", Reality::Complex, false);
    alpha = declare("alpha", Reality::Complex, false);
    beta = declare("beta", Reality::Complex, false);
    c_bar = impl_->atoms[c].conjugate;
    alpha_bar = impl_->atoms[alpha].conjugate;
    beta_bar = impl_->atoms[beta].conjugate;
    impl_->atoms[beta].eliminated = Letter::D1;
    impl_->atoms[beta_bar].eliminated = Letter::D2;
    impl_->atoms[c_bar].eliminated = Letter::D1;

    for (const char* n : {"P", "H"}) declare(n, Reality::Real, true);
    for (const char* n : {"a", "s", "tau", "theta"}) declare(n, Reality::Real, false);
    for (const char* n : {"x", "psi", "t"}) declare(n, Reality::Complex, false);
}

AtomId Registry::declare(const std::string& name, Reality reality, bool r_dependent) {
    std::unique_lock lock(impl_->atom_mutex);
    if (auto it = impl_->atom_index.find(name); it != impl_->atom_index.end()) {
        const AtomInfo& info = impl_->atoms[it->second];
        if (info.reality != reality || info.r_dependent != r_dependent)
            throw std::invalid_argument("atom '" + name + "' redeclared with different properties");
        return it->second;
    }
    const auto id = static_cast<AtomId>(impl_->atoms.size());
    AtomInfo info;
    info.name = name;
    info.reality = reality;
    info.r_dependent = r_dependent;
    info.conjugate = id;
    impl_->atoms.push_back(info);
    impl_->atom_index.emplace(name, id);
    if (reality == Reality::Complex) {
        const auto bar = static_cast<AtomId>(impl_->atoms.size());
        AtomInfo binfo = info;
        binfo.name = name + "_bar";
        binfo.conjugate = id;
        impl_->atoms[id].conjugate = bar;
        impl_->atoms.push_back(binfo);
        impl_->atom_index.emplace(binfo.name, bar);
    }
    return id;
}

AtomId Registry::declare_constant(const std::string& name, Reality reality) {
    if (auto id = find(name)) {
        if (!atom(*id).constant) throw std::invalid_argument("atom '" + name + "' already declared as a field");
        return *id;
    }
    const AtomId id = declare(name, reality, false);
    std::unique_lock lock(impl_->atom_mutex);
    impl_->atoms[id].constant = true;
    impl_->atoms[impl_->atoms[id].conjugate].constant = true;
    return id;
}

std::optional<AtomId> Registry::find(const std::string& name) const {
    std::shared_lock lock(impl_->atom_mutex);
    if (auto it = impl_->atom_index.find(name); it != impl_->atom_index.end()) return it->second;
    return std::nullopt;
}

AtomId Registry::get_or_declare(const std::string& name) {
    if (auto id = find(name)) return *id;
    if (name.size() > 4 && name.substr(name.size() - 4) == "_bar") {
        const AtomId base = declare(name.substr(0, name.size() - 4), Reality::Complex, true);
        return atom(base).conjugate;
    }
    return declare(name, Reality::Complex, true);
}

const AtomInfo& Registry::atom(AtomId id) const {
    std::shared_lock lock(impl_->atom_mutex);
    return impl_->atoms.at(id);
}

FactorId Registry::intern(const Factor& f) {
    const std::size_t h = factor_hash(f);
    std::lock_guard lock(impl_->factor_mutex);
    auto [lo, hi] = impl_->factor_index.equal_range(h);
    for (auto it = lo; it != hi; ++it)
        if (factor_equal(factor(it->second), f)) return it->second;
    const std::size_t id = impl_->factor_count.load(std::memory_order_relaxed);
    const std::size_t chunk = id >> kChunkBits;
    if (chunk >= kMaxChunks) throw std::length_error("factor table exhausted");
    if (impl_->chunks[chunk].load() == nullptr) impl_->chunks[chunk].store(new Factor[kChunkSize]);
    impl_->chunks[chunk].load()[id & (kChunkSize - 1)] = f;
    impl_->factor_index.emplace(h, static_cast<FactorId>(id));
    impl_->factor_count.store(id + 1, std::memory_order_release);
    return static_cast<FactorId>(id);
}

const Factor& Registry::factor(FactorId id) const {
    assert(id < impl_->factor_count.load(std::memory_order_acquire));
    return impl_->chunks[id >> kChunkBits].load(std::memory_order_acquire)[id & (kChunkSize - 1)];
}

std::size_t Registry::factor_count() const { return impl_->factor_count.load(); }

namespace atoms {
NormalForm r() { return NormalForm::atom(Registry::instance().r); }
NormalForm c() { return NormalForm::atom(Registry::instance().c); }
NormalForm c_bar() { return NormalForm::atom(Registry::instance().c_bar); }
NormalForm alpha() { return NormalForm::atom(Registry::instance().alpha); }
NormalForm alpha_bar() { return NormalForm::atom(Registry::instance().alpha_bar); }
NormalForm beta() { return NormalForm::atom(Registry::instance().beta); }
NormalForm beta_bar() { return NormalForm::atom(Registry::instance().beta_bar); }
}  // namespace atoms

// ---------------------------------------------------------------------------
// Monomials

bool operator<(const Monomial& a, const Monomial& b) {
    const std::size_t n = std::min(a.factors.size(), b.factors.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a.factors[i].first != b.factors[i].first) return a.factors[i].first < b.factors[i].first;
        if (a.factors[i].second != b.factors[i].second) return a.factors[i].second < b.factors[i].second;
    }
    return a.factors.size() < b.factors.size();
}

std::size_t Monomial::hash() const {
    std::size_t h = factors.size();
    for (const auto& [id, q] : factors) h = mix(mix(h, id), q.hash());
    return h;
}

namespace {

bool is_exp(FactorId id) { return Registry::instance().factor(id).kind == FactorKind::Exp; }

FactorId intern_exp(const NormalForm& arg) {
    Factor f;
    f.kind = FactorKind::Exp;
    f.arg = std::make_shared<const NormalForm>(arg);
    return Registry::instance().intern(f);
}

// Folds all exp factors of a monomial into a single exp(sum) with exponent 1.
void fold_exponentials(Monomial& m) {
    int count = 0;
    bool non_unit = false;
    for (const auto& [id, q] : m.factors)
        if (is_exp(id)) {
            ++count;
            if (!q.is_one()) non_unit = true;
        }
    if (count == 0 || (count == 1 && !non_unit)) return;
    NormalForm sum;
    std::vector<std::pair<FactorId, Rational>> rest;
    for (const auto& [id, q] : m.factors) {
        if (is_exp(id))
            sum += CRational(q) * *Registry::instance().factor(id).arg;
        else
            rest.emplace_back(id, q);
    }
    if (!sum.is_zero()) {
        const FactorId e = intern_exp(sum);
        auto pos = std::lower_bound(rest.begin(), rest.end(), e,
                                    [](const auto& p, FactorId v) { return p.first < v; });
        rest.insert(pos, {e, Rational(1)});
    }
    m.factors = std::move(rest);
}

Monomial multiply(const Monomial& a, const Monomial& b) {
    Monomial out;
    out.factors.reserve(a.factors.size() + b.factors.size());
    std::size_t i = 0, j = 0;
    bool has_exp_clash = false;
    while (i < a.factors.size() || j < b.factors.size()) {
        if (j == b.factors.size() || (i < a.factors.size() && a.factors[i].first < b.factors[j].first)) {
            out.factors.push_back(a.factors[i++]);
        } else if (i == a.factors.size() || b.factors[j].first < a.factors[i].first) {
            out.factors.push_back(b.factors[j++]);
        } else {
            Rational q = a.factors[i].second + b.factors[j].second;
            if (!q.is_zero()) out.factors.emplace_back(a.factors[i].first, q);
            ++i;
            ++j;
        }
    }
    int exps = 0;
    for (const auto& [id, q] : out.factors)
        if (is_exp(id)) {
            ++exps;
            if (!q.is_one()) has_exp_clash = true;
        }
    if (exps > 1 || has_exp_clash) fold_exponentials(out);
    return out;
}

CRational rational_power(const CRational& k, std::int64_t n) {
    CRational base = n < 0 ? CRational(1) / k : k;
    std::int64_t e = n < 0 ? -n : n;
    CRational out(1);
    while (e > 0) {
        if (e & 1) out = out * base;
        base = base * base;
        e >>= 1;
    }
    return out;
}

FactorId intern_pow(const NormalForm& base) {
    Factor f;
    f.kind = FactorKind::Pow;
    f.arg = std::make_shared<const NormalForm>(base);
    return Registry::instance().intern(f);
}

}  // namespace

// ---------------------------------------------------------------------------
// NormalForm basics

NormalForm::NormalForm(const CRational& c) {
    if (!c.is_zero()) terms_.push_back(Term{Monomial{}, c});
}

namespace {

// c^q with constant c keeps only the fractional part of q (in (0, 1)) symbolic.
void fold_constant_powers(Term& t) {
    for (std::size_t i = 0; i < t.mono.factors.size(); ++i) {
        auto& [id, q] = t.mono.factors[i];
        if (!q.is_integer() && q.num() > 0 && q.num() < q.den()) continue;
        const Factor& f = Registry::instance().factor(id);
        if (f.kind != FactorKind::Pow) continue;
        const auto c = f.arg->as_constant();
        if (!c) continue;
        std::int64_t n = q.num() / q.den();
        if (q.num() < 0 && q.num() % q.den() != 0) --n;
        t.coef = t.coef * rational_power(*c, n);
        q = q - Rational(n);
        if (q.is_zero()) {
            t.mono.factors.erase(t.mono.factors.begin() + static_cast<long>(i));
            --i;
        }
    }
}

}  // namespace

NormalForm NormalForm::from_terms(std::vector<Term> terms) {
    for (auto& t : terms)
        if (!t.mono.empty()) fold_constant_powers(t);
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.mono < b.mono; });
    NormalForm out;
    out.terms_.reserve(terms.size());
    for (auto& t : terms) {
        if (!out.terms_.empty() && out.terms_.back().mono == t.mono) {
            out.terms_.back().coef += t.coef;
        } else {
            if (!out.terms_.empty() && out.terms_.back().coef.is_zero()) out.terms_.pop_back();
            out.terms_.push_back(std::move(t));
        }
    }
    if (!out.terms_.empty() && out.terms_.back().coef.is_zero()) out.terms_.pop_back();
    return out;
}

NormalForm NormalForm::factor_power(FactorId f, const Rational& q) {
    if (q.is_zero()) return NormalForm(1);
    Monomial m;
    m.factors.emplace_back(f, q);
    fold_exponentials(m);
    return from_terms({Term{std::move(m), CRational(1)}});
}

NormalForm NormalForm::atom(const std::string& name) { return atom(Registry::instance().get_or_declare(name)); }

std::optional<CRational> NormalForm::as_constant() const {
    if (terms_.empty()) return CRational(0);
    if (terms_.size() == 1 && terms_[0].mono.empty()) return terms_[0].coef;
    return std::nullopt;
}

std::size_t NormalForm::hash() const {
    std::size_t h = terms_.size();
    for (const auto& t : terms_) h = mix(mix(h, t.mono.hash()), t.coef.hash());
    return h;
}

NormalForm operator+(const NormalForm& a, const NormalForm& b) {
    NormalForm out;
    out.terms_.reserve(a.terms_.size() + b.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
        if (j == b.terms_.size() || (i < a.terms_.size() && a.terms_[i].mono < b.terms_[j].mono)) {
            out.terms_.push_back(a.terms_[i++]);
        } else if (i == a.terms_.size() || b.terms_[j].mono < a.terms_[i].mono) {
            out.terms_.push_back(b.terms_[j++]);
        } else {
            CRational s = a.terms_[i].coef + b.terms_[j].coef;
            if (!s.is_zero()) out.terms_.push_back(Term{a.terms_[i].mono, s});
            ++i;
            ++j;
        }
    }
    return out;
}

NormalForm NormalForm::operator-() const {
    NormalForm out = *this;
    for (auto& t : out.terms_) t.coef = -t.coef;
    return out;
}

NormalForm operator-(const NormalForm& a, const NormalForm& b) { return a + (-b); }

NormalForm operator*(const CRational& k, const NormalForm& a) {
    if (k.is_zero()) return {};
    NormalForm out = a;
    for (auto& t : out.terms_) t.coef = k * t.coef;
    return out;
}

NormalForm operator*(const NormalForm& a, const NormalForm& b) {
    if (a.terms_.empty() || b.terms_.empty()) return {};
    if (a.terms_.size() == 1 && a.terms_[0].mono.empty()) return a.terms_[0].coef * b;
    if (b.terms_.size() == 1 && b.terms_[0].mono.empty()) return b.terms_[0].coef * a;
    std::vector<Term> terms;
    terms.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& ta : a.terms_)
        for (const auto& tb : b.terms_) terms.push_back(Term{multiply(ta.mono, tb.mono), ta.coef * tb.coef});
    return NormalForm::from_terms(std::move(terms));
}

NormalForm& NormalForm::operator+=(const NormalForm& o) { return *this = *this + o; }
NormalForm& NormalForm::operator-=(const NormalForm& o) { return *this = *this - o; }
NormalForm& NormalForm::operator*=(const NormalForm& o) { return *this = *this * o; }

bool operator==(const NormalForm& a, const NormalForm& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i)
        if (!(a.terms_[i].mono == b.terms_[i].mono) || a.terms_[i].coef != b.terms_[i].coef) return false;
    return true;
}

bool operator<(const NormalForm& a, const NormalForm& b) {
    if (a.terms_.size() != b.terms_.size()) return a.terms_.size() < b.terms_.size();
    for (std::size_t i = 0; i < a.terms_.size(); ++i) {
        if (!(a.terms_[i].mono == b.terms_[i].mono)) return a.terms_[i].mono < b.terms_[i].mono;
        const auto& x = a.terms_[i].coef;
        const auto& y = b.terms_[i].coef;
        if (x.re != y.re) return x.re < y.re;
        if (x.im != y.im) return x.im < y.im;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Powers and transcendental nodes

NormalForm pow(const NormalForm& base, const Rational& q) {
    if (q.is_zero()) return NormalForm(1);
    if (q.is_one()) return base;
    if (base.is_zero()) {
        if (q < Rational(0)) throw std::domain_error("negative power of zero");
        return {};
    }
    const auto& ts = base.terms();
    if (ts.size() == 1) {
        const Term& t = ts[0];
        NormalForm out(1);
        if (q.is_integer()) {
            out = NormalForm(rational_power(t.coef, q.num()));
        } else if (!t.coef.is_one()) {
            out = NormalForm::factor_power(intern_pow(NormalForm(t.coef)), q);
        }
        Monomial m;
        for (const auto& [id, e] : t.mono.factors) {
            const Rational ne = e * q;
            if (!ne.is_zero()) m.factors.emplace_back(id, ne);
        }
        fold_exponentials(m);
        return out * NormalForm::from_terms({Term{std::move(m), CRational(1)}});
    }
    if (q.is_integer() && q.num() > 0 && q.num() <= 8) {
        NormalForm out = base;
        for (std::int64_t k = 1; k < q.num(); ++k) out = out * base;
        return out;
    }
    if (q.is_integer()) {
        const CRational lead = ts.front().coef;
        const NormalForm unit = (CRational(1) / lead) * base;
        return NormalForm(rational_power(lead, q.num())) * NormalForm::factor_power(intern_pow(unit), q);
    }
    return NormalForm::factor_power(intern_pow(base), q);
}

NormalForm inverse(const NormalForm& base) { return pow(base, Rational(-1)); }

NormalForm exp(const NormalForm& arg) {
    if (arg.is_zero()) return NormalForm(1);
    return NormalForm::factor_power(intern_exp(arg), Rational(1));
}

namespace {
NormalForm transcendental(FactorKind kind, const NormalForm& arg) {
    Factor f;
    f.kind = kind;
    f.arg = std::make_shared<const NormalForm>(arg);
    return NormalForm::factor_power(Registry::instance().intern(f), Rational(1));
}
}  // namespace

NormalForm sin(const NormalForm& arg) {
    if (arg.is_zero()) return {};
    return transcendental(FactorKind::Sin, arg);
}

NormalForm cos(const NormalForm& arg) {
    if (arg.is_zero()) return NormalForm(1);
    return transcendental(FactorKind::Cos, arg);
}

NormalForm log(const NormalForm& arg) {
    if (arg.is_zero()) throw std::domain_error("log of zero");
    if (auto k = arg.as_constant(); k && k->is_one()) return {};
    return transcendental(FactorKind::Log, arg);
}

// ---------------------------------------------------------------------------
// Derivatives

namespace {

struct Caches {
    std::mutex m;
    std::unordered_map<std::uint64_t, NormalForm> factor_derivative;
    std::unordered_map<FactorId, NormalForm> factor_conjugate;
    std::map<std::pair<AtomId, Word>, NormalForm> reduced_words;
};

Caches& caches() {
    static Caches c;
    return c;
}

NormalForm make_atom_word(AtomId a, Word w);
NormalForm apply_letter(Letter l, AtomId a, Word w);

NormalForm plain_word(AtomId a, Word w) {
    Factor f;
    f.kind = FactorKind::AtomWord;
    f.atom = a;
    f.word = w;
    return NormalForm::factor_power(Registry::instance().intern(f), Rational(1));
}

const NormalForm& kI() {
    static const NormalForm i = NormalForm::imag_unit();
    return i;
}

// D1 or D2 acting directly on the atom, expressed through the integrability
// relations. Only called for the eliminated letter of a restricted atom.
NormalForm base_rule(Letter l, AtomId a) {
    const Registry& reg = Registry::instance();
    using namespace atoms;
    if (a == reg.beta && l == Letter::D1)
        return derivative(alpha(), Letter::D2) + alpha() * c_bar() - beta() * c();
    if (a == reg.beta_bar && l == Letter::D2)
        return derivative(alpha_bar(), Letter::D1) + alpha_bar() * c() - beta_bar() * c_bar();
    if (a == reg.c_bar && l == Letter::D1) return derivative(c(), Letter::D2) + kI() * (alpha() + alpha_bar());
    throw std::logic_error("no integrability rule for this atom/letter");
}

// L applied to D2^b D0^c Dr^d a, with L moved next to the atom.
NormalForm inner(Letter l, AtomId a, Word w) {
    using namespace atoms;
    const int b = w.count(Letter::D2), c0 = w.count(Letter::D0), d = w.count(Letter::Dr);
    if (l == Letter::D1 && b > 0) {
        const Word w1 = w.with(Letter::D2, -1);
        return derivative(inner(l, a, w1), Letter::D2) - kI() * apply_letter(Letter::D0, a, w1);
    }
    if (c0 > 0) {
        const Word w1 = w.with(Letter::D0, -1);
        NormalForm out = derivative(inner(l, a, w1), Letter::D0);
        if (l == Letter::D1) {
            out -= alpha() * apply_letter(Letter::D1, a, w1) + beta_bar() * apply_letter(Letter::D2, a, w1) +
                   c() * make_atom_word(a, w);
        } else {
            out -= beta() * apply_letter(Letter::D1, a, w1) + alpha_bar() * apply_letter(Letter::D2, a, w1) +
                   c_bar() * make_atom_word(a, w);
        }
        return out;
    }
    if (d > 0) return derivative(inner(l, a, w.with(Letter::Dr, -1)), Letter::Dr);
    return base_rule(l, a);
}

NormalForm reduce_word(AtomId a, Word w) {
    const AtomInfo& info = Registry::instance().atom(a);
    const Letter e = *info.eliminated;
    const int na = w.count(Letter::D1);
    if (e == Letter::D1) {
        if (na > 1) return derivative(make_atom_word(a, w.with(Letter::D1, -1)), Letter::D1);
        return inner(Letter::D1, a, w.with(Letter::D1, -1));
    }
    if (na > 0) return derivative(make_atom_word(a, w.with(Letter::D1, -1)), Letter::D1);
    if (w.count(Letter::D2) > 1) return derivative(make_atom_word(a, w.with(Letter::D2, -1)), Letter::D2);
    return inner(Letter::D2, a, w.with(Letter::D2, -1));
}

NormalForm make_atom_word(AtomId a, Word w) {
    const AtomInfo& info = Registry::instance().atom(a);
    if (info.fiber_coordinate) {
        if (w.empty()) return plain_word(a, w);
        return (w.order() == 1 && w.count(Letter::Dr) == 1) ? NormalForm(1) : NormalForm();
    }
    if (!info.r_dependent && w.count(Letter::Dr) > 0) return {};
    if (info.constant && !w.empty()) return {};
    if (info.eliminated && w.count(*info.eliminated) > 0) {
        {
            std::lock_guard lock(caches().m);
            if (auto it = caches().reduced_words.find({a, w}); it != caches().reduced_words.end()) return it->second;
        }
        NormalForm out = reduce_word(a, w);
        std::lock_guard lock(caches().m);
        caches().reduced_words.emplace(std::make_pair(a, w), out);
        return out;
    }
    return plain_word(a, w);
}

// Letter l applied on the outside of the canonical word w of atom a.
NormalForm apply_letter(Letter l, AtomId a, Word w) {
    using namespace atoms;
    const AtomInfo& info = Registry::instance().atom(a);
    if (info.fiber_coordinate) return make_atom_word(a, w.with(l, 1));
    if (info.constant) return {};
    switch (l) {
        case Letter::Dr:
            if (!info.r_dependent) return {};
            return make_atom_word(a, w.with(Letter::Dr, 1));
        case Letter::D1:
            return make_atom_word(a, w.with(Letter::D1, 1));
        case Letter::D2: {
            if (w.count(Letter::D1) == 0) return make_atom_word(a, w.with(Letter::D2, 1));
            const Word w1 = w.with(Letter::D1, -1);
            return derivative(apply_letter(Letter::D2, a, w1), Letter::D1) + kI() * apply_letter(Letter::D0, a, w1);
        }
        case Letter::D0: {
            if (w.count(Letter::D1) > 0) {
                const Word w1 = w.with(Letter::D1, -1);
                return derivative(apply_letter(Letter::D0, a, w1), Letter::D1) +
                       alpha() * apply_letter(Letter::D1, a, w1) + beta_bar() * apply_letter(Letter::D2, a, w1) +
                       c() * apply_letter(Letter::D0, a, w1);
            }
            if (w.count(Letter::D2) > 0) {
                const Word w1 = w.with(Letter::D2, -1);
                return derivative(apply_letter(Letter::D0, a, w1), Letter::D2) +
                       beta() * apply_letter(Letter::D1, a, w1) + alpha_bar() * apply_letter(Letter::D2, a, w1) +
                       c_bar() * apply_letter(Letter::D0, a, w1);
            }
            return make_atom_word(a, w.with(Letter::D0, 1));
        }
    }
    return {};
}

// Derivative of the factor itself (as a function, exponent one).
NormalForm factor_derivative(FactorId id, Letter l) {
    const std::uint64_t key = (static_cast<std::uint64_t>(id) << 2) | static_cast<std::uint64_t>(l);
    {
        std::lock_guard lock(caches().m);
        if (auto it = caches().factor_derivative.find(key); it != caches().factor_derivative.end()) return it->second;
    }
    const Factor f = Registry::instance().factor(id);
    NormalForm out;
    switch (f.kind) {
        case FactorKind::AtomWord:
            out = apply_letter(l, f.atom, f.word);
            break;
        case FactorKind::Exp:
            out = NormalForm::factor_power(id, Rational(1)) * derivative(*f.arg, l);
            break;
        case FactorKind::Sin:
            out = cos(*f.arg) * derivative(*f.arg, l);
            break;
        case FactorKind::Cos:
            out = -(sin(*f.arg) * derivative(*f.arg, l));
            break;
        case FactorKind::Log:
            out = derivative(*f.arg, l) * inverse(*f.arg);
            break;
        case FactorKind::Pow:
            out = derivative(*f.arg, l);
            break;
    }
    std::lock_guard lock(caches().m);
    caches().factor_derivative.emplace(key, out);
    return out;
}

}  // namespace

NormalForm NormalForm::atom(AtomId id) { return make_atom_word(id, Word{}); }
NormalForm NormalForm::atom_word(AtomId id, Word w) { return make_atom_word(id, w); }

NormalForm derivative(const NormalForm& e, Letter l) {
    std::vector<Term> out;
    for (const Term& t : e.terms()) {
        const auto& fs = t.mono.factors;
        for (std::size_t k = 0; k < fs.size(); ++k) {
            const NormalForm df = factor_derivative(fs[k].first, l);
            if (df.is_zero()) continue;
            Monomial rest;
            rest.factors.reserve(fs.size());
            for (std::size_t j = 0; j < fs.size(); ++j) {
                if (j != k) {
                    rest.factors.push_back(fs[j]);
                } else {
                    const Rational q = fs[j].second - Rational(1);
                    if (!q.is_zero()) rest.factors.emplace_back(fs[j].first, q);
                }
            }
            const CRational k0 = t.coef * CRational(fs[k].second);
            for (const Term& d : df.terms()) out.push_back(Term{multiply(rest, d.mono), k0 * d.coef});
        }
    }
    return NormalForm::from_terms(std::move(out));
}

NormalForm apply_word(const NormalForm& e, const std::vector<Letter>& letters) {
    NormalForm out = e;
    for (auto it = letters.rbegin(); it != letters.rend(); ++it) out = derivative(out, *it);
    return out;
}

NormalForm bracket(Letter a, Letter b, const NormalForm& f) {
    using namespace atoms;
    if (a == b || a == Letter::Dr || b == Letter::Dr) return {};
    if (static_cast<int>(a) > static_cast<int>(b)) return -bracket(b, a, f);
    const NormalForm d1 = derivative(f, Letter::D1), d2 = derivative(f, Letter::D2), d0 = derivative(f, Letter::D0);
    if (a == Letter::D1 && b == Letter::D2) return -(kI() * d0);
    if (a == Letter::D1) return -(alpha() * d1 + beta_bar() * d2 + c() * d0);
    return -(beta() * d1 + alpha_bar() * d2 + c_bar() * d0);
}

NormalForm jacobi_residual(const NormalForm& f) {
    const Letter x[3] = {Letter::D1, Letter::D2, Letter::D0};
    NormalForm out;
    for (int k = 0; k < 3; ++k) {
        const Letter a = x[k], b = x[(k + 1) % 3], c = x[(k + 2) % 3];
        // [A, [B, C]] f = A([B, C] f) - [B, C](A f)
        out += derivative(bracket(b, c, f), a) - bracket(b, c, derivative(f, a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conjugation

namespace {

// Conjugate of the factor as a function (exponent one).
NormalForm factor_conjugate(FactorId id) {
    {
        std::lock_guard lock(caches().m);
        if (auto it = caches().factor_conjugate.find(id); it != caches().factor_conjugate.end()) return it->second;
    }
    const Factor f = Registry::instance().factor(id);
    NormalForm out;
    switch (f.kind) {
        case FactorKind::AtomWord: {
            const AtomInfo& info = Registry::instance().atom(f.atom);
            out = NormalForm::atom(info.conjugate);
            // conj(D1^a D2^b D0^c Dr^d f) = D2^a D1^b D0^c Dr^d conj(f), innermost first.
            for (int k = 0; k < f.word.count(Letter::Dr); ++k) out = derivative(out, Letter::Dr);
            for (int k = 0; k < f.word.count(Letter::D0); ++k) out = derivative(out, Letter::D0);
            for (int k = 0; k < f.word.count(Letter::D2); ++k) out = derivative(out, Letter::D1);
            for (int k = 0; k < f.word.count(Letter::D1); ++k) out = derivative(out, Letter::D2);
            break;
        }
        case FactorKind::Exp:
            out = exp(conjugate(*f.arg));
            break;
        case FactorKind::Sin:
            out = sin(conjugate(*f.arg));
            break;
        case FactorKind::Cos:
            out = cos(conjugate(*f.arg));
            break;
        case FactorKind::Log:
            out = log(conjugate(*f.arg));
            break;
        case FactorKind::Pow:
            out = conjugate(*f.arg);
            break;
    }
    std::lock_guard lock(caches().m);
    caches().factor_conjugate.emplace(id, out);
    return out;
}

}  // namespace

NormalForm conjugate(const NormalForm& e) {
    NormalForm out;
    for (const Term& t : e.terms()) {
        NormalForm m(t.coef.conj());
        for (const auto& [id, q] : t.mono.factors) m = m * pow(factor_conjugate(id), q);
        out += m;
    }
    return out;
}

NormalForm real_part(const NormalForm& e) { return CRational(Rational(1, 2)) * (e + conjugate(e)); }

NormalForm imag_part(const NormalForm& e) {
    return CRational(Rational(0), Rational(-1, 2)) * (e - conjugate(e));
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

void collect_atoms(const NormalForm& e, std::vector<AtomId>& out) {
    for (const Term& t : e.terms())
        for (const auto& [id, q] : t.mono.factors) {
            const Factor& f = Registry::instance().factor(id);
            if (f.kind == FactorKind::AtomWord)
                out.push_back(f.atom);
            else
                collect_atoms(*f.arg, out);
        }
}

}  // namespace

NormalForm substitute(const NormalForm& e, const Substitution& s) {
    if (s.empty()) return e;
    const Registry& reg = Registry::instance();
    Substitution full = s;
    for (const auto& [a, v] : s) {
        const AtomId ca = reg.atom(a).conjugate;
        if (ca != a && !s.count(ca)) full.emplace(ca, conjugate(v));
    }
    for (const auto& [a, v] : full) {
        std::vector<AtomId> used;
        collect_atoms(v, used);
        for (AtomId u : used)
            if (full.count(u))
                throw std::invalid_argument("substitution for '" + reg.atom(a).name + "' mentions substituted atom '" +
                                            reg.atom(u).name + "'");
    }

    std::unordered_map<FactorId, NormalForm> memo;
    std::function<NormalForm(const NormalForm&)> rec;
    std::function<NormalForm(FactorId)> sub_factor = [&](FactorId id) -> NormalForm {
        if (auto it = memo.find(id); it != memo.end()) return it->second;
        const Factor f = reg.factor(id);
        NormalForm out;
        switch (f.kind) {
            case FactorKind::AtomWord: {
                auto it = full.find(f.atom);
                if (it == full.end()) {
                    out = NormalForm::factor_power(id, Rational(1));
                    break;
                }
                out = it->second;
                for (int k = 0; k < f.word.count(Letter::Dr); ++k) out = derivative(out, Letter::Dr);
                for (int k = 0; k < f.word.count(Letter::D0); ++k) out = derivative(out, Letter::D0);
                for (int k = 0; k < f.word.count(Letter::D2); ++k) out = derivative(out, Letter::D2);
                for (int k = 0; k < f.word.count(Letter::D1); ++k) out = derivative(out, Letter::D1);
                // Commutators may have introduced substituted structure atoms.
                if (!f.word.empty()) out = rec(out);
                break;
            }
            case FactorKind::Exp:
                out = exp(rec(*f.arg));
                break;
            case FactorKind::Sin:
                out = sin(rec(*f.arg));
                break;
            case FactorKind::Cos:
                out = cos(rec(*f.arg));
                break;
            case FactorKind::Log:
                out = log(rec(*f.arg));
                break;
            case FactorKind::Pow:
                out = rec(*f.arg);
                break;
        }
        memo.emplace(id, out);
        return out;
    };
    rec = [&](const NormalForm& x) -> NormalForm {
        NormalForm out;
        for (const Term& t : x.terms()) {
            NormalForm m(t.coef);
            for (const auto& [id, q] : t.mono.factors) {
                m = m * pow(sub_factor(id), q);
                if (m.is_zero()) break;
            }
            out += m;
        }
        return out;
    };
    return rec(e);
}

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string coef_str(const CRational& c) {
    if (c.im.is_zero()) return c.re.str();
    if (c.re.is_zero()) return c.im.is_one() ? "I" : (c.im == Rational(-1) ? "-I" : c.im.str() + "*I");
    return "(" + c.re.str() + (c.im < Rational(0) ? "" : "+") + c.im.str() + "*I)";
}

std::string latex_rational(const Rational& q) {
    if (q.is_integer()) return std::to_string(q.num());
    const std::string sign = q.num() < 0 ? "-" : "";
    return sign + "\\frac{" + std::to_string(q.num() < 0 ? -q.num() : q.num()) + "}{" + std::to_string(q.den()) + "}";
}

std::string coef_latex(const CRational& c) {
    if (c.im.is_zero()) return latex_rational(c.re);
    if (c.re.is_zero()) {
        if (c.im.is_one()) return "\\mathrm{i}";
        if (c.im == Rational(-1)) return "-\\mathrm{i}";
        return latex_rational(c.im) + "\\mathrm{i}";
    }
    return "\\left(" + latex_rational(c.re) + (c.im < Rational(0) ? "" : "+") + latex_rational(c.im) +
           "\\mathrm{i}\\right)";
}

std::string atom_latex(const std::string& name) {
    static const std::map<std::string, std::string> greek = {
        {"alpha", "\\alpha"}, {"beta", "\\beta"}, {"psi", "\\psi"},   {"tau", "\\tau"},
        {"theta", "\\theta"}, {"sigma", "\\sigma"}, {"zeta", "\\zeta"}, {"eta", "\\eta"}};
    std::string base = name;
    bool bar = false;
    if (base.size() > 4 && base.substr(base.size() - 4) == "_bar") {
        base = base.substr(0, base.size() - 4);
        bar = true;
    }
    if (auto it = greek.find(base); it != greek.end()) base = it->second;
    return bar ? "\\overline{" + base + "}" : base;
}

}  // namespace

std::string factor_str(FactorId id) {
    const Factor& f = Registry::instance().factor(id);
    switch (f.kind) {
        case FactorKind::AtomWord: {
            std::string s = Registry::instance().atom(f.atom).name;
            static const char* names[] = {"D1", "D2", "D0", "Dr"};
            for (int l = 3; l >= 0; --l)
                for (int k = 0; k < f.word.n[l]; ++k) s = std::string(names[l]) + "(" + s + ")";
            return s;
        }
        case FactorKind::Exp:
            return "exp(" + f.arg->str() + ")";
        case FactorKind::Sin:
            return "sin(" + f.arg->str() + ")";
        case FactorKind::Cos:
            return "cos(" + f.arg->str() + ")";
        case FactorKind::Log:
            return "log(" + f.arg->str() + ")";
        case FactorKind::Pow:
            return "(" + f.arg->str() + ")";
    }
    return "?";
}

std::string factor_latex(FactorId id) {
    const Factor& f = Registry::instance().factor(id);
    switch (f.kind) {
        case FactorKind::AtomWord: {
            std::string ops;
            static const char* names[] = {"\\partial", "\\bar{\\partial}", "\\partial_0", "\\partial_r"};
            for (int l = 0; l < 4; ++l)
                for (int k = 0; k < f.word.n[l]; ++k) ops += names[l];
            const std::string a = atom_latex(Registry::instance().atom(f.atom).name);
            return ops.empty() ? a : "(" + ops + " " + a + ")";
        }
        case FactorKind::Exp:
            return "e^{" + f.arg->latex() + "}";
        case FactorKind::Sin:
            return "\\sin\\left(" + f.arg->latex() + "\\right)";
        case FactorKind::Cos:
            return "\\cos\\left(" + f.arg->latex() + "\\right)";
        case FactorKind::Log:
            return "\\log\\left(" + f.arg->latex() + "\\right)";
        case FactorKind::Pow:
            return "\\left(" + f.arg->latex() + "\\right)";
    }
    return "?";
}

std::string NormalForm::str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const Term& t : terms_) {
        if (!first) os << " + ";
        first = false;
        const bool unit = t.coef.is_one() && !t.mono.empty();
        const bool neg_unit = t.coef == CRational(-1) && !t.mono.empty();
        if (neg_unit)
            os << "-";
        else if (!unit)
            os << coef_str(t.coef);
        bool first_factor = unit || neg_unit;
        for (const auto& [id, q] : t.mono.factors) {
            if (!first_factor) os << "*";
            first_factor = false;
            os << factor_str(id);
            if (!q.is_one()) os << "^" << (q.is_integer() && q.num() > 0 ? q.str() : "(" + q.str() + ")");
        }
    }
    return os.str();
}

std::string NormalForm::latex() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const Term& t : terms_) {
        std::string c = coef_latex(t.coef);
        const bool unit = t.coef.is_one() && !t.mono.empty();
        const bool neg_unit = t.coef == CRational(-1) && !t.mono.empty();
        if (!first && !(c.size() && c[0] == '-')) os << " + ";
        if (!first && c.size() && c[0] == '-') os << " ";
        first = false;
        if (neg_unit)
            os << "-";
        else if (!unit)
            os << c;
        for (const auto& [id, q] : t.mono.factors) {
            os << " " << factor_latex(id);
            if (!q.is_one()) os << "^{" << q.str() << "}";
        }
    }
    return os.str();
}

}  // namespace qf::sym
