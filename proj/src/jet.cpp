#include "qf/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace qf {

namespace {

std::unique_ptr<JetTable> build_table(int order) {
    auto t = std::make_unique<JetTable>();
    t->order = order;
    for (int deg = 0; deg <= order; ++deg) {
        t->degree_start.push_back(static_cast<int>(t->exps.size()));
        for (int a = deg; a >= 0; --a)
            for (int b = deg - a; b >= 0; --b)
                for (int c = deg - a - b; c >= 0; --c) {
                    const int d = deg - a - b - c;
                    t->exps.push_back({static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b),
                                       static_cast<std::uint8_t>(c), static_cast<std::uint8_t>(d)});
                }
    }
    t->degree_start.push_back(static_cast<int>(t->exps.size()));
    const int n = static_cast<int>(t->exps.size());
    t->products.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            std::array<std::uint8_t, kJetVars> e{};
            int deg = 0;
            for (int v = 0; v < kJetVars; ++v) {
                e[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(t->exps[static_cast<std::size_t>(i)][static_cast<std::size_t>(v)] +
                                                                           t->exps[static_cast<std::size_t>(j)][static_cast<std::size_t>(v)]);
                deg += e[static_cast<std::size_t>(v)];
            }
            if (deg > order) continue;
            t->products[static_cast<std::size_t>(t->index_of(e))].emplace_back(i, j);
        }
    for (int v = 0; v < kJetVars; ++v) {
        auto& dv = t->deriv[static_cast<std::size_t>(v)];
        dv.assign(static_cast<std::size_t>(n), {-1, 0.0});
        for (int k = 0; k < n; ++k) {
            auto e = t->exps[static_cast<std::size_t>(k)];
            int deg = 0;
            for (auto x : e) deg += x;
            if (deg + 1 > order) continue;
            e[static_cast<std::size_t>(v)] += 1;
            dv[static_cast<std::size_t>(k)] = {t->index_of(e), static_cast<double>(e[static_cast<std::size_t>(v)])};
        }
    }
    return t;
}

}  // namespace

int JetTable::index_of(const std::array<std::uint8_t, kJetVars>& e) const {
    int deg = 0;
    for (auto x : e) deg += x;
    if (deg > order) return -1;
    const auto lo = exps.begin() + degree_start[static_cast<std::size_t>(deg)];
    const auto hi = exps.begin() + degree_start[static_cast<std::size_t>(deg) + 1];
    // Within a degree the ordering is lexicographically decreasing.
    auto it = std::lower_bound(lo, hi, e, [](const auto& a, const auto& b) { return a > b; });
    return static_cast<int>(it - exps.begin());
}

const JetTable& JetTable::get(int order) {
    static std::mutex m;
    static std::map<int, std::unique_ptr<JetTable>> tables;
    if (order < 0 || order > 12) throw std::invalid_argument("jet order out of range");
    std::lock_guard lock(m);
    auto& slot = tables[order];
    if (!slot) slot = build_table(order);
    return *slot;
}

Jet make_jet(const JetTable* t, int valid) {
    Jet j;
    j.table_ = t;
    j.valid_ = valid;
    j.c_.assign(static_cast<std::size_t>(t->size_upto(std::max(valid, 0))), cplx(0));
    return j;
}

Jet::Jet(cplx constant, int order) {
    *this = make_jet(&JetTable::get(order), order);
    c_[0] = constant;
}

Jet Jet::variable(int v, double at, int order) {
    Jet j(at, order);
    if (order >= 1) {
        std::array<std::uint8_t, kJetVars> e{};
        e[static_cast<std::size_t>(v)] = 1;
        j.c_[static_cast<std::size_t>(j.table_->index_of(e))] = 1.0;
    }
    return j;
}

cplx Jet::partial(const std::array<std::uint8_t, kJetVars>& e) const {
    int deg = 0;
    double fact = 1.0;
    for (auto x : e) {
        deg += x;
        for (int k = 2; k <= x; ++k) fact *= k;
    }
    if (deg > valid_) throw std::out_of_range("jet does not carry this derivative");
    return c_[static_cast<std::size_t>(table_->index_of(e))] * fact;
}

cplx Jet::at_offset(const std::array<double, kJetVars>& h) const {
    cplx sum = 0.0;
    for (std::size_t k = 0; k < c_.size(); ++k) {
        double m = 1.0;
        for (int v = 0; v < kJetVars; ++v)
            for (int p = 0; p < table_->exps[k][static_cast<std::size_t>(v)]; ++p) m *= h[static_cast<std::size_t>(v)];
        sum += c_[k] * m;
    }
    return sum;
}

namespace {

// Both operands share the storage table of the larger one.
const JetTable* common(const Jet& a, const Jet& b) {
    return &JetTable::get(std::max(a.storage_order(), b.storage_order()));
}

}  // namespace

Jet operator+(const Jet& a, const Jet& b) {
    Jet out = make_jet(common(a, b), std::min(a.order(), b.order()));
    for (std::size_t k = 0; k < out.c_.size(); ++k) out.c_[k] = a.c_[k] + b.c_[k];
    return out;
}

Jet Jet::operator-() const {
    Jet out = *this;
    for (auto& x : out.c_) x = -x;
    return out;
}

Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }

Jet operator*(cplx k, const Jet& a) {
    Jet out = a;
    for (auto& x : out.c_) x *= k;
    return out;
}

Jet operator+(cplx k, const Jet& a) {
    Jet out = a;
    if (!out.c_.empty()) out.c_[0] += k;
    return out;
}

Jet operator*(const Jet& a, const Jet& b) {
    const JetTable* t = common(a, b);
    Jet out = make_jet(t, std::min(a.order(), b.order()));
    const std::size_t n = out.c_.size();
    for (std::size_t k = 0; k < n; ++k) {
        cplx s = 0.0;
        for (const auto& [i, j] : t->products[k]) s += a.c_[static_cast<std::size_t>(i)] * b.c_[static_cast<std::size_t>(j)];
        out.c_[k] = s;
    }
    return out;
}

Jet Jet::compose(const std::vector<cplx>& taylor) const {
    // g(a0 + h) = sum_n taylor[n] h^n, h without constant term.
    Jet h = *this;
    h.c_[0] = 0.0;
    Jet out = make_jet(table_, valid_);
    out.c_[0] = taylor[0];
    Jet hp = h;
    for (int n = 1; n <= valid_; ++n) {
        for (std::size_t k = 0; k < out.c_.size(); ++k) out.c_[k] += taylor[static_cast<std::size_t>(n)] * hp.c_[k];
        if (n < valid_) hp = hp * h;
    }
    return out;
}

Jet operator/(const Jet& a, const Jet& b) { return a * pow(b, -1.0); }

Jet Jet::d(int v) const {
    if (valid_ <= 0) throw std::runtime_error("jet order exhausted");
    Jet out = make_jet(table_, valid_ - 1);
    const auto& dv = table_->deriv[static_cast<std::size_t>(v)];
    for (std::size_t k = 0; k < out.c_.size(); ++k) {
        const auto [src, f] = dv[k];
        out.c_[k] = c_[static_cast<std::size_t>(src)] * f;
    }
    return out;
}

Jet Jet::conj() const {
    Jet out = *this;
    for (auto& x : out.c_) x = std::conj(x);
    return out;
}

Jet Jet::real() const {
    Jet out = *this;
    for (auto& x : out.c_) x = x.real();
    return out;
}

Jet Jet::imag() const {
    Jet out = *this;
    for (auto& x : out.c_) x = x.imag();
    return out;
}

Jet Jet::truncated(int order) const {
    Jet out = *this;
    out.valid_ = std::min(valid_, order);
    out.c_.resize(static_cast<std::size_t>(table_->size_upto(std::max(out.valid_, 0))));
    return out;
}

Jet exp(const Jet& a) {
    const cplx e = std::exp(a.value());
    std::vector<cplx> t(static_cast<std::size_t>(a.order()) + 1);
    double f = 1.0;
    for (std::size_t n = 0; n < t.size(); ++n) {
        if (n > 0) f /= static_cast<double>(n);
        t[n] = e * f;
    }
    return a.compose(t);
}

Jet sin(const Jet& a) {
    const cplx s = std::sin(a.value()), c = std::cos(a.value());
    const cplx cyc[4] = {s, c, -s, -c};
    std::vector<cplx> t(static_cast<std::size_t>(a.order()) + 1);
    double f = 1.0;
    for (std::size_t n = 0; n < t.size(); ++n) {
        if (n > 0) f /= static_cast<double>(n);
        t[n] = cyc[n % 4] * f;
    }
    return a.compose(t);
}

Jet cos(const Jet& a) {
    const cplx s = std::sin(a.value()), c = std::cos(a.value());
    const cplx cyc[4] = {c, -s, -c, s};
    std::vector<cplx> t(static_cast<std::size_t>(a.order()) + 1);
    double f = 1.0;
    for (std::size_t n = 0; n < t.size(); ++n) {
        if (n > 0) f /= static_cast<double>(n);
        t[n] = cyc[n % 4] * f;
    }
    return a.compose(t);
}

Jet log(const Jet& a) {
    const cplx a0 = a.value();
    if (a0 == cplx(0)) throw std::domain_error("log of a jet vanishing at the expansion point");
    std::vector<cplx> t(static_cast<std::size_t>(a.order()) + 1);
    t[0] = std::log(a0);
    cplx p = 1.0;
    for (std::size_t n = 1; n < t.size(); ++n) {
        p *= a0;
        t[n] = (n % 2 == 1 ? 1.0 : -1.0) / (static_cast<double>(n) * p);
    }
    return a.compose(t);
}

Jet pow(const Jet& a, double q) {
    const cplx a0 = a.value();
    if (a0 == cplx(0)) {
        if (q >= 0 && std::floor(q) == q) {
            Jet out(1.0, a.storage_order());
            out = out.truncated(a.order());
            for (int k = 0; k < static_cast<int>(q); ++k) out = out * a;
            return out;
        }
        throw std::domain_error("non-integer or negative power of a jet vanishing at the expansion point");
    }
    std::vector<cplx> t(static_cast<std::size_t>(a.order()) + 1);
    double binom = 1.0;
    for (std::size_t n = 0; n < t.size(); ++n) {
        if (n > 0) binom *= (q - static_cast<double>(n - 1)) / static_cast<double>(n);
        t[n] = binom * std::pow(a0, q - static_cast<double>(n));
    }
    return a.compose(t);
}

Jet atan(const Jet& a) {
    // atan z = (i/2) (log(1 - i z) - log(1 + i z))
    const cplx i(0, 1);
    const Jet one(1.0, a.storage_order());
    const Jet lhs = log(one.truncated(a.order()) - i * a);
    const Jet rhs = log(one.truncated(a.order()) + i * a);
    return (0.5 * i) * (lhs - rhs);
}

}  // namespace qf
