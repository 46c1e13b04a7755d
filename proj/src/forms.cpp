#include "qf/forms.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace qf {

using sym::NormalForm;

Form Form::scalar(const NormalForm& f) {
    Form out;
    out.c_[0] = f;
    return out;
}

Form Form::basis(int l) {
    Form out;
    out.c_[1u << l] = NormalForm(1);
    return out;
}

Form Form::one_form(const std::array<NormalForm, 4>& comps) {
    Form out;
    for (int l = 0; l < 4; ++l) out.c_[1u << l] = comps[static_cast<std::size_t>(l)];
    return out;
}

bool Form::is_zero() const {
    for (const auto& x : c_)
        if (!x.is_zero()) return false;
    return true;
}

Form operator+(const Form& a, const Form& b) {
    Form out;
    for (std::size_t m = 0; m < 16; ++m) out.c_[m] = a.c_[m] + b.c_[m];
    return out;
}

Form operator-(const Form& a, const Form& b) {
    Form out;
    for (std::size_t m = 0; m < 16; ++m) out.c_[m] = a.c_[m] - b.c_[m];
    return out;
}

Form operator*(const NormalForm& f, const Form& a) {
    Form out;
    for (std::size_t m = 0; m < 16; ++m)
        if (!a.c_[m].is_zero()) out.c_[m] = f * a.c_[m];
    return out;
}

int wedge_sign(unsigned a, unsigned b) {
    if (a & b) return 0;
    int swaps = 0;
    for (unsigned bit = 0; bit < 4; ++bit)
        if (b & (1u << bit)) swaps += std::popcount(a >> (bit + 1));
    return (swaps % 2) ? -1 : 1;
}

Form wedge(const Form& a, const Form& b) {
    Form out;
    for (unsigned i = 0; i < 16; ++i) {
        if (a.c_[i].is_zero()) continue;
        for (unsigned j = 0; j < 16; ++j) {
            if (b.c_[j].is_zero()) continue;
            const int s = wedge_sign(i, j);
            if (s == 0) continue;
            const NormalForm p = a.c_[i] * b.c_[j];
            out.c_[i | j] += s > 0 ? p : -p;
        }
    }
    return out;
}

Form Form::substitute(const sym::Substitution& s) const {
    if (s.empty()) return *this;
    Form out;
    for (std::size_t m = 0; m < 16; ++m) out.c_[m] = sym::substitute(c_[m], s);
    return out;
}

std::string Form::str() const {
    static const char* names[4] = {"mu", "mubar", "lambda", "dr"};
    std::ostringstream os;
    bool first = true;
    for (unsigned m = 0; m < 16; ++m) {
        if (c_[m].is_zero()) continue;
        if (!first) os << " + ";
        first = false;
        os << "(" << c_[m].str() << ")";
        for (int l = 0; l < 4; ++l)
            if (m & (1u << l)) os << (m == 0 ? "" : "*") << names[l];
    }
    return first ? "0" : os.str();
}

Form d_basis(int l) {
    using namespace sym::atoms;
    Form out;
    constexpr unsigned mu = 1, mub = 2, lam = 4;
    switch (l) {
        case 0:
            out.set(mu | lam, alpha());
            out.set(mub | lam, beta());
            break;
        case 1:
            out.set(mub | lam, alpha_bar());
            out.set(mu | lam, beta_bar());
            break;
        case 2:
            out.set(mu | mub, NormalForm::imag_unit());
            out.set(mu | lam, c());
            out.set(mub | lam, c_bar());
            break;
        default:
            break;
    }
    return out;
}

Form d(const Form& f, const sym::Substitution& s) {
    Form out;
    for (unsigned m = 0; m < 16; ++m) {
        const NormalForm& coef = f.coef(m);
        if (coef.is_zero()) continue;
        // d(coef) ^ basis(m)
        Form df;
        for (int l = 0; l < 4; ++l) df.set(1u << l, sym::derivative(coef, sym::kLetters[static_cast<std::size_t>(l)]));
        Form bm;
        bm.set(m, NormalForm(1));
        out = out + wedge(df, bm);
        // coef * d(basis(m)), by the Leibniz rule over the factors of m.
        int sign = 1;
        for (int l = 0; l < 4; ++l) {
            if (!(m & (1u << l))) continue;
            Form before, after;
            before.set(m & ((1u << l) - 1), NormalForm(1));
            after.set(m & ~((1u << (l + 1)) - 1), NormalForm(1));
            const Form term = wedge(wedge(before, d_basis(l)), after);
            out = out + (sign > 0 ? coef : -coef) * term;
            sign = -sign;
        }
    }
    return out.substitute(s);
}

NormalForm det4(const std::array<std::array<NormalForm, 4>, 4>& m) {
    NormalForm out;
    std::array<int, 4> p{0, 1, 2, 3};
    do {
        int inv = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
                if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(j)]) ++inv;
        NormalForm t(inv % 2 ? -1 : 1);
        for (std::size_t i = 0; i < 4 && !t.is_zero(); ++i) t = t * m[i][static_cast<std::size_t>(p[i])];
        out += t;
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

}  // namespace qf
