#include "qf/rational.hpp"

#include <cctype>

namespace qf {

Rational parse_rational(const std::string& text) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
    std::int64_t num = 0, den = 1;
    bool digits = false;
    auto push_digit = [&](char ch) {
        if (num > (INT64_MAX - 9) / 10) throw std::overflow_error("rational literal too long: " + text);
        num = num * 10 + (ch - '0');
        digits = true;
    };
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) push_digit(text[i++]);
    if (i < text.size() && text[i] == '.') {
        ++i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            push_digit(text[i++]);
            if (den > INT64_MAX / 10) throw std::overflow_error("rational literal too long: " + text);
            den *= 10;
        }
    } else if (i < text.size() && text[i] == '/') {
        ++i;
        std::int64_t d = 0;
        bool dd = false;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            d = d * 10 + (text[i++] - '0');
            dd = true;
        }
        if (!dd) throw std::invalid_argument("bad rational: " + text);
        den = d;
    }
    if (!digits || i != text.size()) throw std::invalid_argument("bad rational: " + text);
    return Rational(neg ? -num : num, den);
}

}  // namespace qf
