#pragma once

// Hand-rolled random generators for property tests.

#include "qf/expr.hpp"

#include <random>
#include <string>
#include <vector>

namespace qf::testing {

class TreeGen {
public:
    explicit TreeGen(std::uint64_t seed) : rng_(seed) {}

    sym::FieldExpr tree(int depth) {
        if (depth <= 0 || pick(4) == 0) return leaf();
        switch (pick(8)) {
            case 0:
            case 1: return tree(depth - 1) + tree(depth - 1);
            case 2:
            case 3: return tree(depth - 1) * tree(depth - 1);
            case 4: return sym::FieldExpr::deriv(letter(), tree(depth - 1));
            case 5: return sym::FieldExpr::call(pick(2) ? sym::Func::Exp : sym::Func::Sin, small(depth - 1));
            case 6: return sym::FieldExpr::conj(tree(depth - 1));
            default: return sym::FieldExpr::power(leaf_atom(), Rational(pick(2) ? -1 : 2));
        }
    }

    sym::Letter letter() { return sym::kLetters[static_cast<std::size_t>(pick(4))]; }

    /// A random canonical or non-canonical word of the given length.
    std::vector<sym::Letter> word(int length, bool with_r = true) {
        std::vector<sym::Letter> w;
        for (int i = 0; i < length; ++i) w.push_back(sym::kLetters[static_cast<std::size_t>(pick(with_r ? 4 : 3))]);
        return w;
    }

    sym::FieldExpr leaf_atom() {
        static const std::vector<std::string> names = {"f", "g", "P", "c", "alpha", "beta", "c_bar", "x", "a", "r"};
        return sym::FieldExpr::symbol(names[static_cast<std::size_t>(pick(static_cast<int>(names.size())))]);
    }

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

private:
    sym::FieldExpr leaf() {
        if (pick(5) == 0) {
            const auto re = Rational(pick(7) - 3, 1 + pick(3));
            const auto im = Rational(pick(5) - 2, 1 + pick(2));
            return sym::FieldExpr(CRational(re, im));
        }
        return leaf_atom();
    }

    // Keeps transcendental arguments small so trees stay readable.
    sym::FieldExpr small(int depth) { return depth > 1 ? tree(1) : leaf_atom(); }

    std::mt19937_64 rng_;
};

}  // namespace qf::testing
