#pragma once

// Coordinate finite-difference curvature: Christoffel symbols from central
// differences of the metric, Riemann from central differences of those,
// then projected onto a frame.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <functional>

namespace qf::testing {

using MetricFn = std::function<Eigen::Matrix4d(const std::array<double, 4>&)>;
using Christoffel = std::array<Eigen::Matrix4d, 4>;  // G[a](b, c) = Gamma^a_{bc}

inline std::array<double, 4> shifted(std::array<double, 4> p, int i, double h) {
    p[static_cast<std::size_t>(i)] += h;
    return p;
}

inline Christoffel fd_christoffel(const MetricFn& g, const std::array<double, 4>& p, double h) {
    std::array<Eigen::Matrix4d, 4> dg;  // dg[c](a, b) = d_c g_ab
    for (int c = 0; c < 4; ++c) dg[c] = (g(shifted(p, c, h)) - g(shifted(p, c, -h))) / (2 * h);
    const Eigen::Matrix4d gi = g(p).inverse();
    Christoffel out;
    for (int a = 0; a < 4; ++a) {
        out[a].setZero();
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d)
                    out[a](b, c) += 0.5 * gi(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
    }
    return out;
}

/// R^a_{bcd} = d_c G^a_{db} - d_d G^a_{cb} + G^a_{ce} G^e_{db} - G^a_{de} G^e_{cb}
inline std::array<std::array<Eigen::Matrix4d, 4>, 4> fd_riemann(const MetricFn& g, const std::array<double, 4>& p,
                                                               double h = 1e-4) {
    const Christoffel G = fd_christoffel(g, p, h);
    std::array<Christoffel, 4> dG;
    for (int c = 0; c < 4; ++c) {
        const Christoffel plus = fd_christoffel(g, shifted(p, c, h), h);
        const Christoffel minus = fd_christoffel(g, shifted(p, c, -h), h);
        for (int a = 0; a < 4; ++a) dG[c][a] = (plus[a] - minus[a]) / (2 * h);
    }
    std::array<std::array<Eigen::Matrix4d, 4>, 4> R;  // R[a][b](c, d)
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            R[a][b].setZero();
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) {
                    double v = dG[c][a](d, b) - dG[d][a](c, b);
                    for (int e = 0; e < 4; ++e) v += G[a](c, e) * G[e](d, b) - G[a](d, e) * G[e](c, b);
                    R[a][b](c, d) = v;
                }
        }
    return R;
}

/// Frame components theta^i(R(e_k, e_l) e_j); e and theta hold coordinate rows.
inline std::complex<double> frame_riemann(const std::array<std::array<Eigen::Matrix4d, 4>, 4>& R,
                                          const Eigen::Matrix4cd& e, const Eigen::Matrix4cd& theta, int i, int j,
                                          int k, int l) {
    std::complex<double> s = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d) s += theta(i, a) * R[a][b](c, d) * e(j, b) * e(k, c) * e(l, d);
    return s;
}

}  // namespace qf::testing
