#pragma once

// Per-sample evaluation loops: a serial reference and an OpenMP version.
// Work items must not share mutable state; each builds its own JetContext.

#include "qf/connection_curvature.hpp"

#include <exception>
#include <vector>

namespace qf {

enum class Execution { Serial, Parallel };

/// out[i] = f(i) for i < n. Exceptions thrown by f are rethrown (the first
/// by index) after the loop.
template <class R, class F>
std::vector<R> map_indices(std::size_t n, F&& f, Execution exec) {
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    const long count = static_cast<long>(n);
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < count; ++i) {
            try {
                out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    } else {
        for (long i = 0; i < count; ++i) {
            try {
                out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Curvature values of the quasi-Fefferman metric at each sample.
std::vector<CurvatureValues> curvature_kernel(const StructurePtr& s, const QuasiFeffermanData& d,
                                              const std::vector<Point4>& pts, Execution exec,
                                              bool with_identities = false);

/// Coordinate metrics at each sample.
std::vector<Eigen::Matrix4d> metric_kernel(const StructurePtr& s, const QuasiFeffermanData& d,
                                           const std::vector<Point4>& pts, Execution exec);

/// Deterministic sample points in the box |x_j| <= box, r in (-pi + margin, pi - margin).
std::vector<Point4> sample_points(std::size_t n, std::uint64_t seed, double box = 1.0, double margin = 0.2);

/// Makes the shared symbolic tables ready before a parallel region.
void warm_up();

}  // namespace qf
