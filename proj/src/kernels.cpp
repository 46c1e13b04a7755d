#include "qf/kernels.hpp"

#include <numbers>
#include <random>

namespace qf {

std::vector<CurvatureValues> curvature_kernel(const StructurePtr& s, const QuasiFeffermanData& d,
                                              const std::vector<Point4>& pts, Execution exec, bool with_identities) {
    warm_up();
    return map_indices<CurvatureValues>(
        pts.size(),
        [&](std::size_t i) {
            JetContext ctx(s, pts[i], 4);
            bind_data(ctx, d);
            return curvature_values(generic_bundle(), generic_structure_constants(), ctx, with_identities);
        },
        exec);
}

std::vector<Eigen::Matrix4d> metric_kernel(const StructurePtr& s, const QuasiFeffermanData& d,
                                           const std::vector<Point4>& pts, Execution exec) {
    warm_up();
    return map_indices<Eigen::Matrix4d>(
        pts.size(), [&](std::size_t i) { return quasi_fefferman_point(s, d, pts[i]).g; }, exec);
}

std::vector<Point4> sample_points(std::size_t n, std::uint64_t seed, double box, double margin) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> x(-box, box);
    std::uniform_real_distribution<double> r(-std::numbers::pi + margin, std::numbers::pi - margin);
    std::vector<Point4> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = x(rng), b = x(rng), c = x(rng);
        out.push_back({a, b, c, r(rng)});
    }
    return out;
}

void warm_up() {
    (void)generic_structure_constants();
    (void)levi_civita_system();
}

}  // namespace qf
