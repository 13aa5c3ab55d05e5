#pragma once
#include <cmath>
#include <limits>

#include <scaledreg/scaledreg.hpp>

namespace testing_support {

using namespace scaledreg;

/// Gaussian design with standardized columns and a sparse truth; sigma = 1.
inline Instance random_instance(std::uint64_t seed, Index n, Index p, int s = 3, double size = 1.0,
                                double noise = 1.0)
{
    SeededRng rng(seed, 17);
    const Matrix x = standardize_columns(gaussian_matrix(rng, n, p)).first;
    Vector beta = Vector::Zero(p);
    for (int j = 0; j < s && j < p; ++j) beta(j) = (j % 2 ? -size : size);
    const Vector y = x * beta + noise * gaussian_vector(rng, n);
    return {Dataset(x, y, false), TruthSpec{beta, noise}};
}

/// n x p design with exactly orthonormal columns scaled to |x_j|^2 = n.
inline Matrix orthogonal_design(std::uint64_t seed, Index n, Index p)
{
    SeededRng rng(seed, 5);
    const Matrix z = gaussian_matrix(rng, n, p);
    Eigen::HouseholderQR<Matrix> qr(z);
    return std::sqrt(static_cast<double>(n)) * (qr.householderQ() * Matrix::Identity(n, p));
}

/**
 * Independent lasso oracle for p <= 3: coarse grid over [-3, 3]^p with step
 * 0.05, then coordinatewise pattern search with steps down to 1e-4.
 */
inline Vector brute_force_lasso(const Dataset& d, double lambda)
{
    const Index p = d.p();
    const double n = static_cast<double>(d.n());
    auto f = [&](const Vector& b) {
        return (d.y() - d.x() * b).squaredNorm() / (2.0 * n) + lambda * b.lpNorm<1>();
    };
    Vector best = Vector::Zero(p), cur(p);
    double fbest = f(best);
    const int steps = 120;
    std::vector<int> idx(static_cast<std::size_t>(p), 0);
    while (true) {
        for (Index j = 0; j < p; ++j) cur(j) = -3.0 + 0.05 * idx[static_cast<std::size_t>(j)];
        const double v = f(cur);
        if (v < fbest) {
            fbest = v;
            best = cur;
        }
        Index k = 0;
        while (k < p && ++idx[static_cast<std::size_t>(k)] > steps) idx[static_cast<std::size_t>(k++)] = 0;
        if (k == p) break;
    }
    for (double h = 0.05; h >= 1e-4; h /= 2.0) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (Index j = 0; j < p; ++j)
                for (double dir : {-1.0, 1.0}) {
                    Vector t = best;
                    t(j) += dir * h;
                    // snap tiny values onto the kink
                    if (std::fabs(t(j)) < 0.5 * h) t(j) = 0.0;
                    const double v = f(t);
                    if (v < fbest - 1e-15) {
                        fbest = v;
                        best = t;
                        moved = true;
                    }
                }
        }
    }
    return best;
}

} // namespace testing_support
