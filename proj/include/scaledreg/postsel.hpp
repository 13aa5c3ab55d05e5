#pragma once
#include <cmath>
#include <optional>

#include <scaledreg/core.hpp>

namespace scaledreg {

struct PostSelectionFit {
    Vector beta_bar;     ///< zero off `support`
    double sigma_bar = 0.0;
    std::optional<double> sigma_bar_adjusted;  ///< |r| / sqrt(n - |support|), when |support| < n
    IndexSet support;
};

/**
 * Least squares restricted to `support` (sorted, distinct). Rank-deficient
 * blocks get the minimum-norm solution with relative rank tolerance 1e-10.
 */
inline PostSelectionFit lse_after_selection(const Dataset& data, const IndexSet& support)
{
    const Index n = data.n();
    if (static_cast<Index>(support.size()) > n)
        throw SupportTooLarge("support of size " + std::to_string(support.size()) +
                              " exceeds n = " + std::to_string(n));
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (support[k] < 0 || support[k] >= data.p())
            throw InvalidArgument("support index out of range");
        if (k > 0 && support[k] <= support[k - 1])
            throw InvalidArgument("support must be sorted and distinct");
    }
    PostSelectionFit out;
    out.support = support;
    out.beta_bar = Vector::Zero(data.p());
    if (!support.empty()) {
        const Matrix xs = columns(data.x(), support);
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xs);
        cod.setThreshold(1e-10);
        const Vector b = cod.solve(data.y());
        for (std::size_t k = 0; k < support.size(); ++k)
            out.beta_bar(support[k]) = b(static_cast<Index>(k));
    }
    const double rn = (data.y() - data.x() * out.beta_bar).norm();
    out.sigma_bar = rn / std::sqrt(static_cast<double>(n));
    if (static_cast<Index>(support.size()) < n)
        out.sigma_bar_adjusted = rn / std::sqrt(static_cast<double>(n - static_cast<Index>(support.size())));
    return out;
}

} // namespace scaledreg
