#pragma once
#include <cmath>
#include <string>

#include <scaledreg/errors.hpp>

namespace scaledreg {

enum class PenaltyKind { L1, MCP, SCAD };

/**
 * Penalty family, standardized so that rho'(0+) = 1.
 *
 * Construction enforces gamma > 1 for MCP and gamma > 2 for SCAD, which
 * keeps the coordinate update single-valued. `unchecked` skips the guard for
 * evaluating rho and rho' only.
 */
class PenaltySpec {
public:
    PenaltySpec() = default;

    static PenaltySpec l1() { return PenaltySpec(PenaltyKind::L1, 0.0); }
    static PenaltySpec mcp(double gamma) { return checked(PenaltyKind::MCP, gamma); }
    static PenaltySpec scad(double gamma) { return checked(PenaltyKind::SCAD, gamma); }
    static PenaltySpec unchecked(PenaltyKind kind, double gamma)
    {
        if (kind != PenaltyKind::L1 && !(gamma > 0.0))
            throw InvalidArgument("penalty gamma must be positive");
        return PenaltySpec(kind, gamma);
    }

    PenaltyKind kind() const noexcept { return kind_; }
    double gamma() const noexcept { return gamma_; }
    bool is_l1() const noexcept { return kind_ == PenaltyKind::L1; }

    std::string name() const
    {
        switch (kind_) {
        case PenaltyKind::L1: return "l1";
        case PenaltyKind::MCP: return "mcp";
        case PenaltyKind::SCAD: return "scad";
        }
        return "?";
    }

private:
    PenaltySpec(PenaltyKind kind, double gamma) : kind_(kind), gamma_(gamma) {}

    static PenaltySpec checked(PenaltyKind kind, double gamma)
    {
        const double floor = kind == PenaltyKind::MCP ? 1.0 : 2.0;
        if (!(gamma > floor))
            throw NonconvexUpdate(std::string(kind == PenaltyKind::MCP ? "MCP" : "SCAD") +
                                  " requires gamma > " + std::to_string(static_cast<int>(floor)));
        return PenaltySpec(kind, gamma);
    }

    PenaltyKind kind_ = PenaltyKind::L1;
    double gamma_ = 0.0;
};

inline double rho(const PenaltySpec& spec, double t)
{
    if (t < 0.0) throw NegativeArgument("rho needs t >= 0");
    const double g = spec.gamma();
    switch (spec.kind()) {
    case PenaltyKind::L1:
        return t;
    case PenaltyKind::MCP:
        return t <= g ? t - t * t / (2.0 * g) : 0.5 * g;
    case PenaltyKind::SCAD:
        if (t <= 1.0) return t;
        if (t <= g) return (2.0 * g * t - t * t - 1.0) / (2.0 * (g - 1.0));
        return 0.5 * (g + 1.0);
    }
    return t;
}

/// Right derivative of rho.
inline double rho_prime(const PenaltySpec& spec, double t)
{
    if (t < 0.0) throw NegativeArgument("rho_prime needs t >= 0");
    const double g = spec.gamma();
    switch (spec.kind()) {
    case PenaltyKind::L1:
        return 1.0;
    case PenaltyKind::MCP:
        return t < g ? 1.0 - t / g : 0.0;
    case PenaltyKind::SCAD:
        if (t < 1.0) return 1.0;
        return t < g ? (g - t) / (g - 1.0) : 0.0;
    }
    return 1.0;
}

/// lambda^2 * rho(|b| / lambda), the penalty as it enters the loss.
inline double penalty_value(const PenaltySpec& spec, double b, double lambda)
{
    if (spec.is_l1()) return lambda * std::fabs(b);
    return lambda * lambda * rho(spec, std::fabs(b) / lambda);
}

inline double soft_threshold(double z, double lambda) noexcept
{
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

/**
 * argmin_b { d b^2 / 2 - z b + lambda^2 rho(|b| / lambda) } for a coordinate
 * with Gram diagonal d. Nonconvex families require d = 1.
 */
inline double coordinate_update(const PenaltySpec& spec, double z, double lambda, double d = 1.0)
{
    const double g = spec.gamma();
    const double az = std::fabs(z);
    const double sz = z < 0.0 ? -1.0 : 1.0;
    switch (spec.kind()) {
    case PenaltyKind::L1:
        return soft_threshold(z, lambda) / d;
    case PenaltyKind::MCP:
        if (!(g > 1.0)) throw NonconvexUpdate("MCP update requires gamma > 1");
        if (az <= lambda) return 0.0;
        if (az <= g * lambda) return sz * g * (az - lambda) / (g - 1.0);
        return z;
    case PenaltyKind::SCAD:
        if (!(g > 2.0)) throw NonconvexUpdate("SCAD update requires gamma > 2");
        if (az <= 2.0 * lambda) return soft_threshold(z, lambda);
        if (az <= g * lambda) return ((g - 1.0) * z - sz * g * lambda) / (g - 2.0);
        return z;
    }
    return 0.0;
}

} // namespace scaledreg
