#include <gtest/gtest.h>

#include <scaledreg/penalty.hpp>

using namespace scaledreg;

namespace {

std::vector<PenaltySpec> families()
{
    return {PenaltySpec::l1(), PenaltySpec::mcp(1.5), PenaltySpec::mcp(3.0), PenaltySpec::scad(2.5),
            PenaltySpec::scad(3.7)};
}

} // namespace

TEST(Rho, ClosedForms)
{
    EXPECT_DOUBLE_EQ(rho(PenaltySpec::l1(), 3.5), 3.5);
    const auto mcp2 = PenaltySpec::unchecked(PenaltyKind::MCP, 2.0);
    EXPECT_DOUBLE_EQ(rho(mcp2, 2.0), 1.0);
    EXPECT_DOUBLE_EQ(rho(mcp2, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(rho_prime(PenaltySpec::l1(), 7.0), 1.0);
    EXPECT_DOUBLE_EQ(rho_prime(mcp2, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(rho_prime(mcp2, 2.0), 0.0);
    EXPECT_DOUBLE_EQ(rho_prime(mcp2, 5.0), 0.0);
    // scad plateau (gamma + 1) / 2
    EXPECT_DOUBLE_EQ(rho(PenaltySpec::scad(3.7), 10.0), 2.35);
}

TEST(Rho, NegativeArgumentRejected)
{
    EXPECT_THROW(rho(PenaltySpec::l1(), -1.0), NegativeArgument);
    EXPECT_THROW(rho_prime(PenaltySpec::l1(), -0.1), NegativeArgument);
}

TEST(Rho, GammaGuards)
{
    EXPECT_THROW(PenaltySpec::mcp(1.0), NonconvexUpdate);
    EXPECT_THROW(PenaltySpec::scad(2.0), NonconvexUpdate);
    EXPECT_NO_THROW(PenaltySpec::unchecked(PenaltyKind::MCP, 0.5));
    EXPECT_THROW(PenaltySpec::unchecked(PenaltyKind::SCAD, 0.0), InvalidArgument);
    EXPECT_THROW(coordinate_update(PenaltySpec::unchecked(PenaltyKind::MCP, 0.5), 1.0, 0.1), NonconvexUpdate);
}

TEST(Rho, ShapeProperties)
{
    for (const auto& spec : families()) {
        EXPECT_DOUBLE_EQ(rho_prime(spec, 0.0), 1.0) << spec.name();
        EXPECT_DOUBLE_EQ(rho(spec, 0.0), 0.0);
        double prev = 0.0, prev_slope = 1.0;
        for (double t = 0.01; t < 8.0; t += 0.01) {
            const double v = rho(spec, t);
            ASSERT_GE(v, prev - 1e-15) << spec.name() << " t=" << t;
            ASSERT_LE(v, t + 1e-15);
            const double slope = rho_prime(spec, t);
            ASSERT_LE(slope, prev_slope + 1e-15);  // concave
            prev = v;
            prev_slope = slope;
        }
    }
}

TEST(Rho, DerivativeMatchesFiniteDifference)
{
    for (const auto& spec : families()) {
        const double g = spec.gamma();
        for (double t = 0.013; t < 6.0; t += 0.037) {
            if (std::fabs(t - 1.0) < 1e-3 || std::fabs(t - g) < 1e-3) continue;
            const double h = 1e-6;
            const double fd = (rho(spec, t + h) - rho(spec, t - h)) / (2 * h);
            ASSERT_NEAR(fd, rho_prime(spec, t), 1e-6) << spec.name() << " t=" << t;
        }
    }
}

TEST(CoordinateUpdate, ClosedForms)
{
    EXPECT_DOUBLE_EQ(coordinate_update(PenaltySpec::l1(), 0.5, 0.8), 0.0);
    EXPECT_NEAR(coordinate_update(PenaltySpec::l1(), 2.0, 0.8), 1.2, 1e-15);
    EXPECT_DOUBLE_EQ(coordinate_update(PenaltySpec::mcp(3.0), 2.0, 0.5), 2.0);
    EXPECT_NEAR(coordinate_update(PenaltySpec::l1(), 2.0, 0.8, 2.0), 0.6, 1e-15);
}

TEST(CoordinateUpdate, L1IsContraction)
{
    for (double z1 = -5.0; z1 <= 5.0; z1 += 0.173)
        for (double z2 = -5.0; z2 <= 5.0; z2 += 0.311)
            ASSERT_LE(std::fabs(coordinate_update(PenaltySpec::l1(), z1, 0.7) -
                                coordinate_update(PenaltySpec::l1(), z2, 0.7)),
                      std::fabs(z1 - z2) + 1e-15);
}

TEST(CoordinateUpdate, FlatMcpMatchesL1)
{
    const auto mcp = PenaltySpec::mcp(1e12);
    for (double z = -10.0; z <= 10.0; z += 0.01)
        ASSERT_NEAR(coordinate_update(mcp, z, 0.9), coordinate_update(PenaltySpec::l1(), z, 0.9), 1e-6);
}

TEST(CoordinateUpdate, SatisfiesStationarity)
{
    for (const auto& spec : families())
        for (double lambda : {0.3, 1.0})
            for (double z = -6.0; z <= 6.0; z += 0.0137) {
                const double b = coordinate_update(spec, z, lambda);
                if (b != 0.0) {
                    const double s = b > 0 ? 1.0 : -1.0;
                    ASSERT_LE(std::fabs(b - z + lambda * s * rho_prime(spec, std::fabs(b) / lambda)), 1e-12)
                        << spec.name() << " z=" << z;
                } else {
                    ASSERT_LE(std::fabs(z), lambda + 1e-15);
                }
            }
}

TEST(CoordinateUpdate, MinimizesUnivariateObjective)
{
    // brute-force oracle on a fine grid of b
    for (const auto& spec : families())
        for (double z : {-3.1, -1.2, -0.4, 0.2, 0.9, 1.7, 2.6, 4.0}) {
            const double lambda = 0.8;
            auto f = [&](double b) { return 0.5 * b * b - z * b + penalty_value(spec, b, lambda); };
            double best = 0.0, fbest = f(0.0);
            for (double b = -6.0; b <= 6.0; b += 1e-4)
                if (f(b) < fbest) {
                    fbest = f(b);
                    best = b;
                }
            EXPECT_NEAR(coordinate_update(spec, z, lambda), best, 2e-4) << spec.name() << " z=" << z;
        }
}
