#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "support.hpp"

using namespace scaledreg;

TEST(Standardize, AlreadyScaledColumnUnchanged)
{
    Matrix x(4, 1);
    x << 1, -1, 1, -1;
    auto [xs, norms] = standardize_columns(x);
    EXPECT_NEAR(norms(0), 2.0, 1e-15);
    EXPECT_LT((xs - x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Standardize, ConstantColumnOfTwos)
{
    const Matrix x = Matrix::Constant(4, 1, 2.0);
    auto [xs, norms] = standardize_columns(x);
    EXPECT_DOUBLE_EQ(norms(0), 4.0);
    for (Index i = 0; i < 4; ++i) EXPECT_NEAR(xs(i, 0), 1.0, 1e-15);
}

TEST(Standardize, ZeroColumnRejected)
{
    Matrix x = Matrix::Ones(3, 2);
    x.col(1).setZero();
    EXPECT_THROW(standardize_columns(x), ZeroColumn);
    EXPECT_THROW(Dataset(x, Vector::Ones(3)), ZeroColumn);
}

TEST(Standardize, IdempotentAndSpanPreserving)
{
    SeededRng rng(3);
    const Matrix x = 3.0 * gaussian_matrix(rng, 30, 6);
    auto [a, na] = standardize_columns(x);
    auto [b, nb] = standardize_columns(a);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-15 * a.cwiseAbs().maxCoeff() * 10);
    const Vector v = gaussian_vector(rng, 6);
    const Vector scaled = v.cwiseProduct(na) / std::sqrt(30.0);
    EXPECT_LT((x * v - a * scaled).norm(), 1e-12 * (x * v).norm());
    for (Index j = 0; j < 6; ++j) EXPECT_NEAR(a.col(j).squaredNorm(), 30.0, 30.0 * 1e-10);
}

TEST(DatasetTest, ValidatesInput)
{
    EXPECT_THROW(Dataset(Matrix::Ones(3, 2), Vector::Ones(4)), DimensionMismatch);
    Matrix bad = Matrix::Ones(3, 2);
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(Dataset(bad, Vector::Ones(3)), InvalidArgument);
    Matrix x(3, 2);
    x << 1, 0, 0, 1, 1, 1;
    const Dataset d(x, Vector::Ones(3));
    EXPECT_TRUE(d.standardized());
    EXPECT_EQ(d.n(), 3);
    EXPECT_EQ(d.p(), 2);
    EXPECT_NEAR(d.column_norms()(0), std::sqrt(2.0), 1e-15);
}

TEST(Rng, DeterministicPerSeedAndStream)
{
    SeededRng a(11, 4), b(11, 4), c(11, 5);
    const Vector va = gaussian_vector(a, 50), vb = gaussian_vector(b, 50), vc = gaussian_vector(c, 50);
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
}

TEST(Rng, NormalMoments)
{
    SeededRng rng(2024);
    const Vector v = gaussian_vector(rng, 1000000);
    const double mean = v.mean();
    const double var = (v.array() - mean).square().sum() / (v.size() - 1);
    EXPECT_LE(std::fabs(mean), 0.005);
    EXPECT_LE(std::fabs(var - 1.0), 0.01);
}

TEST(Rng, UniformIsOpenInterval)
{
    SeededRng rng(1);
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, StudentTVariance)
{
    SeededRng rng(9);
    const int m = 10, draws = 400000;
    double s2 = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double t = rng.student_t(m);
        s2 += t * t;
    }
    // var T_m = m/(m-2) = 1.25
    EXPECT_NEAR(s2 / draws, 1.25, 0.03);
}

TEST(Sets, Helpers)
{
    const IndexSet a{1, 3, 5}, b{3, 4};
    EXPECT_EQ(set_union(a, b), (IndexSet{1, 3, 4, 5}));
    EXPECT_EQ(set_difference(a, b), (IndexSet{1, 5}));
    EXPECT_TRUE(is_subset(IndexSet{3}, a));
    EXPECT_EQ(complement(a, 6), (IndexSet{0, 2, 4}));
    int count = 0;
    for_each_subset(IndexSet{0, 1, 2, 3, 4}, 2, [&](const IndexSet&) { ++count; });
    EXPECT_EQ(count, 10);
    EXPECT_DOUBLE_EQ(binomial(17, 6), 12376.0);
}

class CsvTest : public ::testing::Test {
protected:
    std::string dir = ::testing::TempDir();
    std::string write(const std::string& name, const std::string& body)
    {
        const std::string path = dir + "/" + name;
        std::ofstream(path) << body;
        return path;
    }
};

TEST_F(CsvTest, LoadsMatchingFiles)
{
    const auto x = write("x.csv", "1,2\n3,4\n5,7\n");
    const auto y = write("y.csv", "1\n2\n3\n");
    const Dataset d = load_dataset(x, y);
    EXPECT_EQ(d.n(), 3);
    EXPECT_EQ(d.p(), 2);
}

TEST_F(CsvTest, HeaderAndYColumn)
{
    const auto x = write("xy.csv", "a,b,y\n1,2,9\n3,4,8\n5,7,7\n");
    CsvOptions o;
    o.header = true;
    o.y_column = 2;
    const Dataset d = load_dataset(x, "", o);
    EXPECT_EQ(d.p(), 2);
    EXPECT_DOUBLE_EQ(d.y()(0), 9.0);
}

TEST_F(CsvTest, CenteringIsOptIn)
{
    const auto x = write("xc.csv", "1,2\n3,4\n5,9\n");
    const auto y = write("yc.csv", "1\n2\n6\n");
    EXPECT_DOUBLE_EQ(load_dataset(x, y).y()(2), 6.0);
    CsvOptions o;
    o.center = true;
    const Dataset d = load_dataset(x, y, o);
    // y mean 3; column 0 = (-2, 0, 2), norm sqrt(8) -> scaled by sqrt(3/8)
    EXPECT_DOUBLE_EQ(d.y()(2), 3.0);
    EXPECT_NEAR(d.x()(0, 0), -2.0 * std::sqrt(3.0 / 8.0), 1e-14);
    EXPECT_NEAR(d.x().col(1).sum(), 0.0, 1e-12);
}

TEST_F(CsvTest, LengthMismatch)
{
    const auto x = write("x2.csv", "1,2\n3,4\n5,7\n");
    const auto y = write("y2.csv", "1\n2\n");
    EXPECT_THROW(load_dataset(x, y), DimensionMismatch);
}

TEST_F(CsvTest, NonNumericCellLocated)
{
    const auto x = write("x3.csv", "1,2\n3,abc\n");
    const auto y = write("y3.csv", "1\n2\n");
    try {
        load_dataset(x, y);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 2u);
        EXPECT_EQ(e.col(), 2u);
    }
}
