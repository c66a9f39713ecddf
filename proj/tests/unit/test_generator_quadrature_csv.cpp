#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gexp/csv.hpp"
#include "gexp/generator.hpp"
#include "gexp/quadrature.hpp"

using namespace gexp;

TEST(Generator, BuiltinValues) {
    const MatrixZ z = MatrixZ::scalar(-2.0);
    const Vector y = Vector::Constant(1, 3.0);
    EXPECT_DOUBLE_EQ(parse_generator("zero", 1)(0.3, y, z)[0], 0.0);
    EXPECT_DOUBLE_EQ(parse_generator("linear:mu=0.5", 1)(0.3, y, z)[0], 1.0);
    EXPECT_DOUBLE_EQ(parse_generator("negdrift:mu=0.5", 1)(0.3, y, z)[0], -1.0);
    EXPECT_DOUBLE_EQ(parse_generator("quadratic:nu=0.5,gamma=0.1", 1)(0.3, y, z)[0], 2.1);
    EXPECT_DOUBLE_EQ(parse_generator("timescaled:a=2", 1)(0.25, y, z)[0], 1.0);
    EXPECT_DOUBLE_EQ(parse_generator("lineary:a=2", 1)(0.3, y, z)[0], 6.0);
}

TEST(Generator, RowwiseForVectorValues) {
    Eigen::MatrixXd m(2, 2);
    m << 3, 4, 0, 1;
    const Generator g = parse_generator("scaled:c=0.5;2", 1);
    const Vector v = g.of_z(0.0, MatrixZ(m));
    EXPECT_DOUBLE_EQ(v[0], 2.5);
    EXPECT_DOUBLE_EQ(v[1], 2.0);
}

TEST(Generator, ClosedFormClassFlags) {
    EXPECT_TRUE(parse_generator("quadratic:nu=1", 1).closed_form_class());
    EXPECT_FALSE(parse_generator("quadratic:nu=1,gamma=1", 1).closed_form_class());
    EXPECT_FALSE(parse_generator("lineary:a=1", 1).closed_form_class());
    EXPECT_TRUE(parse_generator("lineary:a=0", 1).closed_form_class());
}

TEST(Generator, ParseErrors) {
    EXPECT_THROW(parse_generator("cubic:a=1", 1), ParseError);
    EXPECT_THROW(parse_generator("linear:mu=abc", 1), ParseError);
    EXPECT_THROW(parse_generator("linear:mu=-1", 1), Error);
}

TEST(Generator, DeclaredMetadataIsVerified) {
    GeneratorTraits honest;
    honest.rho = [](double) { return 1.0; };
    const auto fn = [](double, const Vector&, const MatrixZ& z) -> Vector { return Vector::Constant(1, std::sin(z.matrix()(0, 0))); };
    EXPECT_NO_THROW(custom_generator("sin", fn, honest, 1, 1, 1.0));

    GeneratorTraits liar = honest;
    liar.rho = [](double) { return 0.5; };
    try {
        custom_generator("sin", fn, liar, 1, 1, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::declared_metadata_violation);
    }
    GeneratorTraits not_zero = honest;
    const auto shifted = [](double, const Vector&, const MatrixZ& z) -> Vector {
        return Vector::Constant(1, 1.0 + std::sin(z.matrix()(0, 0)));
    };
    EXPECT_THROW(custom_generator("shifted", shifted, not_zero, 1, 1, 1.0), Error);
}

TEST(Generator, BuiltinsSatisfyOwnMetadata) {
    for (const char* spec : {"zero", "linear:mu=1.5", "negdrift:mu=1", "quadratic:nu=0.7", "timescaled:a=3",
                             "lineary:a=-2", "scaled:c=2"}) {
        EXPECT_TRUE(validate_generator(parse_generator(spec, 2.0), 1, 1, 2.0).ok()) << spec;
    }
    EXPECT_TRUE(validate_generator(parse_generator("linear:mu=1", 1), 2, 3, 1.0).ok());
}

TEST(Quadrature, ExactOnPolynomialsAndKinks) {
    EXPECT_NEAR(integrate_scalar([](double t) { return t * t * t; }, 0, 2), 4.0, 1e-12);
    const double kink[] = {0.3};
    EXPECT_NEAR(integrate_scalar([](double t) { return std::abs(t - 0.3); }, 0, 1, kink), 0.045 + 0.245, 1e-13);
    EXPECT_EQ(integrate_scalar([](double t) { return t; }, 1, 1), 0.0);
    EXPECT_NEAR(integrate_scalar([](double t) { return std::exp(t); }, 0, 1), std::exp(1.0) - 1.0, 1e-10);
}

TEST(Quadrature, TailIntegralsExactForCubics) {
    const TimeGrid grid({0.0, 0.1, 0.35, 0.5, 0.8, 1.0});
    std::vector<double> f;
    for (double t : grid.points()) f.push_back(1 - 2 * t + 3 * t * t * t);
    const auto tail = tail_integrals(grid, f);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const auto F = [](double s) { return s - s * s + 0.75 * s * s * s * s; };
        EXPECT_NEAR(tail[i], F(1.0) - F(t), 1e-14);
    }
    const auto cum = cumulative_trapezoid(grid, std::vector<double>(grid.size(), 2.0));
    EXPECT_NEAR(cum.back(), 2.0, 1e-15);
}

TEST(Csv, ParsesWithBomAndBlankLines) {
    std::istringstream in("\xEF\xBB\xBFt,psi\n0,1.5\n\n0.5,-2e-1\n");
    const CsvTable t = read_csv(in);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.column("psi"), 1u);
    EXPECT_DOUBLE_EQ(t.rows[1][1], -0.2);
    EXPECT_EQ(t.lines[1], 4u);
}

TEST(Csv, ErrorsCarryLineAndColumn) {
    std::istringstream bad("t,psi\n0,1\n0.5,x1\n");
    try {
        read_csv(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), 5u);
    }
    std::istringstream ragged("a,b\n1\n");
    EXPECT_THROW(read_csv(ragged), ParseError);
    std::istringstream empty("");
    EXPECT_THROW(read_csv(empty), ParseError);
    std::istringstream ok("a\n1\n");
    EXPECT_THROW((void)read_csv(ok).column("b"), ParseError);
}

TEST(Csv, FormatRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e22}) EXPECT_EQ(std::stod(format_double(v)), v);
    EXPECT_EQ(format_double(0.5), "0.5");
}
