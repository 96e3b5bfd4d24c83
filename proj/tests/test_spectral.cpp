#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "wsaw/spectral.hpp"

using namespace wsaw;

namespace {

// Free walk (g = 0): k0 = e^{-a(t+s)} I0(2 sqrt(ts)) with a = 1 + nu/2 has
// eigenfunction e^{-ct}, c = sqrt(a^2 - 1), eigenvalue a - c.
double free_lambda(double nu) {
    const double a = 1.0 + 0.5 * nu;
    return a - std::sqrt(a * a - 1.0);
}

double free_dlambda_dnu(double nu) {
    const double a = 1.0 + 0.5 * nu;
    return 0.5 * (1.0 - a / std::sqrt(a * a - 1.0));
}

std::shared_ptr<const QuadGrid> grid_of(GridSpec s) { return std::make_shared<const QuadGrid>(build_grid(s)); }

SpectralResult spectrum(const ModelParams& p, const std::shared_ptr<const QuadGrid>& grid,
                        Representation rep = Representation::Auto) {
    const DiscretizedOperator Q = assemble(KernelKind::K0, p, grid, rep);
    SpectralResult r = leading_eigenpair(Q);
    fill_first_derivs(Q, r);
    return r;
}

DiscretizedOperator from_matrix(const Matrix& M) {
    const auto grid = std::make_shared<const QuadGrid>(build_grid(static_cast<double>(M.rows()),
                                                                  static_cast<int>(M.rows()), 1,
                                                                  QuadRule::CompositeGaussLegendre));
    return DiscretizedOperator(KernelKind::K0, ModelParams{}, grid, M);
}

Matrix random_psd(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix X(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) X(i, j) = u(rng);
    return X * X.transpose() / n;
}

}  // namespace

TEST(Eigen, FreeWalkClosedFormLanczos) {
    const auto grid = grid_of(GridSpec::default_preset());
    for (double nu : {1.0, 0.5, 0.1}) {
        const SpectralResult r = spectrum(ModelParams{0.0, nu, {}}, grid);
        EXPECT_NEAR(r.lambda, free_lambda(nu), 1e-11) << nu;
        EXPECT_NEAR(r.dlambda_dnu, free_dlambda_dnu(nu), 1e-9) << nu;
        EXPECT_LE(r.residual, 1e-10);
    }
    EXPECT_NEAR(free_lambda(1.0), 0.3819660112501051, 1e-15);
}

TEST(Eigen, FreeWalkClosedFormDense) {
    const auto grid = grid_of(GridSpec{40.0, 20, 10, QuadRule::CompositeGaussLegendre});
    ASSERT_LE(grid->size(), 200u);
    const SpectralResult r = spectrum(ModelParams{0.0, 1.0, {}}, grid);
    EXPECT_NEAR(r.lambda, free_lambda(1.0), 1e-11);
}

TEST(Eigen, FreeWalkApproachesOneFromBelow) {
    const auto grid = grid_of(GridSpec{400.0, 400, 10, QuadRule::CompositeGaussLegendre});
    double prev = 0.0;
    for (double nu : {1.0, 0.3, 0.1, 0.05}) {
        const double lam = spectrum(ModelParams{0.0, nu, {}}, grid).lambda;
        EXPECT_LT(lam, 1.0);
        EXPECT_GT(lam, prev);
        EXPECT_NEAR(lam, free_lambda(nu), 1e-8) << nu;
        prev = lam;
    }
}

TEST(Eigen, RandomMatricesAgainstDenseOracle) {
    for (int n : {5, 60, 400}) {
        const Matrix M = random_psd(n, 11 + n);
        Eigen::SelfAdjointEigenSolver<Matrix> es(M);
        const DiscretizedOperator op = from_matrix(M);
        for (Eigen::Index dense_limit : {Eigen::Index{0}, Eigen::Index{1000}}) {
            EigenOptions opts;
            opts.dense_limit = dense_limit;
            const SpectralResult r = leading_eigenpair(op, opts);
            EXPECT_NEAR(r.lambda, es.eigenvalues()[n - 1], 1e-12 * r.lambda) << n;
            EXPECT_NEAR(r.lambda2, es.eigenvalues()[n - 2], 1e-9 * r.lambda) << n;
            EXPECT_NEAR(std::abs(r.h.dot(es.eigenvectors().col(n - 1))), 1.0, 1e-10);
            EXPECT_NEAR(r.h.norm(), 1.0, 1e-14);
        }
    }
}

TEST(Eigen, NonSymmetricRejected) {
    const auto grid = grid_of(GridSpec{10.0, 5, 4, QuadRule::CompositeGaussLegendre});
    EXPECT_THROW(leading_eigenpair(assemble(KernelKind::K1Weighted, ModelParams{}, grid)), DomainError);
}

TEST(Eigen, EigenvectorPositive) {
    const auto grid = grid_of(GridSpec::default_preset());
    for (const ModelParams& p : {ModelParams{1.0, -1.64, {}}, ModelParams{0.1, 0.0, {}}, ModelParams{10.0, -7.0, {}}}) {
        const SpectralResult r = spectrum(p, grid);
        double largest = 0.0;
        for (Eigen::Index i = 0; i < r.h.size(); ++i)
            if (std::abs(r.h[i]) > std::abs(largest)) largest = r.h[i];
        EXPECT_GT(largest, 0.0);
        EXPECT_GE(r.h.minCoeff(), -1e-12);
        EXPECT_GT(r.gap, 0.0);
    }
}

TEST(Eigen, MonotoneInNuAndG) {
    const auto grid = grid_of(GridSpec::default_preset());
    const std::vector<double> nus{-2.0, -1.0, -0.5, 0.0, 0.5};
    const std::vector<double> gs{0.1, 0.3, 1.0, 3.0, 10.0};
    std::vector<std::vector<double>> lam(gs.size(), std::vector<double>(nus.size()));
    for (std::size_t a = 0; a < gs.size(); ++a)
        for (std::size_t b = 0; b < nus.size(); ++b) lam[a][b] = spectrum(ModelParams{gs[a], nus[b], {}}, grid).lambda;
    for (std::size_t a = 0; a < gs.size(); ++a) {
        for (std::size_t b = 0; b + 1 < nus.size(); ++b) EXPECT_GT(lam[a][b], lam[a][b + 1]);
        // convex in nu on equally spaced triples
        for (std::size_t b = 1; b + 1 < nus.size(); ++b) {
            const double h1 = nus[b] - nus[b - 1], h2 = nus[b + 1] - nus[b];
            const double slope1 = (lam[a][b] - lam[a][b - 1]) / h1, slope2 = (lam[a][b + 1] - lam[a][b]) / h2;
            EXPECT_LE(slope1, slope2);
        }
    }
    for (std::size_t b = 0; b < nus.size(); ++b)
        for (std::size_t a = 0; a + 1 < gs.size(); ++a) EXPECT_GT(lam[a][b], lam[a + 1][b]);
}

TEST(Eigen, GridRefinementConvergence) {
    const GridSpec base = GridSpec::default_preset();
    const ModelParams p{1.0, 0.0, {}};
    const double a = spectrum(p, grid_of(base)).lambda;
    const double b = spectrum(p, grid_of(base.refined())).lambda;
    EXPECT_LT(std::abs(a - b), 1e-8);
}

TEST(Eigen, TruncationConvergence) {
    const GridSpec base = GridSpec::default_preset();
    for (double g : {0.1, 1.0}) {
        const ModelParams p{g, -0.3, {}};
        const double a = spectrum(p, grid_of(base)).lambda;
        const double b = spectrum(p, grid_of(base.extended(1.5))).lambda;
        EXPECT_LT(std::abs(a - b), 1e-10) << g;
    }
}

class Derivatives : public ::testing::TestWithParam<Representation> {};

TEST_P(Derivatives, FirstAndSecondMatchFiniteDifferences) {
    const Representation rep = GetParam();
    const auto grid = grid_of(GridSpec{60.0, 60, 10, QuadRule::CompositeGaussLegendre});
    const PhiSpec phi({{2, 1.0}, {3, 0.2}});
    const ModelParams p{0.7, -1.2, phi};
    const DiscretizedOperator Q = assemble(KernelKind::K0, p, grid, rep);
    SpectralResult r = leading_eigenpair(Q);
    fill_first_derivs(Q, r);
    fill_second_derivs(Q, r);

    auto lam = [&](double g, double nu) { return spectrum(ModelParams{g, nu, phi}, grid, rep).lambda; };
    const double e = 1e-4, E = 2e-3;
    const double d_nu = (lam(p.g, p.nu + e) - lam(p.g, p.nu - e)) / (2 * e);
    const double d_g = (lam(p.g + e, p.nu) - lam(p.g - e, p.nu)) / (2 * e);
    EXPECT_NEAR(r.dlambda_dnu / d_nu, 1.0, 1e-6);
    EXPECT_NEAR(r.dlambda_dg / d_g, 1.0, 1e-6);

    const double l0 = r.lambda;
    const double d_nunu = (lam(p.g, p.nu + E) - 2 * l0 + lam(p.g, p.nu - E)) / (E * E);
    const double d_gg = (lam(p.g + E, p.nu) - 2 * l0 + lam(p.g - E, p.nu)) / (E * E);
    const double d_nug = (lam(p.g + E, p.nu + E) - lam(p.g + E, p.nu - E) - lam(p.g - E, p.nu + E) +
                          lam(p.g - E, p.nu - E)) /
                         (4 * E * E);
    EXPECT_NEAR(*r.d2lambda_dnu2 / d_nunu, 1.0, 1e-4);
    EXPECT_NEAR(*r.d2lambda_dg2 / d_gg, 1.0, 1e-4);
    EXPECT_NEAR(*r.d2lambda_dnudg / d_nug, 1.0, 1e-4);
    EXPECT_NEAR(*r.d2lambda_dgdnu / *r.d2lambda_dnudg, 1.0, 1e-9);
    EXPECT_GT(*r.d2lambda_dnu2, 0.0);
}

INSTANTIATE_TEST_SUITE_P(Representations, Derivatives,
                         ::testing::Values(Representation::Dense, Representation::Factored));

TEST(Eigen, FreeWalkSecondDerivative) {
    const auto grid = grid_of(GridSpec::default_preset());
    const DiscretizedOperator Q = assemble(KernelKind::K0, ModelParams{0.0, 1.0, {}}, grid);
    const SpectralResult r = leading_eigenpair(Q);
    const double d2 = lambda_second_derivs(Q, r).first;
    // d^2/dnu^2 (a - sqrt(a^2 - 1)) with da/dnu = 1/2
    const double a = 1.5;
    EXPECT_NEAR(d2, 0.25 * std::pow(a * a - 1.0, -1.5), 1e-8);
}

TEST(Resolvent, TrivialCases) {
    const auto grid = grid_of(GridSpec{20.0, 10, 10, QuadRule::CompositeGaussLegendre});
    const DiscretizedOperator Q = assemble(KernelKind::K0, ModelParams{1.0, 0.0, {}}, grid);
    EXPECT_EQ(resolvent_solve(Q, 1.0, Vector::Zero(Q.size())).norm(), 0.0);
    const DiscretizedOperator Z = from_matrix(Matrix::Zero(8, 8));
    Vector rhs = Vector::LinSpaced(8, 1.0, 2.0);
    EXPECT_LT((resolvent_solve(Z, 1.0, rhs, 0.0) - rhs).norm(), 1e-15);
}

TEST(Resolvent, MatchesNeumannSeries) {
    const auto grid = grid_of(GridSpec::default_preset());
    for (Representation rep : {Representation::Dense, Representation::Factored}) {
        const DiscretizedOperator Q = assemble(KernelKind::K0, ModelParams{1.0, -1.0, {}}, grid, rep);
        const double lam = leading_eigenpair(Q).lambda;
        ASSERT_LT(lam, 0.95);
        Vector rhs(Q.size());
        for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs[i] = std::sqrt(grid->weights[i]) * std::exp(-0.2 * grid->nodes[i]);
        Vector term = rhs, sum = rhs;
        for (int k = 0; k < 2000 && term.norm() > 1e-18 * sum.norm(); ++k) {
            term = Q.apply(term);
            sum += term;
        }
        const Vector x = resolvent_solve(Q, 1.0, rhs, lam);
        EXPECT_LT((x - sum).norm(), 1e-11 * sum.norm()) << to_string(rep);
    }
}

TEST(Resolvent, RefusesShiftAtLeadingEigenvalue) {
    const auto grid = grid_of(GridSpec{30.0, 30, 5, QuadRule::CompositeGaussLegendre});
    const DiscretizedOperator Q = assemble(KernelKind::K0, ModelParams{1.0, -1.0, {}}, grid);
    const double lam = leading_eigenpair(Q).lambda;
    EXPECT_THROW(Resolvent(Q, lam + 1e-12, lam), CriticalityError);
    EXPECT_NO_THROW(Resolvent(Q, lam + 1e-3, lam));
    const DiscretizedOperator F = assemble(KernelKind::K0, ModelParams{1.0, -1.0, {}}, grid, Representation::Factored);
    EXPECT_THROW(Resolvent(F, lam, lam), CriticalityError);
}
