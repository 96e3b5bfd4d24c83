#include <cmath>

#include <gtest/gtest.h>

#include "wsaw/greenfn.hpp"
#include "wsaw/mcsim.hpp"

using namespace wsaw;

namespace {

double skellam(int j, double T) {
    j = std::abs(j);
    double s = 0.0;
    for (int k = 0; k < 400; ++k)
        s += std::exp(-2.0 * T + (2 * k + j) * std::log(T) - std::lgamma(k + 1.0) - std::lgamma(k + j + 1.0));
    return s;
}

double free_G(int j, double nu) {
    const double r = std::sqrt(nu * (nu + 4.0));
    return std::pow(0.5 * (nu + 2.0 - r), std::abs(j)) / r;
}

}  // namespace

TEST(Trajectory, SeedDeterminism) {
    const Trajectory a = sample_trajectory(42, 30.0);
    const Trajectory b = sample_trajectory(42, 30.0);
    EXPECT_EQ(a.jump_times, b.jump_times);
    EXPECT_EQ(a.positions, b.positions);
    EXPECT_EQ(a.local_times, b.local_times);
    EXPECT_NE(sample_trajectory(43, 30.0).jump_times, a.jump_times);
}

TEST(Trajectory, LocalTimesPartitionT) {
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        const double T = 0.5 + 0.37 * static_cast<double>(seed);
        const Trajectory tr = sample_trajectory(seed, T);
        double total = 0.0;
        for (const auto& [x, L] : tr.local_times) {
            EXPECT_GE(L, 0.0);
            total += L;
        }
        EXPECT_NEAR(total, T, 1e-12 * T);
        ASSERT_EQ(tr.positions.size(), tr.jump_times.size() + 1);
        for (std::size_t k = 1; k < tr.positions.size(); ++k) {
            EXPECT_EQ(std::abs(tr.positions[k] - tr.positions[k - 1]), 1);
            EXPECT_LT(tr.jump_times[k - 1], T);
            if (k > 1) EXPECT_GT(tr.jump_times[k - 1], tr.jump_times[k - 2]);
        }
    }
}

TEST(Trajectory, JumpCountAndEndpointLaw) {
    const double T = 3.0;
    const int n = 20000;
    double jumps = 0.0;
    std::map<int, int> counts;
    for (int s = 0; s < n; ++s) {
        const Trajectory tr = sample_trajectory(1000 + s, T);
        jumps += static_cast<double>(tr.jump_times.size());
        ++counts[tr.final_position()];
    }
    // Poisson(2T) jump count
    EXPECT_NEAR(jumps / n, 2.0 * T, 4.0 * std::sqrt(2.0 * T / n));
    for (int j = -4; j <= 4; ++j) {
        const double p = skellam(j, T);
        EXPECT_NEAR(static_cast<double>(counts[j]) / n, p, 4.0 * std::sqrt(p * (1 - p) / n)) << j;
    }
}

TEST(Trajectory, BoxDomain) {
    const WalkDomain box = WalkDomain::make_box(2);
    EXPECT_EQ(box.rate(0), 2.0);
    EXPECT_EQ(box.rate(2), 1.0);
    EXPECT_EQ(box.rate(-2), 1.0);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Trajectory tr = sample_trajectory(seed, 20.0, box, 1);
        for (int x : tr.positions) EXPECT_LE(std::abs(x), 2);
    }
    const Trajectory still = sample_trajectory(3, 7.5, WalkDomain::make_box(0));
    EXPECT_TRUE(still.jump_times.empty());
    EXPECT_EQ(still.local_times.at(0), 7.5);
    EXPECT_THROW(sample_trajectory(1, 1.0, box, 3), DomainError);
    EXPECT_THROW(WalkDomain::make_box(-1), DomainError);
}

TEST(Trajectory, GibbsWeight) {
    const Trajectory tr = sample_trajectory(9, 12.0);
    double s = 0.0;
    for (const auto& [x, L] : tr.local_times) s += L * L + 0.5 * L * L * L;
    const PhiSpec phi({{2, 1.0}, {3, 0.5}});
    EXPECT_NEAR(gibbs_weight(tr, ModelParams{0.3, 0.0, phi}), -0.3 * s, 1e-12 * s);
    EXPECT_EQ(gibbs_weight(tr, ModelParams{0.0, 0.0, phi}), 0.0);
}

TEST(Smc, EssAndCombination) {
    EXPECT_NEAR(detail::ess_of(std::vector<double>(50, -3.0)), 50.0, 1e-12);
    EXPECT_NEAR(detail::ess_of({0.0, -1000.0, -1000.0}), 1.0, 1e-12);
    std::vector<WeightedEstimate> parts(4);
    const double vals[] = {1.0, 2.0, 3.0, 4.0};
    for (int k = 0; k < 4; ++k) {
        parts[k].value = vals[k];
        parts[k].n_samples = 10;
        parts[k].effective_sample_size = 10.0;
    }
    const WeightedEstimate c = combine_replicas(parts);
    EXPECT_DOUBLE_EQ(c.value, 2.5);
    EXPECT_NEAR(c.std_error, std::sqrt((2.25 + 0.25 + 0.25 + 2.25) / 3.0 / 4.0), 1e-15);
    EXPECT_EQ(c.n_samples, 40);
    EXPECT_TRUE(c.low_confidence == false);
    EXPECT_THROW(combine_replicas({}), DomainError);
}

TEST(Smc, EstimatesAreDeterministic) {
    const ModelParams p{1.0, 0.0, {}};
    const auto a = estimate_conditional_moment(p, 10.0, 1, 4000, 7);
    const auto b = estimate_conditional_moment(p, 10.0, 1, 4000, 7);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_NE(estimate_conditional_moment(p, 10.0, 1, 4000, 8).value, a.value);
}

// with g ~ 0 the weights are flat and the free-walk law applies
TEST(Smc, FreeWalkConditionalMoment) {
    const double T = 8.0;
    double num1 = 0.0, num2 = 0.0, p0 = skellam(0, T);
    for (int j = 1; j < 200; ++j) {
        num1 += 2.0 * j * skellam(j, T);
        num2 += 2.0 * j * j * skellam(j, T);
    }
    const ModelParams p{1e-12, 0.0, {}};
    const auto m1 = estimate_conditional_moment(p, T, 1, 40000, 3);
    const auto m2 = estimate_conditional_moment(p, T, 2, 40000, 3);
    EXPECT_NEAR(m1.value, num1 / (1.0 - p0), 4.0 * m1.std_error);
    EXPECT_NEAR(m2.value, num2 / (1.0 - p0), 4.0 * m2.std_error);
    EXPECT_FALSE(m1.low_confidence);
}

TEST(Smc, ResamplingDoesNotBiasTheEstimate) {
    const ModelParams p{0.5, 0.0, {}};
    SmcOptions plain;
    plain.resample_threshold = 0.0;
    const auto a = estimate_conditional_moment(p, 4.0, 1, 40000, 5);
    const auto b = estimate_conditional_moment(p, 4.0, 1, 40000, 6, plain);
    EXPECT_NEAR(a.value, b.value, 4.0 * std::hypot(a.std_error, b.std_error));
}

TEST(Smc, ConcentrationIsAProbability) {
    const auto c = estimate_concentration(ModelParams{1.0, 0.0, {}}, 10.0, 1.39, 0.1, 4000, 2);
    EXPECT_GE(c.value, 0.0);
    EXPECT_LE(c.value, 1.0);
}

TEST(Smc, InvalidInput) {
    const ModelParams p{1.0, 0.0, {}};
    EXPECT_THROW(estimate_conditional_moment(p, 10.0, 1, 999, 1), DomainError);
    SmcOptions off_centre;
    off_centre.domain = WalkDomain::make_box(3);
    off_centre.start = 1;
    EXPECT_THROW(estimate_conditional_moment(p, 10.0, 1, 2000, 1, off_centre), DomainError);
    EXPECT_THROW(run_smc(p, 0.0, 10, 1, 0), DomainError);
    EXPECT_THROW(estimate_laplace_two_point(ModelParams{1.0, 0.0, {}}, 2, 0, 1, 10.0, 100, 1), DomainError);
    EXPECT_THROW(estimate_laplace_two_point(ModelParams{1.0, 1.0, {}}, 2, 0, 3, 10.0, 100, 1), DomainError);
}

TEST(Laplace, FreeWalkInLargeBox) {
    const double nu = 1.0;
    const auto est = estimate_laplace_two_point(ModelParams{1e-12, nu, {}}, 40, 0, 2, 40.0, 40000, 11);
    EXPECT_NEAR(est.value, free_G(2, nu), 4.0 * est.std_error);
}

// N = 0: the walk never moves, G = int e^{-nu T - g phi(T)} dT
TEST(Laplace, SingleSiteBox) {
    const ModelParams p{1.0, 0.5, {}};
    const auto [x, w] = gauss_legendre(40);
    double exact = 0.0;
    for (int panel = 0; panel < 20; ++panel)
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double T = 0.5 * (panel + 0.5 * (x[k] + 1.0));
            exact += 0.25 * w[k] * std::exp(-p.nu * T - p.g * T * T);
        }
    const auto est = estimate_laplace_two_point(p, 0, 0, 0, 10.0, 20000, 4);
    EXPECT_NEAR(est.value, exact, std::max(4.0 * est.std_error, 1e-12));
}

TEST(Laplace, AgreesWithSpectralFiniteVolume) {
    const auto grid = std::make_shared<const QuadGrid>(build_grid(GridSpec{60.0, 60, 10, QuadRule::CompositeGaussLegendre}));
    struct Case { double g, nu; int N, i, j; };
    for (const Case c : {Case{1.0, 0.5, 1, -1, 1}, Case{1.0, 0.5, 3, 0, 2}, Case{0.5, 1.0, 2, 0, 0}}) {
        const ModelParams p{c.g, c.nu, {}};
        const DiscretizedOperator Q = assemble(KernelKind::K0, p, grid);
        const DiscretizedOperator A = assemble(KernelKind::K1Weighted, p, grid);
        const double spectral = finite_volume_two_point(Q, A, c.N, c.i, c.j);
        const auto est = estimate_laplace_two_point(p, c.N, c.i, c.j, 40.0, 40000, 21);
        EXPECT_NEAR(est.value, spectral, 4.0 * est.std_error) << c.N << " " << c.i << " " << c.j;
    }
}
