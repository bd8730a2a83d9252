#include <gtest/gtest.h>

#include <random>

#include "hol/disc_geometry.hpp"
#include "oracles.hpp"

using namespace hol;

namespace {

const auto H2 = NonEllipticNormalForm::hyperbolic(2.0);
const auto P2 = NonEllipticNormalForm::parabolic(2.0);

std::vector<cplx> test_grid(int n, double r) {
    std::vector<cplx> g;
    std::mt19937_64 rng(7);
    for (int i = 0; i < n; ++i) g.push_back(oracle::random_disc(rng, r));
    return g;
}

}  // namespace

TEST(Mobius, DefiningValues) {
    const auto m = MoebiusAutomorphism::involution(DiscPoint(0.3, -0.4));
    EXPECT_NEAR(std::abs(m(0.0) - cplx(0.3, -0.4)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m(cplx(0.3, -0.4))), 0.0, 1e-15);
    const auto h = MoebiusAutomorphism::involution(DiscPoint(0.5));
    EXPECT_NEAR(std::abs(h(-0.5) - 0.8), 0.0, 1e-15);
}

TEST(Mobius, RejectsPointsOutsideClosedDisc) {
    const auto m = MoebiusAutomorphism::involution(DiscPoint(0.5));
    EXPECT_THROW(m(cplx(1.0 + 1e-9, 0.0)), Error);
    EXPECT_NO_THROW(m(cplx(1.0, 0.0)));
    EXPECT_THROW(DiscPoint(1.0), Error);
}

TEST(Mobius, BoundaryGoesToBoundary) {
    const auto m = GeneralAutomorphismParams{0.7, DiscPoint(-0.2, 0.6)}.to_moebius();
    for (int j = 0; j < 64; ++j) {
        const cplx z = std::polar(1.0, 0.1 * j);
        EXPECT_NEAR(std::abs(m(z)), 1.0, 1e-14);
        EXPECT_LT(std::abs(m(0.9 * z)), 1.0);
    }
}

TEST(Mobius, InvolutionProperty) {
    std::mt19937_64 rng(1);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto m = MoebiusAutomorphism::involution(DiscPoint(oracle::random_disc(rng, 0.9)));
        const cplx z = oracle::random_disc(rng, 0.9);
        worst = std::max(worst, std::abs(m(m(z)) - z));
    }
    EXPECT_LT(worst, 1e-12);
    EXPECT_TRUE(MoebiusAutomorphism::involution(DiscPoint(0.2)).is_involution());
    EXPECT_FALSE((MoebiusAutomorphism{cplx(0, 1), DiscPoint(0.2)}).is_involution());
}

TEST(Mobius, ComposeAndInverse) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const MoebiusAutomorphism a(std::polar(1.0, 6.0 * i / 200), DiscPoint(oracle::random_disc(rng, 0.8)));
        const MoebiusAutomorphism b(std::polar(1.0, -1.0 + i / 50.0), DiscPoint(oracle::random_disc(rng, 0.8)));
        const cplx z = oracle::random_disc(rng, 0.9);
        EXPECT_NEAR(std::abs(compose(a, b)(z) - a(b(z))), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(a.inverse()(a(z)) - z), 0.0, 1e-12);
    }
}

TEST(Metric, Values) {
    EXPECT_NEAR(rho(DiscPoint(0.0), DiscPoint(0.3, 0.4)), 0.5, 1e-15);
    EXPECT_EQ(rho(DiscPoint(0.2, 0.1), DiscPoint(0.2, 0.1)), 0.0);
    EXPECT_NEAR(rho(DiscPoint(0.5), DiscPoint(-0.5)), 0.8, 1e-15);
    EXPECT_NEAR(beta(DiscPoint(0.0), DiscPoint(0.5)), std::log(3.0), 1e-15);
    EXPECT_EQ(beta(DiscPoint(0.7), DiscPoint(0.7)), 0.0);
}

TEST(Metric, AutomorphismInvariance) {
    std::mt19937_64 rng(3);
    double wr = 0.0, wb = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const MoebiusAutomorphism psi(std::polar(1.0, 1.0 + i), DiscPoint(oracle::random_disc(rng, 0.9)));
        const cplx z = oracle::random_disc(rng, 0.9), w = oracle::random_disc(rng, 0.9);
        const double r0 = rho(DiscPoint(z), DiscPoint(w)), r1 = rho(DiscPoint(psi(z)), DiscPoint(psi(w)));
        wr = std::max(wr, std::abs(r0 - r1));
        // compare beta through the well-conditioned deficit formula
        const double q0 = rho_deficit(z, w), q1 = rho_deficit(psi(z), psi(w));
        wb = std::max(wb, std::abs(std::log(q0) - std::log(q1)));
        EXPECT_NEAR(r0, rho(DiscPoint(w), DiscPoint(z)), 1e-14);
    }
    EXPECT_LT(wr, 1e-12);
    EXPECT_LT(wb, 1e-11);
}

TEST(Classify, Examples) {
    EXPECT_EQ(classify(GeneralAutomorphismParams{0.0, DiscPoint(0.5)}), AutomorphismClass::Elliptic);
    EXPECT_EQ(classify(GeneralAutomorphismParams{pi / 2, DiscPoint(std::sqrt(2.0) / 2)}), AutomorphismClass::Parabolic);
    EXPECT_EQ(classify(GeneralAutomorphismParams{pi / 2, DiscPoint(0.9)}), AutomorphismClass::Hyperbolic);
    EXPECT_THROW(classify(GeneralAutomorphismParams{pi, DiscPoint(0.0)}), Error);
    EXPECT_EQ(classify(iterate_map(H2, 1)), AutomorphismClass::Hyperbolic);
    EXPECT_EQ(classify(iterate_map(P2, 1)), AutomorphismClass::Parabolic);
}

TEST(Classify, MatchesFixedPointCount) {
    // theta = 0, p = 1/2 has the interior fixed point 2 - sqrt(3)
    const auto m = GeneralAutomorphismParams{0.0, DiscPoint(0.5)}.to_moebius();
    const double z = 2.0 - std::sqrt(3.0);
    EXPECT_NEAR(std::abs(m(z) - z), 0.0, 1e-15);
}

TEST(Classify, ParamsMatchFormula) {
    const GeneralAutomorphismParams g{1.1, DiscPoint(0.3, -0.6)};
    const auto m = g.to_moebius();
    for (auto z : test_grid(100, 0.99)) {
        const cplx direct = std::polar(1.0, g.theta) * (g.p.value() - z) / (1.0 - std::conj(g.p.value()) * z);
        EXPECT_NEAR(std::abs(m(z) - direct), 0.0, 1e-14);
    }
}

namespace {

void expect_conjugates(const GeneralAutomorphismParams& g, const NormalizationResult& r) {
    const auto phi = g.to_moebius();
    const auto step = r.inverted ? phi.inverse() : phi;
    for (auto z : test_grid(100, 0.9)) {
        const cplx lhs = r.conjugator(step(r.conjugator.inverse()(z)));
        EXPECT_NEAR(std::abs(lhs - iterate_eval(r.form, 1, z)), 0.0, 1e-10);
    }
}

}  // namespace

TEST(NormalForm, AlreadyNormalized) {
    for (auto f : {H2, P2}) {
        const auto g = normal_form_params(f);
        const auto r = to_normal_form(g);
        EXPECT_EQ(r.form.kind(), f.kind());
        EXPECT_NEAR(r.form.parameter(), f.parameter(), 1e-12);
        EXPECT_FALSE(r.inverted);
        for (auto z : test_grid(50, 0.9)) EXPECT_NEAR(std::abs(r.conjugator(z) - z), 0.0, 1e-12);
        expect_conjugates(g, r);
    }
}

TEST(NormalForm, FixedPointsOnImaginaryAxis) {
    // rotate the alpha = 3 form so the fixed points sit at +-i
    const auto f = NonEllipticNormalForm::hyperbolic(3.0);
    const auto rot = MoebiusAutomorphism::rotation_by(imag_unit);
    const auto phi = compose(compose(rot, iterate_map(f, 1)), rot.inverse());
    EXPECT_NEAR(std::abs(phi(imag_unit) - imag_unit), 0.0, 1e-14);
    const auto g = GeneralAutomorphismParams::from_moebius(phi);
    const auto r = to_normal_form(g);
    ASSERT_TRUE(r.form.is_hyperbolic());
    EXPECT_NEAR(r.form.alpha(), 3.0, 1e-12);
    // multiplier at the attractive point, read off the half-plane dilation of the oracle
    EXPECT_NEAR(1.0 / phi.derivative_modulus(imag_unit), 3.0, 1e-12);
    EXPECT_NEAR(std::abs(r.conjugator.center()), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(std::abs(std::arg(-r.conjugator.rotation())) - pi / 2), 0.0, 1e-12);
    expect_conjugates(g, r);
}

TEST(NormalForm, RandomHyperbolicAndParabolic) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    int hyp = 0, par = 0;
    for (int i = 0; i < 60; ++i) {
        const double theta = u(rng);
        const double c = std::cos(theta / 2);
        // parabolic on even steps, hyperbolic otherwise
        const double modp = i % 2 == 0 ? c : c + (1.0 - c) * 0.5;
        const GeneralAutomorphismParams g{theta, DiscPoint(std::polar(modp, u(rng)))};
        const auto r = to_normal_form(g);
        if (r.form.is_hyperbolic()) ++hyp;
        else ++par;
        expect_conjugates(g, r);
    }
    EXPECT_GT(hyp, 0);
    EXPECT_GT(par, 0);
}

TEST(NormalForm, RejectsElliptic) {
    EXPECT_THROW(to_normal_form(GeneralAutomorphismParams{0.0, DiscPoint(0.5)}), Error);
}

TEST(Iterate, ClosedFormValues) {
    EXPECT_NEAR(std::abs(iterate_eval(H2, 1, 0.0) - 1.0 / 3.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(iterate_eval(H2, 2, 0.0) - 0.6), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(iterate_eval(H2, 1, 1.0 / 3.0) - 0.6), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(iterate_eval(P2, 1, 0.0) - cplx(0.5, -0.5)), 0.0, 1e-15);
}

TEST(Iterate, HalfPlaneOracle) {
    for (auto f : {H2, P2, NonEllipticNormalForm::hyperbolic(1.5), NonEllipticNormalForm::parabolic(0.7)}) {
        for (int n = -20; n <= 20; ++n)
            for (auto z : test_grid(40, 0.9)) {
                const cplx o = oracle::half_plane_iterate(f.is_hyperbolic(), f.parameter(), n, z);
                EXPECT_NEAR(std::abs(iterate_eval(f, n, z) - o), 0.0, 1e-10) << f.describe() << " n=" << n;
            }
    }
}

TEST(Iterate, MatchesCenteredMapAndRepeatedSteps) {
    for (auto f : {H2, P2}) {
        for (auto z : test_grid(30, 0.95)) {
            cplx w = z;
            for (int n = 1; n <= 12; ++n) {
                w = iterate_eval(f, 1, w);
                EXPECT_NEAR(std::abs(w - iterate_eval(f, n, z)), 0.0, 1e-10);
                EXPECT_NEAR(std::abs(iterate_map(f, n)(z) - iterate_eval(f, n, z)), 0.0, 1e-12);
            }
        }
    }
}

TEST(Iterate, GroupLaw) {
    const auto grid = test_grid(100, 0.9);
    for (auto f : {H2, P2}) {
        double worst = 0.0;
        for (int n = -20; n <= 20; ++n)
            for (int m = -20; m <= 20; ++m)
                for (auto z : grid)
                    worst = std::max(worst, std::abs(iterate_eval(f, n, iterate_eval(f, m, z)) - iterate_eval(f, n + m, z)));
        EXPECT_LT(worst, 1e-10) << f.describe();
    }
}

TEST(Iterate, HugeIndicesStayOnFixedPoints) {
    EXPECT_EQ(iterate_eval(H2, 5000000, 0.3), cplx(1.0));
    EXPECT_EQ(iterate_eval(H2, -5000000, 0.3), cplx(-1.0));
    EXPECT_EQ(iterate_eval(H2, 5000000, -1.0), cplx(-1.0));
    EXPECT_NEAR(std::abs(iterate_eval(P2, 1000000000, 0.3) - 1.0), 0.0, 1e-8);
    EXPECT_GT(iterate_center_defect(H2, 40), 0.0);
    EXPECT_NEAR(iterate_center_defect(H2, 40) / (4.0 * std::pow(2.0, -40)), 1.0, 1e-10);
}

TEST(BoundaryDerivative, Values) {
    EXPECT_NEAR(boundary_derivative(H2, 1, BoundaryPoint(pi / 2)), 0.8, 1e-15);
    EXPECT_NEAR(boundary_derivative(P2, 1, BoundaryPoint(pi)), 0.2, 1e-15);
    EXPECT_EQ(boundary_derivative(H2, 0, BoundaryPoint(0.3)), 1.0);
    EXPECT_THROW(boundary_derivative(H2, 1, BoundaryPoint(0.0)), Error);
    EXPECT_THROW(boundary_derivative(H2, 1, BoundaryPoint(pi)), Error);
    EXPECT_THROW(boundary_derivative(P2, 2, BoundaryPoint(1e-13)), Error);
}

TEST(BoundaryDerivative, FiniteDifferenceOracle) {
    for (auto f : {H2, P2}) {
        for (int n = -6; n <= 6; ++n) {
            for (double th : {-2.5, -1.0, 0.4, 1.7, 3.0}) {
                const double fd = oracle::fd_boundary_speed([&](cplx z) { return iterate_eval(f, n, z); }, th);
                EXPECT_NEAR(boundary_derivative(f, n, BoundaryPoint(th)) / fd, 1.0, 1e-6);
            }
        }
    }
}

TEST(BoundaryDerivative, FixedPointMultipliers) {
    for (double a : {1.5, 2.0, 4.0}) {
        const auto f = NonEllipticNormalForm::hyperbolic(a);
        EXPECT_NEAR(iterate_derivative_modulus(f, 1, 1.0), 1.0 / a, 1e-12);
        EXPECT_NEAR(iterate_derivative_modulus(f, 1, -1.0), a, 1e-12);
    }
    for (double t : {1.0, 2.0, 4.0})
        EXPECT_NEAR(iterate_derivative_modulus(NonEllipticNormalForm::parabolic(t), 1, 1.0), 1.0, 1e-12);
}

TEST(BoundaryDerivative, DerivativeBoundsOnJ) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto f : {NonEllipticNormalForm::hyperbolic(1.5), H2, NonEllipticNormalForm::hyperbolic(4.0),
                   NonEllipticNormalForm::parabolic(1.0), P2, NonEllipticNormalForm::parabolic(4.0)}) {
        const auto J = boundary_tile_J(f);
        for (int i = 0; i < 300; ++i) {
            const auto w = J.point_at(u(rng));
            for (int n = -30; n <= 30; ++n) {
                const auto b = derivative_bounds(f, n);
                const double d = boundary_derivative(f, n, w);
                EXPECT_LE(b.lower, d);
                EXPECT_LE(d, b.upper);
            }
        }
    }
}

TEST(BoundaryDerivative, ParabolicConstant) {
    const double gap = 2.0 * (1.0 / std::sqrt(5.0) - 1.0 / std::sqrt(8.0));
    EXPECT_NEAR(parabolic_bound_constant(2.0), 4.0 / (gap * gap), 1e-9);
    EXPECT_NEAR(parabolic_bound_constant(2.0), 114.0, 0.1);
    EXPECT_GE(parabolic_bound_constant(1e-3), 4.0);
}

TEST(Quotient, Examples) {
    const auto f4 = NonEllipticNormalForm::hyperbolic(4.0);
    EXPECT_EQ(quotient_index(f4, from_half_plane(cplx(0, 8))), 1);
    EXPECT_EQ(quotient_index(P2, from_half_plane(cplx(5, 1))), 2);
    EXPECT_EQ(quotient_index(H2, 0.0), 0);
    EXPECT_EQ(quotient_index(P2, 0.0), 0);
    EXPECT_THROW(quotient_index(H2, cplx(1.0)), Error);
    EXPECT_THROW(quotient_index(H2, cplx(-1.0)), Error);
    EXPECT_NO_THROW(quotient_index(P2, cplx(-1.0)));
}

TEST(Quotient, PullbackLandsInDomain) {
    for (auto f : {H2, P2}) {
        for (auto z : test_grid(500, 0.99)) {
            const auto n = quotient_index(f, z);
            EXPECT_TRUE(in_half_plane_domain(f, to_half_plane(iterate_eval(f, -n, z)))) << z;
        }
    }
}

TEST(TileJ, Endpoints) {
    const auto J = boundary_tile_J(H2);
    ASSERT_EQ(J.arcs().size(), 2u);
    EXPECT_NEAR(J.arcs()[1].end, pi / 2, 1e-15);
    EXPECT_TRUE(J.arcs()[1].end_closed);
    EXPECT_NEAR(J.arcs()[0].start, -pi / 2, 1e-15);
    EXPECT_NEAR(J.arcs()[1].start, std::arg(iterate_eval(H2, 1, imag_unit)), 1e-15);
    const auto Jp = boundary_tile_J(P2);
    ASSERT_EQ(Jp.arcs().size(), 1u);
    EXPECT_NEAR(Jp.arcs()[0].start, -pi, 1e-15);
    EXPECT_TRUE(Jp.arcs()[0].start_closed);
    EXPECT_TRUE(Jp.contains(BoundaryPoint(pi)));
    EXPECT_TRUE(J.contains(BoundaryPoint(pi / 2)));
    EXPECT_FALSE(J.contains(BoundaryPoint(std::arg(iterate_eval(H2, 1, imag_unit)) - 1e-9)));
}

TEST(TileJ, TilingRoundTrip) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-pi, pi);
    for (auto f : {H2, P2, NonEllipticNormalForm::hyperbolic(4.0)}) {
        const auto J = boundary_tile_J(f);
        for (int i = 0; i < 1000; ++i) {
            const BoundaryPoint xi(u(rng));
            const auto n = quotient_index(f, xi);
            const auto back = iterate_boundary(f, -n, xi);
            EXPECT_TRUE(J.contains(back));
            EXPECT_EQ(quotient_index(f, iterate_boundary(f, 1, xi)), n + 1);
        }
    }
}

TEST(TileJ, Parameterization) {
    for (auto f : {H2, P2}) {
        const auto J = boundary_tile_J(f);
        for (double s : {0.0, 0.1, 0.3, 0.49, 0.6, 0.9, 1.0}) {
            const auto w = J.point_at(s);
            if (f.is_hyperbolic() ? s == 0.5 : s == 1.0) continue;  // open ends
            EXPECT_NEAR(J.param_of(w), s, 1e-12);
        }
    }
    // conjugation symmetry of the hyperbolic tile
    const auto J = boundary_tile_J(H2);
    for (double s : {0.05, 0.2, 0.45}) EXPECT_NEAR(J.angle_at(s), -J.angle_at(1.0 - s), 1e-14);
}

TEST(Orbit, Separation) {
    for (auto f : {H2, P2}) {
        for (cplx z0 : {cplx(0.0), cplx(0.2, 0.5)}) {
            double worst = 1.0;
            for (int n = -30; n <= 30; ++n)
                for (int m = n + 1; m <= 30; ++m) {
                    const double q = std::min(1.0, rho_deficit(z0, iterate_eval(f, m - n, z0)));
                    worst = std::min(worst, std::sqrt(1.0 - q));
                }
            EXPECT_GT(worst, 0.1) << f.describe();
        }
    }
}

TEST(HalfPlane, BoundaryRoundTrip) {
    for (double x : {-1e6, -3.0, -1e-3, 0.0, 2e-4, 1.0, 7.0, 1e8}) {
        const auto b = BoundaryPoint::from_half_plane(x);
        EXPECT_NEAR(std::abs(to_half_plane(b.value()) - cplx(x, 0.0)) / std::max(1.0, std::abs(x)), 0.0, 1e-7);
        EXPECT_NEAR(b.half_plane(), x, 1e-12 * std::max(1.0, std::abs(x)));
    }
}
