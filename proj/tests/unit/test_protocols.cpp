#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tensor_oracle.hpp"

#include "clockopt/error.hpp"
#include "clockopt/protocols.hpp"
#include "clockopt/rng.hpp"

using namespace clockopt;
using std::numbers::pi;

namespace {

std::vector<double> curve(const ClockProtocol& p, double phi)
{
    return outcome_probabilities(evolve_phase(p.initial_state(), phi), p.basis());
}

double max_curve_difference(const ClockProtocol& a, const ClockProtocol& b)
{
    double worst = 0.0;
    for (double phi = -pi; phi <= pi; phi += 2 * pi / 200) {
        const auto pa = curve(a, phi);
        const auto pb = curve(b, phi);
        for (std::size_t j = 0; j < pa.size(); ++j) worst = std::max(worst, std::abs(pa[j] - pb[j]));
    }
    return worst;
}

ParamVector random_params(int n, std::mt19937_64& gen)
{
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> angle(0.0, 2 * pi);
    ParamVector v{n, std::vector<double>(ParamVector::size_for(n))};
    for (std::size_t i = 0; i < ParamVector::basis_offset(n); ++i) v.reals[i] = g(gen);
    for (std::size_t i = ParamVector::basis_offset(n); i < ParamVector::corrections_offset(n); ++i) v.reals[i] = angle(gen);
    for (std::size_t i = ParamVector::corrections_offset(n); i < ParamVector::period_offset(n); ++i) v.reals[i] = 3 * g(gen);
    v.reals[ParamVector::period_offset(n)] = 0.01 + std::abs(g(gen));
    return v;
}

}  // namespace

TEST_CASE("ramsey protocol")
{
    const auto p1 = ramsey_protocol(1, 0.1);
    CHECK(std::abs(p1.initial_state()[0] - Complex(std::sqrt(0.5), 0.0)) < 1e-12);
    CHECK(std::abs(p1.initial_state()[1] - Complex(0.0, -std::sqrt(0.5))) < 1e-12);

    const auto s2 = ramsey_state(2);
    CHECK(std::abs(s2[0] - Complex(0.5, 0.0)) < 1e-12);
    CHECK(std::abs(s2[1] - Complex(0.0, -std::sqrt(0.5))) < 1e-12);
    CHECK(std::abs(s2[2] - Complex(-0.5, 0.0)) < 1e-12);

    for (double phi = -3.0; phi <= 3.0; phi += 0.1) {
        const auto p = curve(p1, phi);
        CHECK(p[0] == doctest::Approx((1.0 + std::sin(phi)) / 2.0).scale(1.0).epsilon(1e-12));
        CHECK(p[1] == doctest::Approx((1.0 - std::sin(phi)) / 2.0).scale(1.0).epsilon(1e-12));
    }

    CHECK(p1.corrections()[0] == doctest::Approx(-p1.corrections()[1]).epsilon(1e-12));
    CHECK(p1.corrections()[0] > 0.0);
}

TEST_CASE("ramsey curves agree with the product-state oracle")
{
    const double r = std::sqrt(0.5);
    for (int n = 1; n <= 4; ++n) {
        const auto p = ramsey_protocol(n, 0.05);
        const auto psi = oracle::product_state(n, r, oracle::cd(0.0, -r));
        for (double phi = -3.0; phi <= 3.0; phi += 0.3) {
            const auto o = oracle::rotated_counting_probabilities(n, pi / 2, oracle::phase_each(n, phi, psi));
            const auto q = curve(p, phi);
            for (int j = 0; j <= n; ++j) CHECK(std::abs(q[static_cast<std::size_t>(j)] - o[static_cast<std::size_t>(j)]) < 1e-12);
        }
    }
}

TEST_CASE("ghz protocol")
{
    const auto g2 = ghz_protocol(2, 0.05);
    CHECK(curve(g2, 0.0)[0] == doctest::Approx(1.0));
    const auto g3 = ghz_protocol(3, 0.05);
    CHECK(curve(g3, pi / 3)[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(curve(g3, pi / 3)[3] == doctest::Approx(1.0));

    for (int n = 2; n <= 5; ++n) {
        const auto g = ghz_protocol(n, 0.05, 0.4);
        for (int k = 1; k < n; ++k) CHECK(g.corrections()[static_cast<std::size_t>(k)] == 0.0);
        for (double phi = -1.0; phi <= 1.0; phi += 0.1) {
            CHECK(curve(g, phi)[0] == doctest::Approx((1.0 + std::cos(n * phi + 0.4)) / 2.0).scale(1.0).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(ghz_protocol(1, 0.05), ValidationError);
}

TEST_CASE("squeezed state")
{
    const auto s = squeezed_state(2, 1.0);
    CHECK(s[0].real() == doctest::Approx(0.32635).epsilon(1e-5));
    CHECK(s[1].real() == doctest::Approx(-0.88711).epsilon(1e-5));
    CHECK(s[2].real() == doctest::Approx(0.32635).epsilon(1e-5));

    for (int n : {2, 4, 8}) {
        const auto narrow = squeezed_state(n, 1e-3);
        CHECK(std::abs(narrow[static_cast<std::size_t>(n / 2)]) == doctest::Approx(1.0));
    }
    for (int n = 1; n <= 20; ++n)
        for (double kappa : {0.01, 0.5, 1.0, 3.0, 100.0}) CHECK(squeezed_state(n, kappa).norm() == doctest::Approx(1.0).epsilon(1e-12));

    // Very weak squeezing flattens the envelope rather than approaching the binomial one.
    for (int n : {2, 5}) {
        const auto wide = squeezed_state(n, 1e3);
        for (std::size_t k = 0; k < wide.dimension(); ++k) {
            CHECK(std::abs(wide[k]) == doctest::Approx(1.0 / std::sqrt(n + 1.0)).epsilon(1e-5));
            CHECK(wide[k].real() * (k % 2 == 0 ? 1.0 : -1.0) > 0.0);
        }
    }
    CHECK_THROWS_AS(squeezed_state(2, 0.0), ValidationError);
}

TEST_CASE("squeezed protocol curves")
{
    for (int n : {2, 3, 6}) {
        const auto p = squeezed_protocol(n, 1.3, 0.05);
        for (double phi = 0.05; phi < pi; phi += 0.2) {
            const auto plus = curve(p, phi);
            const auto minus = curve(p, -phi);
            for (int j = 0; j <= n; ++j) {
                CHECK(plus[static_cast<std::size_t>(j)] ==
                      doctest::Approx(minus[static_cast<std::size_t>(n - j)]).scale(1.0).epsilon(1e-12));
            }
        }
        const auto c = p.corrections();
        for (int j = 0; j <= n; ++j) CHECK(c[static_cast<std::size_t>(j)] == doctest::Approx(-c[static_cast<std::size_t>(n - j)]).scale(1e-9));
    }

    // The wide-kappa state is the flat envelope with (-i)^k phases; compare with the oracle.
    const int n = 3;
    const auto p = squeezed_protocol(n, 1e3, 0.05);
    std::vector<oracle::cd> flat(n + 1);
    oracle::cd phase = 1.0;
    for (auto& a : flat) {
        a = phase / std::sqrt(n + 1.0);
        phase *= oracle::cd(0.0, -1.0);
    }
    for (double phi = -3.0; phi <= 3.0; phi += 0.25) {
        const auto o = oracle::rotated_counting_probabilities(n, pi / 2, oracle::phase_each(n, phi, oracle::embed(n, flat)));
        const auto q = curve(p, phi);
        for (int j = 0; j <= n; ++j) CHECK(std::abs(q[static_cast<std::size_t>(j)] - o[static_cast<std::size_t>(j)]) < 1e-6);
    }
}

TEST_CASE("buzek state and basis")
{
    const auto b1 = buzek_state(1);
    CHECK(b1[0].real() == doctest::Approx(0.70711).epsilon(1e-5));
    CHECK(b1[1].real() == doctest::Approx(0.70711).epsilon(1e-5));
    const auto b2 = buzek_state(2);
    CHECK(b2[0].real() == doctest::Approx(0.40825).epsilon(1e-5));
    CHECK(b2[1].real() == doctest::Approx(0.81650).epsilon(1e-5));
    CHECK(b2[2].real() == doctest::Approx(0.40825).epsilon(1e-5));
    for (int n = 1; n <= 20; ++n) {
        CHECK(buzek_state(n).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(buzek_basis(n, false).orthonormality_error() < 1e-12);
        CHECK(buzek_basis(n, true).orthonormality_error() < 1e-12);
    }

    const auto u = buzek_basis(1, false).unitary();
    const double r = std::sqrt(0.5);
    CHECK(std::abs(u(0, 0) - r) < 1e-15);
    CHECK(std::abs(u(0, 1) - r) < 1e-15);
    CHECK(std::abs(u(1, 0) - r) < 1e-15);
    CHECK(std::abs(u(1, 1) + r) < 1e-15);

    const auto shifted = buzek_basis(2, true);
    const double expected[3] = {pi / 3, pi, 5 * pi / 3};
    for (std::size_t j = 0; j < 3; ++j) {
        const auto ket = shifted.vector(j);
        const double phase = std::remainder(std::arg(ket[1]) - expected[j], 2 * pi);
        CHECK(std::abs(phase) < 1e-12);
    }
}

TEST_CASE("buzek curves peak at minus the window phase")
{
    for (int n : {3, 4, 7}) {
        for (bool shift : {false, true}) {
            const auto p = buzek_protocol(n, shift, 0.05);
            const double width = 2 * pi / (n + 1);
            for (int j = 0; j <= n; ++j) {
                double best_phi = 0.0, best = -1.0;
                for (int i = 0; i < 4000; ++i) {
                    const double phi = -pi + 2 * pi * i / 4000.0;
                    const double v = curve(p, phi)[static_cast<std::size_t>(j)];
                    if (v > best) best = v, best_phi = phi;
                }
                const double target = -width * (j + (shift ? 0.5 : 0.0));
                CHECK(std::abs(std::remainder(best_phi - target, 2 * pi)) < 0.5 * width);
            }
        }
    }
}

TEST_CASE("buzek n=1 is ramsey with the outcomes swapped")
{
    const auto b = buzek_protocol(1, true, 0.05);
    const auto r = ramsey_protocol(1, 0.05);
    for (double phi = -3.0; phi <= 3.0; phi += 0.1) {
        CHECK(curve(b, phi)[0] == doctest::Approx(curve(r, phi)[1]).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("init_corrections agrees with a Monte Carlo posterior mean")
{
    const double t = 0.05;
    const auto state = buzek_state(2);
    const auto basis = buzek_basis(2, true);
    const double sigma = 0.6 / (2 * pi * t);
    const auto c = init_corrections(state, basis, t, sigma);

    Rng rng(99);
    std::vector<double> mass(3, 0.0), moment(3, 0.0);
    const PhaseResponse response(state, basis);
    std::vector<double> p(3);
    for (int i = 0; i < 1000000; ++i) {
        const double f = sigma * rng.normal();
        response.probabilities(2 * pi * f * t, p);
        for (std::size_t j = 0; j < 3; ++j) {
            mass[j] += p[j];
            moment[j] += p[j] * f;
        }
    }
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(c[j] - moment[j] / mass[j]) < 0.01 * sigma);
    CHECK(c[0] < 0.0);
    CHECK(c[2] > 0.0);
    CHECK(c[0] == doctest::Approx(-c[2]).epsilon(1e-9));

    CHECK_THROWS_AS(init_corrections(state, basis, t, 0.0), ValidationError);
}

TEST_CASE("protocol invariants")
{
    const auto r = ramsey_protocol(2, 0.1);
    CHECK_THROWS_AS(r.with_probe_period(0.0), ValidationError);
    CHECK_THROWS_AS(r.with_probe_period(-1.0), ValidationError);
    CHECK_THROWS_AS(r.with_corrections({1.0, 2.0}), DimensionMismatch);
    CHECK_THROWS_AS(ClockProtocol(SymmetricState({1.0, 1.0, 0.0}), ramsey_basis(2), {0, 0, 0}, 0.1), ValidationError);
    CHECK_THROWS_AS(ClockProtocol(ramsey_state(2), ramsey_basis(3), {0, 0, 0}, 0.1), DimensionMismatch);
    CHECK(r.with_probe_period(0.3).probe_period() == 0.3);
}

TEST_CASE("parameter vector length")
{
    for (int n = 1; n <= 8; ++n) {
        CHECK(ParamVector::size_for(n) == static_cast<std::size_t>(n * n + 4 * n + 3));
        ParamVector v{n, std::vector<double>(ParamVector::size_for(n), 0.0)};
        v.reals[0] = 1.0;
        v.reals.back() = 0.1;
        CHECK_NOTHROW(decode_params(v));
        v.reals.push_back(0.0);
        CHECK_THROWS_AS(decode_params(v), DimensionMismatch);
        v.reals.resize(ParamVector::size_for(n) - 1);
        CHECK_THROWS_AS(decode_params(v), DimensionMismatch);
    }
}

TEST_CASE("decode_params basics")
{
    const int n = 3;
    ParamVector v{n, std::vector<double>(ParamVector::size_for(n), 0.0)};
    v.reals[0] = 2.0;
    v.reals[ParamVector::corrections_offset(n)] = 1.5;
    v.reals.back() = -0.2;
    const auto p = decode_params(v);
    CHECK((p.basis().unitary() - ComplexMatrix::Identity(4, 4)).norm() < 1e-15);
    CHECK(p.probe_period() == 0.2);
    CHECK(p.corrections()[0] == 1.5);
    CHECK(std::abs(p.initial_state()[0] - 1.0) < 1e-15);

    v.reals.back() = 0.0;
    CHECK_THROWS_AS(decode_params(v), DegenerateError);
    v.reals.back() = 0.1;
    v.reals[0] = 0.0;
    CHECK_THROWS_AS(decode_params(v), DegenerateError);
}

TEST_CASE("random vectors decode to valid protocols")
{
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 8;
        const auto p = decode_params(random_params(n, gen));
        CHECK(p.initial_state().norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.basis().orthonormality_error() < 1e-9);
        CHECK(p.corrections().size() == static_cast<std::size_t>(n) + 1);
        CHECK(p.probe_period() > 0.0);
    }
}

TEST_CASE("encode and decode round trip")
{
    std::mt19937_64 gen(29);
    std::vector<ClockProtocol> protocols{ramsey_protocol(2, 0.07), buzek_protocol(4, false, 0.03),
                                         squeezed_protocol(3, 1.2, 0.1), ghz_protocol(3, 0.02, 0.7)};
    for (int n = 1; n <= 6; ++n) protocols.push_back(decode_params(random_params(n, gen)));

    for (const auto& p : protocols) {
        const auto v = encode_params(p);
        const auto q = decode_params(v);
        CHECK(max_curve_difference(p, q) < 1e-9);
        CHECK(std::equal(p.corrections().begin(), p.corrections().end(), q.corrections().begin()));
        CHECK(q.probe_period() == p.probe_period());

        // Basis angles may come back shifted by whole turns.
        const auto v2 = encode_params(q);
        const int n = p.qubits();
        for (std::size_t i = 0; i < v.reals.size(); ++i) {
            const bool angle = i >= ParamVector::basis_offset(n) && i < ParamVector::corrections_offset(n);
            const double d = angle ? std::remainder(v2.reals[i] - v.reals[i], 2 * pi) : v2.reals[i] - v.reals[i];
            CHECK(std::abs(d) < 1e-9);
        }
    }
}

TEST_CASE("basis row phases do not change the decoded protocol")
{
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> angle(0.0, 2 * pi);
    for (int n : {1, 2, 4, 6}) {
        const auto p = decode_params(random_params(n, gen));
        ComplexMatrix u = p.basis().unitary();
        for (int j = 0; j <= n; ++j) u.row(j) *= std::polar(1.0, angle(gen));
        const ClockProtocol rephased(p.initial_state(), MeasurementBasis(u), {p.corrections().begin(), p.corrections().end()},
                                     p.probe_period());
        CHECK(max_curve_difference(decode_params(encode_params(rephased)), p) < 1e-9);
    }
}
