#include "clockopt/protocols.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "clockopt/error.hpp"

namespace clockopt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kStateNormTolerance = 1e-10;
constexpr int kQuadraturePoints = 4001;
constexpr double kUnreachableMass = 1e-12;

void require_qubits(int n, int min_n, const char* family)
{
    if (n < min_n || n > kMaxQubits) {
        throw ValidationError(std::string(family) + " protocol needs " + std::to_string(min_n) +
                              " <= n <= " + std::to_string(kMaxQubits) + ", got " + std::to_string(n));
    }
}

void require_period(double t)
{
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw ValidationError("probe period must be positive and finite, got " + std::to_string(t));
    }
}

}  // namespace

ClockProtocol::ClockProtocol(SymmetricState initial_state, MeasurementBasis basis,
                             std::vector<double> corrections_hz, double probe_period)
    : initial_state_(std::move(initial_state)),
      basis_(std::move(basis)),
      corrections_(std::move(corrections_hz)),
      probe_period_(probe_period)
{
    if (basis_.size() != initial_state_.dimension()) {
        throw DimensionMismatch("protocol basis has " + std::to_string(basis_.size()) +
                                " vectors but the initial state has dimension " +
                                std::to_string(initial_state_.dimension()));
    }
    const double norm = initial_state_.norm();
    if (std::abs(norm - 1.0) > kStateNormTolerance) {
        throw ValidationError("protocol initial state is not normalized (norm " + std::to_string(norm) + ")");
    }
    if (corrections_.size() != initial_state_.dimension()) {
        throw DimensionMismatch("protocol needs n+1 = " + std::to_string(initial_state_.dimension()) +
                                " corrections, got " + std::to_string(corrections_.size()));
    }
    for (const double c : corrections_) {
        if (!std::isfinite(c)) throw ValidationError("protocol correction is not finite");
    }
    if (!(probe_period_ > 0.0) || !std::isfinite(probe_period_)) {
        throw ValidationError("protocol probe period must be positive and finite");
    }
}

ClockProtocol ClockProtocol::with_corrections(std::vector<double> corrections_hz) const
{
    return ClockProtocol(initial_state_, basis_, std::move(corrections_hz), probe_period_);
}

ClockProtocol ClockProtocol::with_probe_period(double probe_period) const
{
    return ClockProtocol(initial_state_, basis_, corrections_, probe_period);
}

double default_prior_sigma_hz(double probe_period) { return 1.0 / (2.0 * kPi * probe_period); }

std::vector<double> init_corrections(const SymmetricState& initial_state, const MeasurementBasis& basis,
                                     double probe_period, double prior_sigma_hz)
{
    require_period(probe_period);
    if (!(prior_sigma_hz > 0.0) || !std::isfinite(prior_sigma_hz)) {
        throw ValidationError("prior sigma must be positive");
    }
    const PhaseResponse response(initial_state, basis);
    const std::size_t outcomes = response.outcomes();
    std::vector<double> mass(outcomes, 0.0), first_moment(outcomes, 0.0), probs(outcomes);

    const double half_width = 5.0 * prior_sigma_hz;
    const double step = 2.0 * half_width / (kQuadraturePoints - 1);
    double total_weight = 0.0;
    for (int i = 0; i < kQuadraturePoints; ++i) {
        const double f = -half_width + step * i;
        const double z = f / prior_sigma_hz;
        // trapezoid end weights
        const double w = ((i == 0 || i == kQuadraturePoints - 1) ? 0.5 : 1.0) * std::exp(-0.5 * z * z);
        total_weight += w;
        response.probabilities(2.0 * kPi * f * probe_period, probs);
        for (std::size_t j = 0; j < outcomes; ++j) {
            mass[j] += w * probs[j];
            first_moment[j] += w * probs[j] * f;
        }
    }

    std::vector<double> corrections(outcomes, 0.0);
    for (std::size_t j = 0; j < outcomes; ++j) {
        if (mass[j] / total_weight >= kUnreachableMass) corrections[j] = first_moment[j] / mass[j];
    }
    return corrections;
}

std::vector<double> init_corrections(const ClockProtocol& protocol, double prior_sigma_hz)
{
    return init_corrections(protocol.initial_state(), protocol.basis(), protocol.probe_period(), prior_sigma_hz);
}

SymmetricState ramsey_state(int n)
{
    require_qubits(n, 1, "ramsey");
    // ((1, -i)/sqrt2)^{(x)n} has amplitude sqrt(C(n,k)) (-i)^k / 2^{n/2} on |n,k>.
    std::vector<Complex> amp(static_cast<std::size_t>(n) + 1);
    const Complex minus_i(0.0, -1.0);
    Complex phase = 1.0;
    for (int k = 0; k <= n; ++k) {
        const double log_binomial = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
        amp[static_cast<std::size_t>(k)] = std::exp(0.5 * log_binomial - 0.5 * n * std::numbers::ln2) * phase;
        phase *= minus_i;
    }
    return normalize(SymmetricState(std::move(amp)));
}

MeasurementBasis ramsey_basis(int n)
{
    require_qubits(n, 1, "ramsey");
    return MeasurementBasis(collective_rotation(n, kPi / 2.0).cast<Complex>());
}

ClockProtocol ramsey_protocol(int n, double probe_period)
{
    require_period(probe_period);
    auto state = ramsey_state(n);
    auto basis = ramsey_basis(n);
    auto corrections = init_corrections(state, basis, probe_period, default_prior_sigma_hz(probe_period));
    return ClockProtocol(std::move(state), std::move(basis), std::move(corrections), probe_period);
}

SymmetricState ghz_state(int n)
{
    require_qubits(n, 2, "ghz");
    std::vector<Complex> amp(static_cast<std::size_t>(n) + 1, 0.0);
    amp.front() = std::numbers::sqrt2 / 2.0;
    amp.back() = std::numbers::sqrt2 / 2.0;
    return SymmetricState(std::move(amp));
}

MeasurementBasis ghz_basis(int n, double readout_phase)
{
    require_qubits(n, 2, "ghz");
    const auto dim = static_cast<std::size_t>(n) + 1;
    const Complex tail = std::polar(1.0, readout_phase);
    std::vector<SymmetricState> kets;
    kets.reserve(dim);
    std::vector<Complex> plus(dim, 0.0), minus(dim, 0.0);
    plus.front() = minus.front() = std::numbers::sqrt2 / 2.0;
    plus.back() = tail * (std::numbers::sqrt2 / 2.0);
    minus.back() = -tail * (std::numbers::sqrt2 / 2.0);
    kets.emplace_back(std::move(plus));
    for (int k = 1; k < n; ++k) kets.push_back(SymmetricState::dicke(n, k));
    kets.emplace_back(std::move(minus));
    return MeasurementBasis::from_vectors(kets);
}

ClockProtocol ghz_protocol(int n, double probe_period, double readout_phase)
{
    require_period(probe_period);
    auto state = ghz_state(n);
    auto basis = ghz_basis(n, readout_phase);
    auto corrections = init_corrections(state, basis, probe_period, default_prior_sigma_hz(probe_period));
    return ClockProtocol(std::move(state), std::move(basis), std::move(corrections), probe_period);
}

SymmetricState squeezed_state(int n, double kappa)
{
    require_qubits(n, 1, "squeezed");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw ValidationError("squeezing parameter kappa must be positive, got " + std::to_string(kappa));
    }
    // Relative to the largest term so tiny kappa collapses cleanly onto the central states.
    std::vector<double> exponent(static_cast<std::size_t>(n) + 1);
    double smallest = INFINITY;
    for (int k = 0; k <= n; ++k) {
        const double m = k - 0.5 * n;
        exponent[static_cast<std::size_t>(k)] = (m / kappa) * (m / kappa);
        smallest = std::min(smallest, exponent[static_cast<std::size_t>(k)]);
    }
    std::vector<Complex> amp(exponent.size());
    for (int k = 0; k <= n; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        amp[static_cast<std::size_t>(k)] = sign * std::exp(smallest - exponent[static_cast<std::size_t>(k)]);
    }
    return normalize(SymmetricState(std::move(amp)));
}

ClockProtocol squeezed_protocol(int n, double kappa, double probe_period)
{
    require_period(probe_period);
    // (-1)^k -> (-i)^k, the phase pattern of the Ramsey state.
    auto state = evolve_phase(squeezed_state(n, kappa), -kPi / 2.0);
    auto basis = ramsey_basis(n);
    auto corrections = init_corrections(state, basis, probe_period, default_prior_sigma_hz(probe_period));
    return ClockProtocol(std::move(state), std::move(basis), std::move(corrections), probe_period);
}

SymmetricState buzek_state(int n)
{
    require_qubits(n, 1, "buzek");
    std::vector<Complex> amp(static_cast<std::size_t>(n) + 1);
    const double scale = std::sqrt(2.0 / (n + 1.0));
    for (int m = 0; m <= n; ++m) {
        amp[static_cast<std::size_t>(m)] = scale * std::sin(kPi * (m + 0.5) / (n + 1.0));
    }
    return SymmetricState(std::move(amp));
}

MeasurementBasis buzek_basis(int n, bool half_shift)
{
    require_qubits(n, 1, "buzek");
    const auto dim = static_cast<std::size_t>(n) + 1;
    const double shift = half_shift ? 0.5 : 0.0;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    std::vector<SymmetricState> kets;
    kets.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        const double phi_j = 2.0 * kPi * (static_cast<double>(j) + shift) / static_cast<double>(dim);
        std::vector<Complex> amp(dim);
        for (std::size_t m = 0; m < dim; ++m) amp[m] = std::polar(scale, static_cast<double>(m) * phi_j);
        kets.emplace_back(std::move(amp));
    }
    return MeasurementBasis::from_vectors(kets);
}

ClockProtocol buzek_protocol(int n, bool half_shift, double probe_period)
{
    require_period(probe_period);
    auto state = buzek_state(n);
    auto basis = buzek_basis(n, half_shift);
    auto corrections = init_corrections(state, basis, probe_period, default_prior_sigma_hz(probe_period));
    return ClockProtocol(std::move(state), std::move(basis), std::move(corrections), probe_period);
}

std::vector<std::pair<int, int>> givens_pairs(int n)
{
    // Elimination order of encode_params: last row first, left to right.
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n * (n + 1) / 2));
    for (int row = n; row >= 1; --row) {
        for (int col = 0; col < row; ++col) pairs.emplace_back(col, row);
    }
    return pairs;
}

ClockProtocol decode_params(const ParamVector& params)
{
    const int n = params.n;
    if (n < 1 || n > kMaxQubits) throw ValidationError("parameter vector has invalid qubit count");
    if (params.reals.size() != ParamVector::size_for(n)) {
        throw DimensionMismatch("parameter vector for n=" + std::to_string(n) + " needs " +
                                std::to_string(ParamVector::size_for(n)) + " reals, got " +
                                std::to_string(params.reals.size()));
    }
    for (const double v : params.reals) {
        if (!std::isfinite(v)) throw ValidationError("parameter vector has non-finite entries");
    }
    const auto dim = static_cast<std::size_t>(n) + 1;
    const auto& r = params.reals;

    std::vector<Complex> amp(dim);
    amp[0] = r[0];
    for (std::size_t m = 1; m < dim; ++m) amp[m] = Complex(r[2 * m - 1], r[2 * m]);
    auto state = normalize(SymmetricState(std::move(amp)));

    ComplexMatrix u = ComplexMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    std::size_t offset = ParamVector::basis_offset(n);
    for (const auto& [p, q] : givens_pairs(n)) {
        const double theta = r[offset++];
        const double chi = r[offset++];
        const double c = std::cos(theta), s = std::sin(theta);
        const Complex e = std::polar(1.0, chi);
        const Eigen::RowVectorXcd row_p = u.row(p);
        const Eigen::RowVectorXcd row_q = u.row(q);
        u.row(p) = c * row_p - e * s * row_q;
        u.row(q) = std::conj(e) * s * row_p + c * row_q;
    }
    // Givens products of exact rotations drift from unitarity only by rounding.
    MeasurementBasis basis(std::move(u), 1e-9);

    const auto corr_begin = r.begin() + static_cast<std::ptrdiff_t>(ParamVector::corrections_offset(n));
    std::vector<double> corrections(corr_begin, corr_begin + static_cast<std::ptrdiff_t>(dim));

    const double period = std::abs(r[ParamVector::period_offset(n)]);
    if (period == 0.0) throw DegenerateError("parameter vector decodes to a zero probe period");

    return ClockProtocol(std::move(state), std::move(basis), std::move(corrections), period);
}

ParamVector encode_params(const ClockProtocol& protocol)
{
    const int n = protocol.qubits();
    const auto dim = static_cast<std::size_t>(n) + 1;
    ParamVector params{n, std::vector<double>(ParamVector::size_for(n), 0.0)};
    auto& r = params.reals;

    const auto& psi = protocol.initial_state();
    const Complex gauge = std::abs(psi[0]) > 0.0 ? std::conj(psi[0]) / std::abs(psi[0]) : Complex(1.0);
    r[0] = (psi[0] * gauge).real();
    for (std::size_t m = 1; m < dim; ++m) {
        const Complex a = psi[m] * gauge;
        r[2 * m - 1] = a.real();
        r[2 * m] = a.imag();
    }

    // Right-multiply by G^H for each pair until only a diagonal of phases remains;
    // then U = D G_K ... G_1 and dropping D leaves every outcome probability unchanged.
    ComplexMatrix w = protocol.basis().unitary();
    std::size_t offset = ParamVector::basis_offset(n);
    for (const auto& [col, row] : givens_pairs(n)) {
        const Complex x = w(row, col);
        const Complex y = w(row, row);
        double theta = 0.0, chi = 0.0;
        if (std::abs(x) > 0.0) {
            theta = std::atan2(std::abs(x), std::abs(y));
            chi = (std::abs(y) > 0.0 ? std::arg(y) : 0.0) - std::arg(x);
        }
        const double c = std::cos(theta), s = std::sin(theta);
        const Complex e = std::polar(1.0, chi);
        const Eigen::VectorXcd col_c = w.col(col);
        const Eigen::VectorXcd col_r = w.col(row);
        w.col(col) = c * col_c - std::conj(e) * s * col_r;
        w.col(row) = e * s * col_c + c * col_r;
        r[offset++] = theta;
        r[offset++] = chi;
    }

    const auto corrections = protocol.corrections();
    std::copy(corrections.begin(), corrections.end(),
              r.begin() + static_cast<std::ptrdiff_t>(ParamVector::corrections_offset(n)));
    r[ParamVector::period_offset(n)] = protocol.probe_period();
    return params;
}

}  // namespace clockopt
