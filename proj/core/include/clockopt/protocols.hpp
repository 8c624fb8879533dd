#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "clockopt/symstate.hpp"

namespace clockopt {

/// Initial state, measurement basis, one frequency correction per outcome (Hz) and the
/// free-evolution period T (s). Validated on construction.
class ClockProtocol {
public:
    ClockProtocol(SymmetricState initial_state, MeasurementBasis basis, std::vector<double> corrections_hz,
                  double probe_period);

    int qubits() const noexcept { return initial_state_.qubits(); }
    const SymmetricState& initial_state() const noexcept { return initial_state_; }
    const MeasurementBasis& basis() const noexcept { return basis_; }
    std::span<const double> corrections() const noexcept { return corrections_; }
    double probe_period() const noexcept { return probe_period_; }

    ClockProtocol with_corrections(std::vector<double> corrections_hz) const;
    ClockProtocol with_probe_period(double probe_period) const;

private:
    SymmetricState initial_state_;
    MeasurementBasis basis_;
    std::vector<double> corrections_;
    double probe_period_;
};

/// Flat real encoding of a protocol: 2n+1 state reals, n^2+n basis reals (one angle and
/// one phase per Givens rotation), n+1 corrections in Hz, then T.
struct ParamVector {
    int n = 0;
    std::vector<double> reals;

    static constexpr std::size_t size_for(int n) noexcept
    {
        const auto q = static_cast<std::size_t>(n);
        return q * q + 4 * q + 3;
    }
    static constexpr std::size_t state_offset(int) noexcept { return 0; }
    static constexpr std::size_t basis_offset(int n) noexcept { return 2 * static_cast<std::size_t>(n) + 1; }
    static constexpr std::size_t corrections_offset(int n) noexcept
    {
        const auto q = static_cast<std::size_t>(n);
        return basis_offset(n) + q * q + q;
    }
    static constexpr std::size_t period_offset(int n) noexcept
    {
        return corrections_offset(n) + static_cast<std::size_t>(n) + 1;
    }
};

/// Prior width used when none is given: sigma_phi = 2 pi sigma_f T = 1 rad.
double default_prior_sigma_hz(double probe_period);

/// Posterior mean E[f | outcome j] under a zero-mean Gaussian prior of width
/// `prior_sigma_hz`, by fixed-grid quadrature over [-5 sigma, 5 sigma].
/// Outcomes with prior mass below 1e-12 get 0.
std::vector<double> init_corrections(const SymmetricState& initial_state, const MeasurementBasis& basis,
                                     double probe_period, double prior_sigma_hz);
std::vector<double> init_corrections(const ClockProtocol& protocol, double prior_sigma_hz);

SymmetricState ramsey_state(int n);
/// Collective pi/2 y-rotation followed by excitation counting.
MeasurementBasis ramsey_basis(int n);
ClockProtocol ramsey_protocol(int n, double probe_period);

/// Basis {(|n,0> + e^{i chi}|n,n>)/sqrt2, |n,1>, ..., |n,n-1>, (|n,0> - e^{i chi}|n,n>)/sqrt2}.
/// With readout phase chi the reachable outcomes have p = (1 +- cos(n phi + chi))/2.
MeasurementBasis ghz_basis(int n, double readout_phase = 0.0);
SymmetricState ghz_state(int n);
ClockProtocol ghz_protocol(int n, double probe_period, double readout_phase = 0.0);

/// Amplitude at excitation k proportional to (-1)^k exp(-((k - n/2)/kappa)^2).
SymmetricState squeezed_state(int n, double kappa);
/// The squeezed state turned by a collective z-rotation onto the Ramsey state's axis, so
/// the Ramsey readout measures the phase to first order.
ClockProtocol squeezed_protocol(int n, double kappa, double probe_period);

SymmetricState buzek_state(int n);
/// Fourier basis a_{j,m} = e^{i m phi_j} / sqrt(n+1), phi_j = 2 pi (j + shift) / (n+1),
/// shift = 1/2 when `half_shift`.
MeasurementBasis buzek_basis(int n, bool half_shift);
ClockProtocol buzek_protocol(int n, bool half_shift, double probe_period);

/// Inverse of encode_params up to row phases of the basis. Throws DimensionMismatch on a
/// wrong length and DegenerateError on a zero state or zero probe period.
ClockProtocol decode_params(const ParamVector& params);
ParamVector encode_params(const ClockProtocol& protocol);

/// Order of the (column, row) pairs addressed by the Givens rotations in a ParamVector.
std::vector<std::pair<int, int>> givens_pairs(int n);

}  // namespace clockopt
