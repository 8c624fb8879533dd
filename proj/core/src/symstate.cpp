#include "clockopt/symstate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "clockopt/error.hpp"

namespace clockopt {

namespace {

void require_same_dimension(std::size_t a, std::size_t b, const char* what)
{
    if (a != b) {
        throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) +
                                " does not match " + std::to_string(b));
    }
}

double log_factorial(int k) { return std::lgamma(static_cast<double>(k) + 1.0); }

}  // namespace

SymmetricState::SymmetricState(std::vector<Complex> amplitudes) : amp_(std::move(amplitudes))
{
    if (amp_.size() < 2) {
        throw ValidationError("symmetric state needs at least 2 amplitudes (n >= 1), got " +
                              std::to_string(amp_.size()));
    }
}

SymmetricState SymmetricState::dicke(int n, int k)
{
    if (n < 1 || k < 0 || k > n) {
        throw ValidationError("Dicke state |" + std::to_string(n) + "," + std::to_string(k) +
                              "> does not exist");
    }
    std::vector<Complex> amp(static_cast<std::size_t>(n) + 1, 0.0);
    amp[static_cast<std::size_t>(k)] = 1.0;
    return SymmetricState(std::move(amp));
}

double SymmetricState::norm() const noexcept
{
    double sum = 0.0;
    for (const auto& a : amp_) sum += std::norm(a);
    return std::sqrt(sum);
}

Eigen::VectorXcd SymmetricState::to_vector() const
{
    return Eigen::Map<const Eigen::VectorXcd>(amp_.data(), static_cast<Eigen::Index>(amp_.size()));
}

SymmetricState SymmetricState::from_vector(const Eigen::VectorXcd& v)
{
    return SymmetricState(std::vector<Complex>(v.data(), v.data() + v.size()));
}

SymmetricState normalize(const SymmetricState& state)
{
    const double norm = state.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw DegenerateError("cannot normalize a zero or non-finite state vector");
    }
    std::vector<Complex> amp(state.amplitudes().begin(), state.amplitudes().end());
    for (auto& a : amp) a /= norm;
    return SymmetricState(std::move(amp));
}

SymmetricState evolve_phase(const SymmetricState& state, double phi)
{
    std::vector<Complex> amp(state.amplitudes().begin(), state.amplitudes().end());
    for (std::size_t m = 1; m < amp.size(); ++m) {
        amp[m] *= std::polar(1.0, -static_cast<double>(m) * phi);
    }
    return SymmetricState(std::move(amp));
}

Complex inner_product(const SymmetricState& a, const SymmetricState& b)
{
    require_same_dimension(a.dimension(), b.dimension(), "inner_product");
    Complex sum = 0.0;
    for (std::size_t m = 0; m < a.dimension(); ++m) sum += std::conj(a[m]) * b[m];
    return sum;
}

RealMatrix collective_rotation(int n, double theta)
{
    if (n < 1 || n > kMaxQubits) throw ValidationError("collective_rotation needs 1 <= n <= 64");

    // d^j_{m'm}(theta) = sum_s (-1)^(m'-m+s) sqrt((j+m')!(j-m')!(j+m)!(j-m)!)
    //     / ((j+m-s)! s! (m'-m+s)! (j-m'-s)!) cos^(2j+m-m'-2s) sin^(m'-m+2s),
    // evaluated with doubled indices so every factorial argument is an integer.
    const int two_j = n;
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    RealMatrix d(n + 1, n + 1);
    for (int row = 0; row <= n; ++row) {
        // j + m' = n - row, j - m' = row
        const int jp_plus = n - row, jp_minus = row;
        for (int col = 0; col <= n; ++col) {
            const int j_plus = n - col, j_minus = col;
            const int dm = jp_plus - j_plus;  // m' - m
            const double log_prefactor =
                0.5 * (log_factorial(jp_plus) + log_factorial(jp_minus) + log_factorial(j_plus) +
                       log_factorial(j_minus));
            const int s_lo = std::max(0, -dm);
            const int s_hi = std::min(j_plus, jp_minus);
            double sum = 0.0;
            for (int k = s_lo; k <= s_hi; ++k) {
                const double log_term = log_prefactor - log_factorial(j_plus - k) - log_factorial(k) -
                                        log_factorial(dm + k) - log_factorial(jp_minus - k);
                const int cos_power = two_j - dm - 2 * k;
                const int sin_power = dm + 2 * k;
                const double sign = ((dm + k) % 2 == 0) ? 1.0 : -1.0;
                sum += sign * std::exp(log_term) * std::pow(c, cos_power) * std::pow(s, sin_power);
            }
            d(row, col) = sum;
        }
    }
    return d;
}

MeasurementBasis::MeasurementBasis(ComplexMatrix unitary, double tolerance) : u_(std::move(unitary))
{
    if (u_.rows() != u_.cols() || u_.rows() < 2) {
        throw ValidationError("measurement basis must be a square matrix of size n+1 >= 2, got " +
                              std::to_string(u_.rows()) + "x" + std::to_string(u_.cols()));
    }
    if (!u_.allFinite()) throw ValidationError("measurement basis has non-finite entries");
    const double err = orthonormality_error();
    if (err > tolerance) {
        throw ValidationError("measurement basis is not orthonormal: max |<a_i|a_j> - delta_ij| = " +
                              std::to_string(err));
    }
}

MeasurementBasis MeasurementBasis::from_vectors(const std::vector<SymmetricState>& vectors,
                                                double tolerance)
{
    if (vectors.empty()) throw ValidationError("measurement basis needs at least one vector");
    const auto dim = static_cast<Eigen::Index>(vectors.front().dimension());
    ComplexMatrix u(static_cast<Eigen::Index>(vectors.size()), dim);
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        require_same_dimension(vectors[j].dimension(), vectors.front().dimension(), "basis vector");
        for (Eigen::Index m = 0; m < dim; ++m) {
            u(static_cast<Eigen::Index>(j), m) = std::conj(vectors[j][static_cast<std::size_t>(m)]);
        }
    }
    return MeasurementBasis(std::move(u), tolerance);
}

SymmetricState MeasurementBasis::vector(std::size_t j) const
{
    return SymmetricState::from_vector(u_.row(static_cast<Eigen::Index>(j)).conjugate().transpose());
}

double MeasurementBasis::orthonormality_error() const
{
    const ComplexMatrix gram = u_ * u_.adjoint();
    return (gram - ComplexMatrix::Identity(u_.rows(), u_.cols())).cwiseAbs().maxCoeff();
}

std::vector<double> outcome_probabilities(const SymmetricState& state, const MeasurementBasis& basis)
{
    require_same_dimension(state.dimension(), basis.size(), "outcome_probabilities");
    const auto& u = basis.unitary();
    const auto dim = static_cast<Eigen::Index>(state.dimension());
    std::vector<double> probs(state.dimension());
    for (Eigen::Index j = 0; j < dim; ++j) {
        Complex amp = 0.0;
        for (Eigen::Index m = 0; m < dim; ++m) amp += u(j, m) * state[static_cast<std::size_t>(m)];
        probs[static_cast<std::size_t>(j)] = std::norm(amp);
    }
    return probs;
}

std::size_t sample_outcome(std::span<const double> probs, double draw)
{
    double cumulative = 0.0;
    std::size_t last_possible = 0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] > 0.0) last_possible = j;
        cumulative += probs[j];
        if (cumulative > draw) return j;
    }
    // Rounding left the total just below the draw.
    return last_possible;
}

PhaseResponse::PhaseResponse(const SymmetricState& state, const MeasurementBasis& basis)
    : dim_(state.dimension()), weights_(state.dimension() * state.dimension())
{
    require_same_dimension(state.dimension(), basis.size(), "PhaseResponse");
    if (state.qubits() > kMaxQubits) throw ValidationError("too many qubits for PhaseResponse");
    const auto& u = basis.unitary();
    for (std::size_t j = 0; j < dim_; ++j) {
        for (std::size_t m = 0; m < dim_; ++m) {
            weights_[j * dim_ + m] = u(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(m)) * state[m];
        }
    }
}

void PhaseResponse::phase_powers(double phi, Complex* powers) const
{
    const Complex step = std::polar(1.0, -phi);
    powers[0] = 1.0;
    for (std::size_t m = 1; m < dim_; ++m) powers[m] = powers[m - 1] * step;
}

double PhaseResponse::probability(std::size_t j, const Complex* powers) const
{
    const Complex* w = weights_.data() + j * dim_;
    double re = 0.0, im = 0.0;
    for (std::size_t m = 0; m < dim_; ++m) {
        re += w[m].real() * powers[m].real() - w[m].imag() * powers[m].imag();
        im += w[m].real() * powers[m].imag() + w[m].imag() * powers[m].real();
    }
    return re * re + im * im;
}

void PhaseResponse::probabilities(double phi, std::span<double> out) const
{
    require_same_dimension(out.size(), dim_, "PhaseResponse::probabilities");
    std::array<Complex, kMaxQubits + 1> powers;
    phase_powers(phi, powers.data());
    for (std::size_t j = 0; j < dim_; ++j) out[j] = probability(j, powers.data());
}

std::size_t PhaseResponse::sample(double phi, double draw) const
{
    std::array<Complex, kMaxQubits + 1> powers;
    phase_powers(phi, powers.data());
    double cumulative = 0.0;
    std::size_t last_possible = 0;
    for (std::size_t j = 0; j < dim_; ++j) {
        const double p = probability(j, powers.data());
        if (p > 0.0) last_possible = j;
        cumulative += p;
        if (cumulative > draw) return j;
    }
    return last_possible;
}

ComplexMatrix nearest_unitary(const ComplexMatrix& m)
{
    Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

int phase_periodicity(const SymmetricState& state, double tol)
{
    int first = -1;
    int g = 0;
    const auto amps = state.amplitudes();
    for (std::size_t m = 0; m < amps.size(); ++m) {
        if (std::abs(amps[m]) <= tol) continue;
        if (first < 0) {
            first = static_cast<int>(m);
        } else {
            g = std::gcd(g, static_cast<int>(m) - first);
        }
    }
    return g;
}

}  // namespace clockopt
