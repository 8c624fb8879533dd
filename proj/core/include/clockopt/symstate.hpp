#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace clockopt {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

// Upper bound on qubit count; Wigner-d entries stay accurate in double precision here.
inline constexpr int kMaxQubits = 64;

/// A pure state of n qubits restricted to the fully symmetric subspace, written in the
/// Dicke basis |n,m>, where m = 0..n counts excitations.
class SymmetricState {
public:
    /// Takes ownership of n+1 amplitudes; they are not normalized here.
    explicit SymmetricState(std::vector<Complex> amplitudes);

    /// The Dicke basis vector |n,k>.
    static SymmetricState dicke(int n, int k);

    int qubits() const noexcept { return static_cast<int>(amp_.size()) - 1; }
    std::size_t dimension() const noexcept { return amp_.size(); }
    std::span<const Complex> amplitudes() const noexcept { return amp_; }
    const Complex& operator[](std::size_t m) const { return amp_[m]; }
    double norm() const noexcept;

    Eigen::VectorXcd to_vector() const;
    static SymmetricState from_vector(const Eigen::VectorXcd& v);

private:
    std::vector<Complex> amp_;
};

SymmetricState normalize(const SymmetricState& state);

/// Free evolution: |n,m> -> exp(-i m phi) |n,m>.
SymmetricState evolve_phase(const SymmetricState& state, double phi);

/// Sum over m of conj(a_m) b_m.
Complex inner_product(const SymmetricState& a, const SymmetricState& b);

/// Image of the n-fold tensor power of exp(-i theta sigma_y / 2) on the symmetric
/// subspace: the Wigner little-d matrix for j = n/2 with Dicke index k <-> m = j - k.
/// For n = 1 the rows are (cos theta/2, -sin theta/2) and (sin theta/2, cos theta/2).
RealMatrix collective_rotation(int n, double theta);

/// Projective measurement in the symmetric subspace. Stored as the unitary U whose
/// row j is the bra <a_j|, so outcome amplitudes are U * psi.
class MeasurementBasis {
public:
    /// Throws ValidationError if U is not square or not unitary within `tolerance`.
    explicit MeasurementBasis(ComplexMatrix unitary, double tolerance = 1e-10);

    /// Basis from kets |a_j>; row j of the stored unitary becomes conj(a_j).
    static MeasurementBasis from_vectors(const std::vector<SymmetricState>& vectors,
                                         double tolerance = 1e-10);

    int qubits() const noexcept { return static_cast<int>(u_.rows()) - 1; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(u_.rows()); }
    const ComplexMatrix& unitary() const noexcept { return u_; }

    /// The ket |a_j>.
    SymmetricState vector(std::size_t j) const;

    /// max_{i,j} |<a_i|a_j> - delta_ij|
    double orthonormality_error() const;

private:
    ComplexMatrix u_;
};

/// p_j = |<a_j|state>|^2.
std::vector<double> outcome_probabilities(const SymmetricState& state,
                                          const MeasurementBasis& basis);

/// Inverse-CDF sampling: the smallest j whose cumulative probability exceeds `draw`.
std::size_t sample_outcome(std::span<const double> probs, double draw);

/// Outcome probabilities of a fixed state and basis as a function of the accumulated
/// phase, with the products U_jm psi_m folded in once. This is the simulator's inner loop.
class PhaseResponse {
public:
    PhaseResponse(const SymmetricState& state, const MeasurementBasis& basis);

    std::size_t outcomes() const noexcept { return dim_; }

    /// Writes p_j(phi) for all j into `out` (size outcomes()).
    void probabilities(double phi, std::span<double> out) const;

    /// Same result as sample_outcome(probabilities(phi), draw), stopping at the sampled outcome.
    std::size_t sample(double phi, double draw) const;

private:
    void phase_powers(double phi, Complex* powers) const;
    double probability(std::size_t j, const Complex* powers) const;

    std::size_t dim_;
    std::vector<Complex> weights_;  // row-major U_jm psi_m
};

/// Symmetric (Loewdin) orthonormalization U (U^H U)^{-1/2}, the closest unitary to a
/// nearly unitary matrix such as one printed with a few digits.
ComplexMatrix nearest_unitary(const ComplexMatrix& m);

/// gcd of the index differences in the support of `state` (amplitudes above `tol`).
/// Outcome probabilities are then periodic in phi with period 2 pi / g. Returns 0 for a
/// single-component state.
int phase_periodicity(const SymmetricState& state, double tol = 1e-12);

}  // namespace clockopt
