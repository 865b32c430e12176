#pragma once

#include <optional>

#include <Eigen/Core>

#include "toposhield/errors.hpp"
#include "toposhield/topology.hpp"

namespace toposhield {

// Default tolerance for identifying the Perron eigenvalue at 1.
inline constexpr double kEigTol = 1e-8;

// Eigenvector-basis condition numbers above 1/kDiagonalizableRcond mean the
// matrix is treated as numerically non-diagonalizable: kappa_V is withheld
// and perturbation bounds relying on it are skipped.
inline constexpr double kDiagonalizableRcond = 1e-8;

// Outcome of checking the consensus-admissibility conditions:
// row-stochastic, eigenvalue 1 simple, all other eigenvalues strictly
// inside the unit circle.
struct ConsensusValidation {
    bool row_stochastic = false;
    bool perron_simple = false;   // exactly one eigenvalue within tol of 1
    bool spectrum_inside = false; // every other eigenvalue has modulus < 1
    double r_max = 0.0;           // max modulus among eigenvalues 2..n

    bool ok() const { return row_stochastic && perron_simple && spectrum_inside; }
};

// Thrown when an operation requires a consensus-admissible matrix and the
// check fails; carries the failed report.
class ConsensusViolationError : public Error {
public:
    ConsensusViolationError(const std::string& what, ConsensusValidation report)
        : Error(what), report(report) {}

    ConsensusValidation report;
};

// Checks the consensus-admissibility conditions on a raw square matrix.
// Throws MalformedInputError on non-square or non-finite input. `tol` is the
// eigenvalue-proximity tolerance for identifying the Perron root.
ConsensusValidation validate_consensus(const Eigen::MatrixXd& w, double tol = kEigTol);
ConsensusValidation validate_consensus(const TopologyMatrix& w, double tol = kEigTol);

// Spectral data of a consensus-admissible topology.
//
// eigenvalues are sorted by descending modulus (ties broken by descending
// real, then imaginary, part), so eigenvalues[0] is the Perron root 1.
// left_perron is the left eigenvector w at eigenvalue 1, scaled to w'1 = 1;
// it determines the consensus value w'x0. kappa_V is the 2-norm condition
// number of the unit-column right-eigenvector matrix, absent when the
// matrix is flagged non-diagonalizable.
struct SpectralProfile {
    Eigen::VectorXcd eigenvalues;
    Eigen::VectorXd left_perron;
    double r_max = 0.0;
    std::optional<double> kappa_V;
    bool diagonalizable = true;
};

// Computes the spectral profile. Throws ConsensusViolationError when the
// admissibility check fails.
SpectralProfile spectral_profile(const TopologyMatrix& w, double tol = kEigTol);

} // namespace toposhield
