#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "toposhield/spectral.hpp"
#include "toposhield/topology.hpp"

namespace toposhield {

// Synthesis of feedback gains K for the shielded dynamics
// x_{t+1} = (W + K) x_t. A gain preserves the original consensus point
// exactly when
//
//     (i)   K 1 = 0            (1 stays a right eigenvector at 1),
//     (ii)  w'K = 0            (w stays the left Perron vector),
//     (iii) every eigenvalue of W + K other than 1 has modulus < 1.
//
// Three constructions are provided:
//
//   laplacian      K = -alpha (I - W). Respects the communication pattern
//                  (each node only uses its own neighbors) and satisfies
//                  (i)-(iii) for alpha below alpha_critical(W).
//   sparse_kernel  The equality constraints (i)-(ii), restricted to the
//                  allowed support, form a homogeneous linear system; any
//                  kernel vector reassembles into an admissible direction
//                  K0, which is then scaled by the largest epsilon that
//                  keeps (iii).
//   rank1          K = p q' chosen so that (W + K) x0 = x0: the run freezes
//                  at x0 and the observer's data matrix has rank 1, i.e.
//                  the estimate is not even unique. This construction does
//                  not respect the support pattern or condition (iii); its
//                  certificate is attached and normally fails.

// Residuals of the three preservation conditions for a concrete K.
struct PreservationCertificate {
    double res_right = 0.0;   // ||K 1||_inf
    double res_left = 0.0;    // ||w'K||_inf
    double mu2_modulus = 0.0; // max modulus among eigenvalues of W+K, excluding the one nearest 1
    bool perron_simple = false;
    bool pass = false;

    static constexpr double kResidualTol = 1e-8;
};

// Evaluates the certificate for (W, K); eigenvalues of W+K are computed
// fresh. Never throws on a failing K: the certificate simply fails.
PreservationCertificate verify_preservation(const TopologyMatrix& w, const Eigen::MatrixXd& k);

// Largest gain for which the laplacian design is guaranteed stable:
// (1 - r_max) / (1 + r_max). The guarantee is sufficient, not necessary.
double alpha_critical(const TopologyMatrix& w);

enum class FeedbackMethod { laplacian, rank1, sparse_kernel };

const char* to_string(FeedbackMethod m);
FeedbackMethod feedback_method_from_string(const std::string& s);

// Which entries of K are allowed to be nonzero.
//
//   diagonal_and_pattern  off-diagonal entries with W_ij != 0, plus every
//                         diagonal entry. Self-feedback needs no
//                         communication, and the laplacian design itself
//                         uses K_ii != 0 regardless of W_ii; this is the
//                         default.
//   pattern_only          exactly the nonzero pattern of W.
enum class SupportMode { diagonal_and_pattern, pattern_only };

struct LaplacianParams {
    double alpha = 0.0;
};

struct RankOneParams {
    Eigen::VectorXd q;
    double beta = 0.0;
};

enum class KernelCombine { random, max_support };

struct SparseKernelParams {
    double epsilon = 0.0;
    KernelCombine combine = KernelCombine::random;
    std::uint64_t seed = 0;
    double safety = 0.0;
    SupportMode mode = SupportMode::diagonal_and_pattern;
};

using FeedbackParams = std::variant<LaplacianParams, RankOneParams, SparseKernelParams>;

// A synthesized gain with its method, parameters, certificate, and the
// number of off-diagonal entries violating the support constraint.
struct FeedbackMatrix {
    Index n = 0;
    Eigen::MatrixXd K;
    FeedbackMethod method = FeedbackMethod::laplacian;
    FeedbackParams params;
    PreservationCertificate certificate;
    Index sparsity_violations = 0;

    bool sparsity_ok() const { return sparsity_violations == 0; }
};

// Vectorized equality constraints (i)-(ii) restricted to the free support.
// M_tilde has 2n rows and one column per free entry; column_map records the
// (row, col) position each column stands for, in column-stacked order.
// kernel_basis columns are orthonormal and span the admissible directions.
struct ConstraintSystem {
    Eigen::MatrixXd M_tilde;
    SupportPattern free_support;
    std::vector<IndexPair> column_map;
    Index rank = 0;
    Eigen::MatrixXd kernel_basis; // z x (z - rank)

    Index z() const { return M_tilde.cols(); }
    Index kernel_dimension() const { return kernel_basis.cols(); }
};

// Builds the constraint system for W. Rank and kernel are determined by
// singular value decomposition with relative cutoff 1e-10.
ConstraintSystem build_constraint_system(const TopologyMatrix& w,
                                         SupportMode mode = SupportMode::diagonal_and_pattern);

// Reassembles a reduced parameter vector into an n x n matrix, placing
// theta[c] at column_map[c] and zeros elsewhere.
Eigen::MatrixXd assemble_from_support(const Eigen::VectorXd& theta,
                                      const std::vector<IndexPair>& column_map, Index n);

// K = -alpha (I - W). Throws InvalidParameterError for alpha <= 0.
FeedbackMatrix synth_laplacian(const TopologyMatrix& w, double alpha);

// Rank-1 freeze with the default probe q = x0 - mean(x0) 1 (always
// admissible for x0 outside span{1}):
//   beta = w'W x0 / w'x0,  p = (beta x0 - W x0) / q'x0,  K = p q'.
// Throws DegenerateInitialStateError for x0 in span{1} and
// ZeroConsensusValueError when w'x0 = 0.
FeedbackMatrix synth_rank_one(const TopologyMatrix& w, const Eigen::VectorXd& x0);

// Rank-1 freeze with a caller-chosen probe q (must satisfy q'1 = 0 and
// q'x0 != 0, else InvalidParameterError).
FeedbackMatrix synth_rank_one(const TopologyMatrix& w, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& q);

struct EpsilonScaleResult {
    double epsilon = 0.0;
    PreservationCertificate certificate;
};

// Finds the largest epsilon (within factor 1.05) whose certificate for
// K = epsilon K0 passes, starting from the perturbation-theory-safe value
// (1 - r_max) / (2 kappa_V ||K0||_2) when kappa_V is available, and returns
// safety * epsilon_max with its certificate. K0 must satisfy K0 1 = 0 and
// w'K0 = 0 within 1e-8 (InvalidParameterError) and be nonzero
// (DegenerateInputError).
EpsilonScaleResult epsilon_scale(const TopologyMatrix& w, const Eigen::MatrixXd& k0,
                                 double safety);

// Kernel-basis synthesis: combine the basis (standard-normal coefficients
// for `random`, greedy support-maximizing sum for `max_support`), reassemble
// on the free support, and scale by epsilon_scale. Throws InfeasibleError
// when the kernel is trivial.
FeedbackMatrix synth_sparse_kernel(const TopologyMatrix& w, KernelCombine combine,
                                   std::uint64_t seed, double safety,
                                   SupportMode mode = SupportMode::diagonal_and_pattern);

// Feedback JSON: {"method": ..., method parameters..., "K": [[...],...],
// "certificate": {...}, "sparsity_violations": m}
nlohmann::json feedback_json(const FeedbackMatrix& fb);
void save_feedback_file(const std::filesystem::path& path, const FeedbackMatrix& fb);
FeedbackMatrix load_feedback_file(const std::filesystem::path& path);

} // namespace toposhield
