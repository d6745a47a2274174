#pragma once

#include <functional>
#include <vector>

#include "msgs/graph.hpp"
#include "msgs/types.hpp"

namespace msgs {

/// Eigendecomposition of a symmetric matrix: eigenvalues sorted ascending,
/// eigenvector columns orthonormal and paired with eigenvalues. Eigenvector
/// sign convention: first component of magnitude > 1e-12 is positive.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;
};

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
/// Sweeps until the off-diagonal Frobenius norm drops below
/// 1e-12 * max(1, ||m||_F), at most 100 sweeps. Asymmetry beyond 1e-10 is an
/// InputError; hitting the sweep cap is a NumericalError.
SpectralDecomposition eig_sym(const Matrix& m, int max_size = 5000);

/// Graph Fourier transform x_hat = U^T x and its inverse x = U x_hat.
Vector gft(const SpectralDecomposition& d, const Vector& x);
Vector inverse_gft(const SpectralDecomposition& d, const Vector& x_hat);

/// Applies U diag(g(lambda_i)) U^T x.
Vector spectral_filter_apply(const SpectralDecomposition& d,
                             const std::function<double(double)>& response,
                             const Vector& x);

/// Same, with a response specified per eigenvalue index.
Vector spectral_filter_apply(const SpectralDecomposition& d,
                             const Vector& response_per_index, const Vector& x);

/// Convolution-theorem self-consistency: evaluates
/// U((U^T f) elementwise* (U^T x)) both directly and through the diagonal
/// filter route with g = U^T f, and returns the max elementwise deviation.
double verify_convolution_theorem(const SpectralDecomposition& d, const Vector& f,
                                  const Vector& x);

/// Closed-form frequency responses over lambda in [0, 2].
///   Gcn:       (2 - lambda)^K
///   FagcnLow:  (1 - lambda + eps)^K
///   FagcnHigh: (lambda - 1 + eps)^K
///   RfaGnn:    (alpha + beta - beta*lambda)^K
///   Msgs:      sum_k gamma_k (alpha_k + beta_k - beta_k*lambda)^k, k = 0..K
struct FilterSpec {
  enum class Family { Gcn, FagcnLow, FagcnHigh, RfaGnn, Msgs };

  struct Scale {
    double alpha = 1.0;   // in (0, 1]
    double beta = 0.0;    // in (-1, 1)
    double gamma = 0.0;   // unconstrained, signed
  };

  Family family = Family::Gcn;
  int order = 1;                // K >= 1
  double epsilon = 0.0;         // FAGCN, in [0, 1]
  double alpha = 1.0;           // RFA-GNN
  double beta = 0.0;            // RFA-GNN
  std::vector<Scale> scales;    // MSGS, size K + 1

  static FilterSpec gcn(int k);
  static FilterSpec fagcn_low(int k, double eps);
  static FilterSpec fagcn_high(int k, double eps);
  static FilterSpec rfa_gnn(int k, double alpha, double beta);
  static FilterSpec msgs(std::vector<Scale> scales);
};

struct ResponseCurve {
  Vector lambdas;      // strictly increasing, within [0, 2]
  Vector amplitudes;   // g(lambda), same length
  FilterSpec spec;
};

/// Uniform sample grid on [0, 2]; n >= 2.
Vector response_grid(int n = 256);

/// Evaluates the closed-form response at the given sample points.
/// Parameters outside their declared ranges are an InputError.
ResponseCurve response_closed_form(const FilterSpec& spec, const Vector& lambdas);

/// Integer power by binary exponentiation; exact for exact bases.
double ipow(double base, int exponent);

/// Power-iteration check of the deep-propagation limit: repeatedly applies
/// the GCN-renormalized propagation to x and reports the first step K where
/// the normalized iterate is within tol (inf-norm) of the +/- sqrt(d_i + 1)
/// profile. Requires a connected graph and x not orthogonal to the profile.
struct OversmoothingReport {
  bool converged = false;
  int k_converged = -1;
  double limit_error = 0.0;  // final inf-norm deviation
};

OversmoothingReport verify_oversmoothing_limit(const Graph& g, const Vector& x,
                                               int k_max, double tol);

/// One target term c1 * (lambda - c2)^order of a polynomial in lambda.
struct PolyTerm {
  int order = 0;
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Constructs MSGS per-scale parameters (alpha, beta, gamma) whose response
/// equals sum_terms c1 (lambda - c2)^order / scale_c. Terms with order >= 1
/// need |c2 - 1| >= 1e-6 to be reachable under alpha in (0, 1], beta in
/// (-1, 1); an unreachable term is an InputError naming the term. The result
/// is verified on a 64-point grid to 1e-8 before it is returned.
FilterSpec fit_msgs_params_to_polynomial(const std::vector<PolyTerm>& terms,
                                         double scale_c);

}  // namespace msgs
