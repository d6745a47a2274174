#include "msgs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace msgs {

namespace {

double offdiag_norm(const Matrix& a) {
  const double total = a.squaredNorm();
  const double diag = a.diagonal().squaredNorm();
  return std::sqrt(std::max(0.0, total - diag));
}

void check_length(const SpectralDecomposition& d, const Vector& x, const char* op) {
  if (x.size() != d.eigenvectors.rows()) {
    throw InputError(std::string(op) + ": signal length " + std::to_string(x.size()) +
                     " does not match " + std::to_string(d.eigenvectors.rows()) +
                     " nodes");
  }
}

}  // namespace

double ipow(double base, int exponent) {
  double result = 1.0;
  double b = base;
  for (int e = exponent; e > 0; e >>= 1) {
    if (e & 1) result *= b;
    b *= b;
  }
  return result;
}

SpectralDecomposition eig_sym(const Matrix& m, int max_size) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw InputError("eig_sym: matrix not square");
  if (n > max_size) {
    throw InputError("eig_sym: size " + std::to_string(n) + " exceeds cap " +
                     std::to_string(max_size));
  }
  if (n == 0) return {Vector(0), Matrix(0, 0)};
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InputError("eig_sym: input not symmetric to 1e-10");
  }

  Matrix a = 0.5 * (m + m.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double tol = 1e-12 * std::max(1.0, a.norm());
  constexpr int kMaxSweeps = 100;

  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (offdiag_norm(a) <= tol) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = c * arp - s * arq;
          a(r, q) = a(q, r) = s * arp + c * arq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (int r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  if (offdiag_norm(a) > tol) {
    throw NumericalError("eig_sym: no convergence after " +
                         std::to_string(sweep) + " sweeps, off-diagonal norm " +
                         std::to_string(offdiag_norm(a)));
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&a](int i, int j) { return a(i, i) < a(j, j); });

  SpectralDecomposition d;
  d.eigenvalues.resize(n);
  d.eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    d.eigenvalues[i] = a(order[i], order[i]);
    Vector col = v.col(order[i]);
    for (int r = 0; r < n; ++r) {
      if (std::abs(col[r]) > 1e-12) {
        if (col[r] < 0) col = -col;
        break;
      }
    }
    d.eigenvectors.col(i) = col;
  }
  return d;
}

Vector gft(const SpectralDecomposition& d, const Vector& x) {
  check_length(d, x, "gft");
  return d.eigenvectors.transpose() * x;
}

Vector inverse_gft(const SpectralDecomposition& d, const Vector& x_hat) {
  check_length(d, x_hat, "inverse_gft");
  return d.eigenvectors * x_hat;
}

Vector spectral_filter_apply(const SpectralDecomposition& d,
                             const std::function<double(double)>& response,
                             const Vector& x) {
  Vector amp(d.eigenvalues.size());
  for (int i = 0; i < amp.size(); ++i) amp[i] = response(d.eigenvalues[i]);
  return spectral_filter_apply(d, amp, x);
}

Vector spectral_filter_apply(const SpectralDecomposition& d,
                             const Vector& response_per_index, const Vector& x) {
  check_length(d, x, "spectral_filter_apply");
  if (response_per_index.size() != d.eigenvalues.size()) {
    throw InputError("spectral_filter_apply: response length mismatch");
  }
  return d.eigenvectors *
         (response_per_index.cwiseProduct(d.eigenvectors.transpose() * x));
}

double verify_convolution_theorem(const SpectralDecomposition& d, const Vector& f,
                                  const Vector& x) {
  check_length(d, f, "verify_convolution_theorem");
  check_length(d, x, "verify_convolution_theorem");
  const Vector f_hat = gft(d, f);
  const Vector x_hat = gft(d, x);
  const Vector direct = inverse_gft(d, f_hat.cwiseProduct(x_hat));
  const Vector filtered = spectral_filter_apply(d, f_hat, x);
  return (direct - filtered).cwiseAbs().maxCoeff();
}

FilterSpec FilterSpec::gcn(int k) {
  FilterSpec s;
  s.family = Family::Gcn;
  s.order = k;
  return s;
}

FilterSpec FilterSpec::fagcn_low(int k, double eps) {
  FilterSpec s;
  s.family = Family::FagcnLow;
  s.order = k;
  s.epsilon = eps;
  return s;
}

FilterSpec FilterSpec::fagcn_high(int k, double eps) {
  FilterSpec s;
  s.family = Family::FagcnHigh;
  s.order = k;
  s.epsilon = eps;
  return s;
}

FilterSpec FilterSpec::rfa_gnn(int k, double alpha, double beta) {
  FilterSpec s;
  s.family = Family::RfaGnn;
  s.order = k;
  s.alpha = alpha;
  s.beta = beta;
  return s;
}

FilterSpec FilterSpec::msgs(std::vector<Scale> scales) {
  FilterSpec s;
  s.family = Family::Msgs;
  s.order = static_cast<int>(scales.size()) - 1;
  s.scales = std::move(scales);
  return s;
}

Vector response_grid(int n) {
  if (n < 2) throw InputError("response_grid: need at least 2 points");
  Vector grid(n);
  for (int i = 0; i < n; ++i) grid[i] = 2.0 * i / (n - 1);
  return grid;
}

namespace {

void validate_scale(const FilterSpec::Scale& s, int k) {
  if (!(s.alpha > 0.0 && s.alpha <= 1.0)) {
    throw InputError("response: scale " + std::to_string(k) + " alpha " +
                     std::to_string(s.alpha) + " outside (0, 1]");
  }
  if (!(s.beta > -1.0 && s.beta < 1.0)) {
    throw InputError("response: scale " + std::to_string(k) + " beta " +
                     std::to_string(s.beta) + " outside (-1, 1)");
  }
}

void validate_spec(const FilterSpec& spec) {
  if (spec.order < 1) throw InputError("response: order K must be >= 1");
  switch (spec.family) {
    case FilterSpec::Family::Gcn:
      break;
    case FilterSpec::Family::FagcnLow:
    case FilterSpec::Family::FagcnHigh:
      if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0)) {
        throw InputError("response: epsilon " + std::to_string(spec.epsilon) +
                         " outside [0, 1]");
      }
      break;
    case FilterSpec::Family::RfaGnn: {
      FilterSpec::Scale s{spec.alpha, spec.beta, 0.0};
      validate_scale(s, 0);
      break;
    }
    case FilterSpec::Family::Msgs: {
      if (static_cast<int>(spec.scales.size()) != spec.order + 1) {
        throw InputError("response: MSGS needs K + 1 scale entries");
      }
      for (int k = 0; k <= spec.order; ++k) validate_scale(spec.scales[k], k);
      break;
    }
  }
}

}  // namespace

ResponseCurve response_closed_form(const FilterSpec& spec, const Vector& lambdas) {
  validate_spec(spec);
  if (lambdas.size() == 0) throw InputError("response: empty sample grid");
  for (int i = 0; i < lambdas.size(); ++i) {
    if (lambdas[i] < -1e-12 || lambdas[i] > 2.0 + 1e-12) {
      throw InputError("response: sample point " + std::to_string(lambdas[i]) +
                       " outside [0, 2]");
    }
    if (i > 0 && lambdas[i] <= lambdas[i - 1]) {
      throw InputError("response: sample points must be strictly increasing");
    }
  }

  ResponseCurve curve;
  curve.spec = spec;
  curve.lambdas = lambdas;
  curve.amplitudes.resize(lambdas.size());
  for (int i = 0; i < lambdas.size(); ++i) {
    const double l = lambdas[i];
    double g = 0.0;
    switch (spec.family) {
      case FilterSpec::Family::Gcn:
        g = ipow(2.0 - l, spec.order);
        break;
      case FilterSpec::Family::FagcnLow:
        g = ipow(1.0 - l + spec.epsilon, spec.order);
        break;
      case FilterSpec::Family::FagcnHigh:
        g = ipow(l - 1.0 + spec.epsilon, spec.order);
        break;
      case FilterSpec::Family::RfaGnn:
        g = ipow(spec.alpha + spec.beta - spec.beta * l, spec.order);
        break;
      case FilterSpec::Family::Msgs:
        for (int k = 0; k <= spec.order; ++k) {
          const auto& s = spec.scales[k];
          g += s.gamma * ipow(s.alpha + s.beta - s.beta * l, k);
        }
        break;
    }
    curve.amplitudes[i] = g;
  }
  return curve;
}

OversmoothingReport verify_oversmoothing_limit(const Graph& g, const Vector& x,
                                               int k_max, double tol) {
  if (x.size() != g.num_nodes) {
    throw InputError("verify_oversmoothing_limit: signal length mismatch");
  }
  if (!is_connected(g)) {
    throw InputError("verify_oversmoothing_limit: graph not connected");
  }
  Vector profile = (g.degrees.cast<double>().array() + 1.0).sqrt().matrix();
  profile /= profile.norm();
  const double xn = x.norm();
  if (xn == 0.0 || std::abs(profile.dot(x)) < 1e-12 * xn) {
    throw InputError("verify_oversmoothing_limit: signal orthogonal to limit");
  }

  const PropagationMatrix prop =
      propagation_matrix(g, PropagationKind::GcnRenormalized);
  Vector y = x;
  OversmoothingReport report;
  for (int k = 0; k <= k_max; ++k) {
    const Vector unit = y / y.norm();
    const double sign = profile.dot(unit) >= 0 ? 1.0 : -1.0;
    const double err = (unit - sign * profile).cwiseAbs().maxCoeff();
    report.limit_error = err;
    if (err < tol) {
      report.converged = true;
      report.k_converged = k;
      return report;
    }
    y = prop.matrix * y;
  }
  return report;
}

FilterSpec fit_msgs_params_to_polynomial(const std::vector<PolyTerm>& terms,
                                         double scale_c) {
  if (scale_c == 0.0) throw InputError("fit: scale C must be nonzero");
  int max_order = 1;
  for (const auto& t : terms) {
    if (t.order < 0) throw InputError("fit: negative term order");
    max_order = std::max(max_order, t.order);
  }

  std::vector<FilterSpec::Scale> scales(max_order + 1, {1.0, 0.5, 0.0});
  std::vector<char> seen(max_order + 1, 0);
  for (const auto& t : terms) {
    if (seen[t.order]) {
      throw InputError("fit: duplicate term of order " + std::to_string(t.order));
    }
    seen[t.order] = 1;
    if (t.order == 0) {
      scales[0].gamma = t.c1 / scale_c;
      continue;
    }
    if (t.c1 == 0.0) continue;
    if (std::abs(t.c2 - 1.0) < 1e-6) {
      throw InputError("fit: term of order " + std::to_string(t.order) +
                       " has c2 = " + std::to_string(t.c2) +
                       ", unreachable with alpha in (0, 1]");
    }
    // Invert c2 = (alpha + beta)/beta: alpha = beta (c2 - 1). Prefer alpha = 1
    // when beta = 1/(c2 - 1) stays inside (-1, 1).
    const double exact = 1.0 / (t.c2 - 1.0);
    double beta, alpha;
    if (std::abs(exact) <= 0.95) {
      beta = exact;
      alpha = std::min(1.0, beta * (t.c2 - 1.0));
    } else {
      beta = std::copysign(0.95, exact);
      alpha = beta * (t.c2 - 1.0);
    }
    scales[t.order] = {alpha, beta, t.c1 / (scale_c * ipow(-beta, t.order))};
  }

  FilterSpec spec = FilterSpec::msgs(std::move(scales));

  const Vector grid = response_grid(64);
  const ResponseCurve curve = response_closed_form(spec, grid);
  for (int i = 0; i < grid.size(); ++i) {
    double target = 0.0;
    for (const auto& t : terms) target += t.c1 * ipow(grid[i] - t.c2, t.order);
    if (std::abs(curve.amplitudes[i] - target / scale_c) > 1e-8) {
      throw NumericalError("fit: reconstruction deviates by " +
                           std::to_string(curve.amplitudes[i] - target / scale_c) +
                           " at lambda " + std::to_string(grid[i]));
    }
  }
  return spec;
}

}  // namespace msgs
