#include "subtask_forge/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "subtask_forge/parallel.hpp"

namespace subtask_forge {

namespace {

// Keeps products of factor entries representable; far below any value that
// influences the objective.
constexpr double kFactorFloor = 1e-150;

double mm_exponent(double beta) {
  if (beta < 1.0) return 1.0 / (2.0 - beta);
  if (beta > 2.0) return 1.0 / (beta - 1.0);
  return 1.0;
}

void check_beta(double beta) {
  if (!std::isfinite(beta)) throw DomainError("beta must be finite");
}

// Sum over n >= 2 of c_n u^n, the tail of a Taylor expansion around a = b.
template <class Coef>
double series_tail(double u, Coef coef) {
  double term = u * u;
  double s = 0.0;
  for (int n = 2; n < 16; ++n) {
    s += coef(n) * term;
    term *= u;
  }
  return s;
}

constexpr double kSeriesRadius = 0.05;

// Near a = b each branch switches to a Taylor series in u = a / b - 1, which
// avoids the cancellation of the closed forms.
double element_divergence(double a, double b, double beta) {
  if (beta == 2.0) return 0.5 * (a - b) * (a - b);
  if (a == b) return 0.0;
  if (b == 0.0) return std::pow(a, beta) / (beta * (beta - 1.0));
  const double u = (a - b) / b;
  const bool near = std::abs(u) < kSeriesRadius;
  if (beta == 1.0) {
    if (a == 0.0) return b;
    if (near) return b * series_tail(u, [](int n) { return (n % 2 ? -1.0 : 1.0) / (n * (n - 1.0)); });
    return a * std::log(a / b) - a + b;
  }
  if (beta == 0.0) {
    if (near) return series_tail(u, [](int n) { return (n % 2 ? -1.0 : 1.0) / n; });
    const double x = a / b;
    return x - std::log(x) - 1.0;
  }
  if (near) {
    return std::pow(b, beta) * series_tail(u, [beta](int n) {
             double c = 1.0;
             for (int j = 2; j < n; ++j) c *= (beta - j) / (j + 1.0);
             return c / 2.0;
           });
  }
  return (std::pow(a, beta) + (beta - 1.0) * std::pow(b, beta) - beta * a * std::pow(b, beta - 1.0)) /
         (beta * (beta - 1.0));
}

// Deterministic on every platform: 53 random bits mapped onto [0, 1).
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::mt19937_64 restart_stream(std::uint64_t seed, std::size_t k, std::size_t restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(restart), 0x4e4d46u};
  return std::mt19937_64(seq);
}

// Numerator and denominator of the multiplicative update ratio for W
// (Dt = D^T) given the current approximation B = DW.
void w_update_terms(const Matrix& Z, const Matrix& D, const Matrix& W, const Matrix& B, double beta,
                    Matrix& num, Matrix& den) {
  if (beta == 1.0) {
    num.noalias() = D.transpose() * Z.cwiseQuotient(B);
    den = D.colwise().sum().transpose().replicate(1, W.cols());
  } else if (beta == 2.0) {
    num.noalias() = D.transpose() * Z;
    den.noalias() = D.transpose() * B;
  } else if (beta == 0.0) {
    const Matrix inv = B.cwiseInverse();
    num.noalias() = D.transpose() * Z.cwiseProduct(inv.cwiseProduct(inv));
    den.noalias() = D.transpose() * inv;
  } else {
    num.noalias() = D.transpose() * Z.cwiseProduct(B.array().pow(beta - 2.0).matrix());
    den.noalias() = D.transpose() * B.array().pow(beta - 1.0).matrix();
  }
}

void d_update_terms(const Matrix& Z, const Matrix& D, const Matrix& W, const Matrix& B, double beta,
                    Matrix& num, Matrix& den) {
  if (beta == 1.0) {
    num.noalias() = Z.cwiseQuotient(B) * W.transpose();
    den = W.rowwise().sum().transpose().replicate(D.rows(), 1);
  } else if (beta == 2.0) {
    num.noalias() = Z * W.transpose();
    den.noalias() = B * W.transpose();
  } else if (beta == 0.0) {
    const Matrix inv = B.cwiseInverse();
    num.noalias() = Z.cwiseProduct(inv.cwiseProduct(inv)) * W.transpose();
    den.noalias() = inv * W.transpose();
  } else {
    num.noalias() = Z.cwiseProduct(B.array().pow(beta - 2.0).matrix()) * W.transpose();
    den.noalias() = B.array().pow(beta - 1.0).matrix() * W.transpose();
  }
}

void apply_ratio(Matrix& X, const Matrix& num, const Matrix& den, double gamma) {
  if (gamma == 1.0) {
    X.array() *= num.array() / den.array();
  } else {
    X.array() *= (num.array() / den.array()).pow(gamma);
  }
  X = X.cwiseMax(kFactorFloor);
}

void check_input(const Matrix& Z, double beta) {
  check_beta(beta);
  if (Z.size() == 0) throw InvalidInput("Z is empty");
  if (!Z.allFinite() || (Z.array() < 0.0).any()) {
    throw DomainError("Z must be finite and nonnegative");
  }
  if (beta < 1.0 && !(Z.minCoeff() > 0.0)) {
    throw DomainError("beta < 1 requires strictly positive Z");
  }
}

}  // namespace

double beta_divergence(const Matrix& A, const Matrix& B, double beta) {
  check_beta(beta);
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw InvalidInput("beta_divergence: shape mismatch");
  }
  long double total = 0.0L;
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index i = 0; i < A.rows(); ++i) {
      const double a = A(i, j);
      const double b = B(i, j);
      if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("beta_divergence: entries must be finite and nonnegative");
      }
      if (beta <= 1.0 && !(b > 0.0)) {
        throw DomainError("beta_divergence: beta <= 1 requires B > 0");
      }
      if (beta <= 0.0 && !(a > 0.0)) {
        throw DomainError("beta_divergence: beta <= 0 requires A > 0");
      }
      total += element_divergence(a, b, beta);
    }
  }
  return static_cast<double>(total);
}

double normalized_beta_divergence(const Matrix& Z, const Matrix& approx, double beta) {
  const double d = beta_divergence(Z, approx, beta);
  const double ref = beta_divergence(Z, Matrix::Constant(Z.rows(), Z.cols(), Z.mean()), beta);
  return ref > 0.0 ? d / ref : d;
}

void normalize_columns(Matrix& D, Matrix& W) {
  for (Index t = 0; t < D.cols(); ++t) {
    const double s = D.col(t).sum();
    if (s > 0.0) {
      D.col(t) /= s;
      W.row(t) *= s;
    }
  }
}

Factorization nmf_from(const Matrix& Z, Matrix D, Matrix W, double beta, std::size_t max_iter,
                       double tol, const std::vector<bool>& update_d_cols) {
  check_input(Z, beta);
  if (D.rows() != Z.rows() || W.cols() != Z.cols() || D.cols() != W.rows()) {
    throw InvalidInput("nmf_from: factor shapes do not match Z");
  }
  if (!update_d_cols.empty() && update_d_cols.size() != static_cast<std::size_t>(D.cols())) {
    throw InvalidInput("nmf_from: update mask has the wrong length");
  }
  const double gamma = mm_exponent(beta);
  Factorization f;
  f.beta = beta;
  f.k = static_cast<std::size_t>(D.cols());
  Matrix B = D * W;
  double prev = beta_divergence(Z, B, beta);
  f.divergence_trace.push_back(prev);
  Matrix num;
  Matrix den;
  std::size_t it = 0;
  bool converged = false;
  while (it < max_iter && !converged) {
    w_update_terms(Z, D, W, B, beta, num, den);
    apply_ratio(W, num, den, gamma);
    B.noalias() = D * W;
    d_update_terms(Z, D, W, B, beta, num, den);
    if (update_d_cols.empty()) {
      apply_ratio(D, num, den, gamma);
    } else {
      Matrix next = D;
      apply_ratio(next, num, den, gamma);
      for (Index t = 0; t < D.cols(); ++t) {
        if (update_d_cols[static_cast<std::size_t>(t)]) D.col(t) = next.col(t);
      }
    }
    B.noalias() = D * W;
    const double cur = beta_divergence(Z, B, beta);
    f.divergence_trace.push_back(cur);
    ++it;
    converged = cur == 0.0 || std::abs(prev - cur) <= tol * std::abs(prev);
    prev = cur;
  }
  f.iterations = it;
  f.iteration_limit_hit = !converged;
  f.divergence = prev;
  f.D = std::move(D);
  f.W = std::move(W);
  return f;
}

Factorization nmf(const Matrix& Z, std::size_t k, double beta, const NmfOptions& opts) {
  check_input(Z, beta);
  const auto max_k = static_cast<std::size_t>(std::min(Z.rows(), Z.cols()));
  if (k < 1 || k > max_k) {
    throw RangeError("k = " + std::to_string(k) + " is outside [1, " + std::to_string(max_k) + "]");
  }
  if (opts.restarts < 1) throw InvalidInput("restarts must be at least 1");
  const auto kk = static_cast<Index>(k);
  const double z_mean = Z.mean();
  std::vector<Factorization> runs(opts.restarts);
  parallel_for(opts.restarts, [&](std::size_t r) {
    auto rng = restart_stream(opts.seed, k, r);
    Matrix D(Z.rows(), kk);
    Matrix W(kk, Z.cols());
    for (Index j = 0; j < D.cols(); ++j) {
      for (Index i = 0; i < D.rows(); ++i) D(i, j) = 0.1 + unit_uniform(rng);
    }
    for (Index j = 0; j < W.cols(); ++j) {
      for (Index i = 0; i < W.rows(); ++i) W(i, j) = 0.1 + unit_uniform(rng);
    }
    // mean(DW) = mean(Z), split evenly between the factors.
    const double scale = std::sqrt(z_mean / (D * W).mean());
    D *= scale;
    W *= scale;
    runs[r] = nmf_from(Z, std::move(D), std::move(W), beta, opts.max_iter, opts.tol);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].divergence < runs[best].divergence) best = r;
  }
  Factorization out = std::move(runs[best]);
  out.restart_divergences.clear();
  for (std::size_t r = 0; r < runs.size(); ++r) {
    out.restart_divergences.push_back(r == best ? out.divergence : runs[r].divergence);
  }
  normalize_columns(out.D, out.W);
  out.seed = opts.seed;
  out.restarts = opts.restarts;
  out.best_restart = best;
  out.normalized_divergence = normalized_beta_divergence(Z, out.D * out.W, beta);
  return out;
}

std::optional<std::size_t> elbow(std::span<const double> f, ElbowRule rule) {
  if (f.size() < 3) return std::nullopt;
  std::vector<double> c(f.begin(), f.end());
  for (std::size_t i = 1; i < c.size(); ++i) c[i] = std::min(c[i], c[i - 1]);
  // delta[k] = |f(k) - f(k-1)| for k >= 2 (1-based k, stored at index k).
  std::vector<double> delta(c.size() + 1, 0.0);
  for (std::size_t k = 2; k <= c.size(); ++k) delta[k] = std::abs(c[k - 1] - c[k - 2]);
  const double floor = std::max(1e-6 * std::abs(c.front()), std::numeric_limits<double>::min());
  std::optional<std::size_t> pick;
  double best_ratio = 0.0;
  for (std::size_t k = 2; k + 1 <= c.size(); ++k) {
    if (!(delta[k + 1] < delta[k])) continue;
    if (rule == ElbowRule::first_satisfying) return k;
    const double ratio = std::max(delta[k], floor) / std::max(delta[k + 1], floor);
    if (!pick || ratio > best_ratio) {
      pick = k;
      best_ratio = ratio;
    }
  }
  return pick;
}

KSelection select_k(const Matrix& Z, double beta, std::size_t k_max, const NmfOptions& opts,
                    ElbowRule rule) {
  if (k_max < 3) throw RangeError("k_max must be at least 3");
  const auto max_k = static_cast<std::size_t>(std::min(Z.rows(), Z.cols()));
  if (k_max > max_k) {
    throw RangeError("k_max = " + std::to_string(k_max) + " exceeds min(rows, cols) = " +
                     std::to_string(max_k));
  }
  KSelection sel;
  sel.beta = beta;
  sel.restarts = opts.restarts;
  for (std::size_t k = 1; k <= k_max; ++k) {
    sel.f.push_back(nmf(Z, k, beta, opts).normalized_divergence);
  }
  sel.clipped = sel.f;
  for (std::size_t i = 1; i < sel.clipped.size(); ++i) {
    sel.clipped[i] = std::min(sel.clipped[i], sel.clipped[i - 1]);
  }
  sel.k_star = elbow(sel.f, rule);
  return sel;
}

}  // namespace subtask_forge
