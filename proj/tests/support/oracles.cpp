#include "oracles.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace citescope::testing {

Eigen::MatrixXd naive_conv(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                           int window, const Eigen::MatrixXd& input) {
  const int dim = static_cast<int>(input.rows());
  const int filters = static_cast<int>(weights.rows());
  const int positions = static_cast<int>(input.cols()) - window + 1;
  if (positions < 1) throw std::invalid_argument("naive_conv: input narrower than window");
  Eigen::MatrixXd out(filters, positions);
  for (int f = 0; f < filters; ++f) {
    for (int t = 0; t < positions; ++t) {
      long double acc = bias(f);
      for (int j = 0; j < window; ++j) {
        for (int d = 0; d < dim; ++d) {
          acc += static_cast<long double>(weights(f, j * dim + d)) * input(d, t + j);
        }
      }
      out(f, t) = acc > 0.0L ? static_cast<double>(acc) : 0.0;
    }
  }
  return out;
}

Eigen::VectorXd naive_max_pool(const Eigen::MatrixXd& features) {
  Eigen::VectorXd out(features.rows());
  for (Eigen::Index f = 0; f < features.rows(); ++f) {
    double best = features(f, 0);
    for (Eigen::Index t = 1; t < features.cols(); ++t) {
      if (features(f, t) > best) best = features(f, t);
    }
    out(f) = best;
  }
  return out;
}

Eigen::VectorXd naive_dense(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias,
                            const Eigen::VectorXd& x) {
  Eigen::VectorXd out(weights.rows());
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    long double acc = bias(r);
    for (Eigen::Index c = 0; c < weights.cols(); ++c) {
      acc += static_cast<long double>(weights(r, c)) * x(c);
    }
    out(r) = static_cast<double>(acc);
  }
  return out;
}

double naive_softmax_xent_loss(const Eigen::VectorXd& logits, int gold) {
  const long double shift = logits.maxCoeff();
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    total += std::exp(static_cast<long double>(logits(i)) - shift);
  }
  const long double log_prob = static_cast<long double>(logits(gold)) - shift - std::log(total);
  return static_cast<double>(-log_prob);
}

namespace {

double t_pdf(double x, int df) {
  const double v = static_cast<double>(df);
  const double log_norm =
      std::lgamma((v + 1.0) / 2.0) - std::lgamma(v / 2.0) - 0.5 * std::log(v * M_PI);
  return std::exp(log_norm - (v + 1.0) / 2.0 * std::log1p(x * x / v));
}

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

}  // namespace

double student_t_two_sided_p_quadrature(double t, int df) {
  const double cut = std::abs(t);
  if (cut == 0.0) return 1.0;
  // Map the tail [cut, inf) to s in [0, 1) with x = cut + s/(1-s); the
  // remaining mass beyond s = 1 - 1e-9 is below 1e-9 for every df >= 1.
  const auto integrand = [cut, df](double s) {
    const double u = 1.0 - s;
    const double x = cut + s / u;
    return t_pdf(x, df) / (u * u);
  };
  const double tail = adaptive_simpson(integrand, 0.0, 1.0 - 1e-9, 1e-12);
  return std::min(1.0, 2.0 * tail);
}

}  // namespace citescope::testing
