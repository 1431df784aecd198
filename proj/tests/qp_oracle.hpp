// Brute-force reference solver for the weighted epsilon-SVR dual. It shares
// no code with the SMO path: its own standardization, kernel loops, and an
// accelerated projected-gradient method on the (alpha, alpha*) form with an
// exact projection onto {0 <= a <= C, sum(alpha) = sum(alpha*)}.
#ifndef MFL_TESTS_QP_ORACLE_HPP
#define MFL_TESTS_QP_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct Point {
  double f;
  double s;
  double w;
};

struct Solution {
  std::vector<double> beta;  // alpha - alpha*
  double objective = 0.0;    // maximized dual value
  double bias = 0.0;         // scaled-target units
  double y_mean = 0.0;
  double y_scale = 1.0;
  std::vector<std::vector<double>> scaled;  // standardized (f, s)
  double gamma = 0.0;

  double predict(double sf, double ss) const {
    double out = bias;
    for (std::size_t i = 0; i < beta.size(); ++i) {
      const double d0 = scaled[i][0] - sf;
      const double d1 = scaled[i][1] - ss;
      out += beta[i] * std::exp(-gamma * (d0 * d0 + d1 * d1));
    }
    return out * y_scale + y_mean;
  }
};

struct Standardizer {
  double mf = 0, ms = 0, sf = 1, ss = 1;
};

inline Standardizer standardize(const std::vector<Point>& pts) {
  Standardizer st;
  const double n = static_cast<double>(pts.size());
  for (const auto& p : pts) {
    st.mf += p.f / n;
    st.ms += p.s / n;
  }
  double vf = 0, vs = 0;
  for (const auto& p : pts) {
    vf += (p.f - st.mf) * (p.f - st.mf) / n;
    vs += (p.s - st.ms) * (p.s - st.ms) / n;
  }
  st.sf = vf > 0 ? std::sqrt(vf) : 1.0;
  st.ss = vs > 0 ? std::sqrt(vs) : 1.0;
  return st;
}

// Exact projection of v onto {0 <= a_k <= cap_k, sum_k sign_k a_k = 0}.
// With a_k(lam) = clip(v_k - lam * sign_k, 0, cap_k) the constraint sum is
// piecewise linear and non-increasing in lam; its root is bracketed by
// sorted breakpoints and found by linear interpolation.
inline std::vector<double> project(const std::vector<double>& v, const std::vector<double>& cap,
                                   const std::vector<double>& sign) {
  const std::size_t l = v.size();
  auto clipped = [&](double lam, std::vector<double>& a) {
    double s = 0;
    for (std::size_t k = 0; k < l; ++k) {
      a[k] = std::clamp(v[k] - lam * sign[k], 0.0, cap[k]);
      s += sign[k] * a[k];
    }
    return s;
  };
  std::vector<double> knots;
  for (std::size_t k = 0; k < l; ++k) {
    knots.push_back(v[k] * sign[k]);
    knots.push_back((v[k] - cap[k]) * sign[k]);
  }
  std::sort(knots.begin(), knots.end());
  std::vector<double> a(l);
  double lo = knots.front(), hi = knots.back();
  if (clipped(lo, a) <= 0) return a;
  if (clipped(hi, a) >= 0) return a;
  // Find adjacent knots with s(lo) > 0 >= s(hi).
  std::size_t left = 0, right = knots.size() - 1;
  while (right - left > 1) {
    const std::size_t mid = (left + right) / 2;
    if (clipped(knots[mid], a) > 0) left = mid;
    else right = mid;
  }
  lo = knots[left];
  hi = knots[right];
  const double s_lo = clipped(lo, a);
  const double s_hi = clipped(hi, a);
  const double lam = s_lo == s_hi ? hi : lo + (hi - lo) * s_lo / (s_lo - s_hi);
  clipped(lam, a);
  return a;
}

inline Solution solve(const std::vector<Point>& raw, const std::vector<double>& weights, double c, double epsilon,
                      double gamma, int iterations = 200000) {
  const std::size_t n = raw.size();
  const Standardizer st = standardize(raw);
  Solution sol;
  // Targets are standardized so epsilon is in scaled-target units.
  for (const auto& p : raw) sol.y_mean += p.w / static_cast<double>(n);
  double vy = 0;
  for (const auto& p : raw) vy += (p.w - sol.y_mean) * (p.w - sol.y_mean) / static_cast<double>(n);
  sol.y_scale = vy > 0 ? std::sqrt(vy) : 1.0;
  std::vector<Point> pts = raw;
  for (auto& p : pts) p.w = (p.w - sol.y_mean) / sol.y_scale;
  sol.gamma = gamma;
  sol.scaled.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.scaled[i] = {(pts[i].f - st.mf) / st.sf, (pts[i].s - st.ms) / st.ss};

  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d0 = sol.scaled[i][0] - sol.scaled[j][0];
      const double d1 = sol.scaled[i][1] - sol.scaled[j][1];
      k[i][j] = std::exp(-gamma * (d0 * d0 + d1 * d1));
    }
  }
  double wsum = 0;
  for (double w : weights) wsum += w;

  // Variables a = (alpha_0..alpha_{n-1}, alpha*_0..alpha*_{n-1}); minimize
  // 1/2 b'Kb + eps*sum(a) - y'b with b = alpha - alpha*.
  const std::size_t l = 2 * n;
  std::vector<double> cap(l), sign(l);
  for (std::size_t i = 0; i < n; ++i) {
    cap[i] = cap[i + n] = c * static_cast<double>(n) * weights[i] / wsum;
    sign[i] = 1;
    sign[i + n] = -1;
  }
  auto beta_of = [&](const std::vector<double>& a) {
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = a[i] - a[i + n];
    return b;
  };
  auto objective = [&](const std::vector<double>& a) {
    const auto b = beta_of(a);
    double q = 0, lin = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) q += b[i] * k[i][j] * b[j];
      lin += epsilon * (a[i] + a[i + n]) - pts[i].w * b[i];
    }
    return 0.5 * q + lin;
  };
  auto gradient = [&](const std::vector<double>& a) {
    const auto b = beta_of(a);
    std::vector<double> g(l);
    for (std::size_t i = 0; i < n; ++i) {
      double kb = 0;
      for (std::size_t j = 0; j < n; ++j) kb += k[i][j] * b[j];
      g[i] = kb + epsilon - pts[i].w;
      g[i + n] = -kb + epsilon + pts[i].w;
    }
    return g;
  };
  // Lipschitz bound of the gradient: 2 * max row sum of |K|.
  double lip = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(k[i][j]);
    lip = std::max(lip, 2 * row);
  }
  const double step = 1.0 / lip;

  std::vector<double> a(l, 0.0), yv = a;
  double t = 1;
  double fa = objective(a);
  for (int it = 0; it < iterations; ++it) {
    if (it % 64 == 0) {
      // Gradient-mapping norm at the current iterate as the optimality test.
      const auto ga = gradient(a);
      std::vector<double> u(l);
      for (std::size_t q = 0; q < l; ++q) u[q] = a[q] - step * ga[q];
      const auto pu = project(u, cap, sign);
      double gm = 0;
      for (std::size_t q = 0; q < l; ++q) gm = std::max(gm, std::abs(pu[q] - a[q]) / step);
      if (gm < 1e-9) break;
    }
    const auto g = gradient(yv);
    std::vector<double> v(l);
    for (std::size_t q = 0; q < l; ++q) v[q] = yv[q] - step * g[q];
    std::vector<double> next = project(v, cap, sign);
    const double fn = objective(next);
    if (fn > fa) {
      // Adaptive restart keeps the accelerated iteration monotone. A plain
      // projected step that still cannot decrease the objective means the
      // iterate is optimal to rounding.
      if (t == 1) break;
      t = 1;
      yv = a;
      continue;
    }
    const double tn = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    for (std::size_t q = 0; q < l; ++q) yv[q] = next[q] + (t - 1) / tn * (next[q] - a[q]);
    a = next;
    fa = fn;
    t = tn;
  }

  sol.beta = beta_of(a);
  sol.objective = -fa;

  // Bias from KKT: a free alpha_i pins f(x_i) = w_i - eps, a free alpha*_i
  // pins f(x_i) = w_i + eps. Without free variables take the midpoint of the
  // feasible interval.
  const double free_tol = 1e-7;
  double sum_b = 0;
  int n_free = 0;
  double lo = -INFINITY, hi = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    double kb = 0;
    for (std::size_t j = 0; j < n; ++j) kb += k[i][j] * sol.beta[j];
    const double up = a[i], dn = a[i + n], ci = cap[i];
    const bool up_free = up > free_tol * ci && up < ci * (1 - free_tol);
    const bool dn_free = dn > free_tol * ci && dn < ci * (1 - free_tol);
    if (up_free) {
      sum_b += pts[i].w - epsilon - kb;
      ++n_free;
    } else if (dn_free) {
      sum_b += pts[i].w + epsilon - kb;
      ++n_free;
    } else {
      // alpha at 0 and alpha* at 0: |w - f| <= eps. alpha at cap: w - f >= eps.
      const bool up_cap = up >= ci * (1 - free_tol) && ci > 0;
      const bool dn_cap = dn >= ci * (1 - free_tol) && ci > 0;
      if (up_cap) {
        hi = std::min(hi, pts[i].w - epsilon - kb);
      } else if (dn_cap) {
        lo = std::max(lo, pts[i].w + epsilon - kb);
      } else {
        lo = std::max(lo, pts[i].w - epsilon - kb);
        hi = std::min(hi, pts[i].w + epsilon - kb);
      }
    }
  }
  sol.bias = n_free > 0 ? sum_b / n_free : 0.5 * (lo + hi);
  return sol;
}

}  // namespace oracle

#endif
