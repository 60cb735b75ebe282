#include "cral/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cral {

namespace {

struct Vertex {
  std::vector<double> x;
  double f = 0.0;
};

double diameter(const std::vector<Vertex>& simplex) {
  double d = 0.0;
  for (std::size_t a = 0; a < simplex.size(); ++a) {
    for (std::size_t b = a + 1; b < simplex.size(); ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < simplex[a].x.size(); ++k) {
        const double e = simplex[a].x[k] - simplex[b].x[k];
        s += e * e;
      }
      d = std::max(d, std::sqrt(s));
    }
  }
  return d;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> x0, const NelderMeadOptions& opts) {
  const std::size_t n = x0.size();
  NelderMeadResult result;
  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<Vertex> simplex(n + 1);
  simplex[0].x.assign(x0.begin(), x0.end());
  simplex[0].f = eval(simplex[0].x);
  for (std::size_t k = 0; k < n; ++k) {
    simplex[k + 1].x = simplex[0].x;
    simplex[k + 1].x[k] += opts.initial_step;
    simplex[k + 1].f = eval(simplex[k + 1].x);
  }

  auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
  auto affine = [n](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = c[k] + t * (w[k] - c[k]);
    return out;
  };

  while (true) {
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    const bool x_done = diameter(simplex) < opts.x_tolerance;
    const bool f_done = opts.f_tolerance > 0.0 && simplex.back().f - simplex.front().f < opts.f_tolerance;
    if (x_done || f_done) {
      result.converged = true;
      break;
    }
    if (evals >= opts.max_evaluations) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[v].x[k] / static_cast<double>(n);
    }
    Vertex& worst = simplex.back();

    Vertex refl{affine(centroid, worst.x, -1.0), 0.0};
    refl.f = eval(refl.x);

    if (refl.f < simplex.front().f) {
      Vertex exp{affine(centroid, worst.x, -2.0), 0.0};
      exp.f = eval(exp.x);
      worst = exp.f < refl.f ? std::move(exp) : std::move(refl);
      continue;
    }
    if (refl.f < simplex[n - 1].f) {
      worst = std::move(refl);
      continue;
    }

    const bool outside = refl.f < worst.f;
    Vertex con{affine(centroid, outside ? refl.x : worst.x, 0.5), 0.0};
    con.f = eval(con.x);
    if (con.f < std::min(refl.f, worst.f)) {
      worst = std::move(con);
      continue;
    }

    for (std::size_t v = 1; v <= n; ++v) {
      simplex[v].x = affine(simplex[0].x, simplex[v].x, 0.5);
      simplex[v].f = eval(simplex[v].x);
    }
  }

  std::stable_sort(simplex.begin(), simplex.end(), by_value);
  result.x = simplex.front().x;
  result.value = simplex.front().f;
  result.evaluations = evals;
  return result;
}

}  // namespace cral
