// Copyright 2026 The ihlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Image recovery once every encoding is tied to two sources.
//
//   B = M A + noise
//
// M is |E| x |X| with two nonzeros per row (the private lambdas), A holds the
// unknown sources, and B the encodings (abs-applied when signs were flipped).
// Without sign flips this is box-constrained least squares. With them, the
// solver fits M |A| to |B| and picks the smaller of the two sign branches per
// entry at every step.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihlab/assignment.hpp"
#include "ihlab/core/parallel.hpp"
#include "ihlab/core/types.hpp"
#include "ihlab/encoder.hpp"
#include "ihlab/metrics.hpp"

namespace ihlab {

struct Box {
  double lo = 0.0;
  double hi = 1.0;
};

// ---- lambda recovery ------------------------------------------------------

struct LambdaRecovery {
  std::array<double, 2> lambdas{0.0, 0.0};
  std::array<int, 2> classes{0, 0};
  bool same_class = false;
};

inline constexpr double kLabelZero = 1e-9;

inline LambdaRecovery recover_lambdas(const LabelVector& z) {
  std::vector<int> nz;
  for (std::size_t c = 0; c < z.probs.size(); ++c) {
    if (z.probs[c] > kLabelZero) nz.push_back(static_cast<int>(c));
  }
  IHLAB_REQUIRE(!nz.empty(), "label has no nonzero entry");
  IHLAB_REQUIRE(nz.size() <= 2, "label has ", nz.size(),
                " nonzero entries; a mixed label has at most 2");
  LambdaRecovery out;
  if (nz.size() == 1) {
    const double l = z.probs[static_cast<std::size_t>(nz[0])];
    out.lambdas = {l / 2, l / 2};
    out.classes = {nz[0], nz[0]};
    out.same_class = true;
  } else {
    out.lambdas = {z.probs[static_cast<std::size_t>(nz[0])],
                   z.probs[static_cast<std::size_t>(nz[1])]};
    out.classes = {nz[0], nz[1]};
  }
  return out;
}

// ---- abs-mean baseline ----------------------------------------------------

inline std::vector<Image> abs_mean_baseline(const std::vector<std::vector<int>>& cliques,
                                            const EncodedDataset& ds, Box box = {}) {
  IHLAB_REQUIRE(!ds.encodings.empty(), "empty dataset");
  const Shape shape = ds.encodings[0].pixels.shape();
  std::vector<Image> out;
  for (std::size_t s = 0; s < cliques.size(); ++s) {
    IHLAB_REQUIRE(!cliques[s].empty(), "clique ", s, " is empty");
    std::vector<double> acc(shape.size(), 0.0);
    for (int e : cliques[s]) {
      const Image& img = ds.encodings.at(static_cast<std::size_t>(e)).pixels;
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += std::fabs(img[j]);
    }
    Image m(shape);
    const double inv = 1.0 / static_cast<double>(cliques[s].size());
    for (std::size_t j = 0; j < acc.size(); ++j) {
      m[j] = static_cast<float>(std::clamp(acc[j] * inv, box.lo, box.hi));
    }
    out.push_back(std::move(m));
  }
  return out;
}

// ---- the linear system ----------------------------------------------------

struct MixRow {
  int a = 0;
  int b = 0;
  double la = 0.0;
  double lb = 0.0;
};

struct MixSystem {
  int num_sources = 0;
  Shape shape;
  std::vector<MixRow> rows;
  std::vector<double> b;  // |E| x d, row-major
  Box box;
  // Optional extra unknown shared by all rows (the mean public-noise image),
  // with weight noise_weights[i] in row i. Empty when disabled.
  std::vector<double> noise_weights;

  std::size_t dim() const { return shape.size(); }
  std::size_t num_rows() const { return rows.size(); }
  bool has_noise_column() const { return !noise_weights.empty(); }
  int num_unknowns() const { return num_sources + (has_noise_column() ? 1 : 0); }

  void validate() const {
    IHLAB_REQUIRE(num_sources >= 1, "no sources");
    IHLAB_REQUIRE(b.size() == rows.size() * dim(), "B has ", b.size(),
                  " entries, expected ", rows.size() * dim());
    IHLAB_REQUIRE(box.lo < box.hi, "empty box");
    IHLAB_REQUIRE(noise_weights.empty() || noise_weights.size() == rows.size(),
                  "noise weight count mismatch");
    for (const auto& r : rows) {
      IHLAB_REQUIRE(r.a >= 0 && r.a < num_sources && r.b >= 0 && r.b < num_sources,
                    "row references a missing source");
      IHLAB_REQUIRE(r.a != r.b, "row mixes source ", r.a, " with itself");
      IHLAB_REQUIRE(r.la >= 0 && r.lb >= 0 && r.la + r.lb <= 1.0 + 1e-9,
                    "row weights ", r.la, ", ", r.lb, " out of range");
    }
  }
};

struct SystemOptions {
  bool take_abs = true;      // |B|; required when signs were flipped
  bool noise_column = false;
  Box box;
};

// Rows from an assignment map whose lambdas were already paired.
inline MixSystem build_mix_system(const EncodedDataset& ds, const AssignmentMap& map,
                                  int num_sources, const SystemOptions& opts = {}) {
  IHLAB_REQUIRE(map.size() == ds.size(), "assignment covers ", map.size(),
                " of ", ds.size(), " encodings");
  IHLAB_REQUIRE(!ds.encodings.empty(), "empty dataset");
  MixSystem sys;
  sys.num_sources = num_sources;
  sys.shape = ds.encodings[0].pixels.shape();
  sys.box = opts.box;
  const std::size_t d = sys.dim();
  sys.b.resize(ds.size() * d);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    sys.rows.push_back({map.sets[i][0], map.sets[i][1], map.lambdas[i][0],
                        map.lambdas[i][1]});
    const auto& px = ds.encodings[i].pixels;
    for (std::size_t j = 0; j < d; ++j) {
      sys.b[i * d + j] = opts.take_abs ? std::fabs(px[j]) : px[j];
    }
    if (opts.noise_column) {
      sys.noise_weights.push_back(
          std::max(0.0, 1.0 - map.lambdas[i][0] - map.lambdas[i][1]));
    }
  }
  sys.validate();
  return sys;
}

struct ReconstructionResult {
  std::vector<Image> images;           // one per source, inside the box
  std::optional<Image> noise_image;    // when the system had a noise column
  std::vector<double> objective_trace;
  std::string method;
  double residual = 0.0;               // final objective
  bool rank_deficient = false;
  std::vector<std::string> warnings;
};

namespace recovery_detail {

// Column index list per unknown: (row, weight).
inline std::vector<std::vector<std::pair<int, double>>> columns(const MixSystem& sys) {
  std::vector<std::vector<std::pair<int, double>>> cols(
      static_cast<std::size_t>(sys.num_unknowns()));
  for (std::size_t i = 0; i < sys.rows.size(); ++i) {
    const auto& r = sys.rows[i];
    if (r.la != 0) cols[static_cast<std::size_t>(r.a)].push_back({static_cast<int>(i), r.la});
    if (r.lb != 0) cols[static_cast<std::size_t>(r.b)].push_back({static_cast<int>(i), r.lb});
    if (sys.has_noise_column() && sys.noise_weights[i] != 0) {
      cols[static_cast<std::size_t>(sys.num_sources)].push_back(
          {static_cast<int>(i), sys.noise_weights[i]});
    }
  }
  return cols;
}

inline std::vector<Image> to_images(const MixSystem& sys, const std::vector<double>& a) {
  std::vector<Image> out;
  const std::size_t d = sys.dim();
  for (int s = 0; s < sys.num_sources; ++s) {
    Image img(sys.shape);
    for (std::size_t j = 0; j < d; ++j) {
      img[j] = static_cast<float>(a[static_cast<std::size_t>(s) * d + j]);
    }
    out.push_back(std::move(img));
  }
  return out;
}

inline std::optional<Image> noise_image(const MixSystem& sys, const std::vector<double>& a) {
  if (!sys.has_noise_column()) return std::nullopt;
  const std::size_t d = sys.dim();
  Image img(sys.shape);
  for (std::size_t j = 0; j < d; ++j) {
    img[j] = static_cast<float>(a[static_cast<std::size_t>(sys.num_sources) * d + j]);
  }
  return img;
}

// Dense normal matrix M^T M (n x n, row-major).
inline std::vector<double> normal_matrix(const MixSystem& sys) {
  const auto n = static_cast<std::size_t>(sys.num_unknowns());
  std::vector<double> h(n * n, 0.0);
  for (std::size_t i = 0; i < sys.rows.size(); ++i) {
    const auto& r = sys.rows[i];
    std::array<std::size_t, 3> idx{static_cast<std::size_t>(r.a),
                                   static_cast<std::size_t>(r.b), n - 1};
    std::array<double, 3> w{r.la, r.lb,
                            sys.has_noise_column() ? sys.noise_weights[i] : 0.0};
    const int terms = sys.has_noise_column() ? 3 : 2;
    for (int p = 0; p < terms; ++p) {
      for (int q = 0; q < terms; ++q) {
        h[idx[static_cast<std::size_t>(p)] * n + idx[static_cast<std::size_t>(q)]] +=
            w[static_cast<std::size_t>(p)] * w[static_cast<std::size_t>(q)];
      }
    }
  }
  return h;
}

// True when Cholesky of h meets a pivot below tol * max diagonal.
inline bool nearly_singular(std::vector<double> h, std::size_t n) {
  double maxdiag = 0.0;
  for (std::size_t i = 0; i < n; ++i) maxdiag = std::max(maxdiag, h[i * n + i]);
  if (maxdiag <= 0.0) return true;
  const double tol = 1e-10 * maxdiag;
  for (std::size_t k = 0; k < n; ++k) {
    double piv = h[k * n + k];
    for (std::size_t p = 0; p < k; ++p) piv -= h[k * n + p] * h[k * n + p];
    if (piv <= tol) return true;
    piv = std::sqrt(piv);
    h[k * n + k] = piv;
    for (std::size_t i = k + 1; i < n; ++i) {
      double v = h[i * n + k];
      for (std::size_t p = 0; p < k; ++p) v -= h[i * n + p] * h[k * n + p];
      h[i * n + k] = v / piv;
    }
  }
  return false;
}

// min 1/2 x'Hx - r'x over lo <= x <= hi. Alternates a projected-gradient
// step (which updates the active set) with conjugate gradients on the free
// variables, each followed by a projected backtracking search.
class BoxQp {
 public:
  BoxQp(const std::vector<double>& h, std::size_t n, double lo, double hi)
      : h_(h), n_(n), lo_(lo), hi_(hi) {}

  double objective(const std::vector<double>& x, const std::vector<double>& r) const {
    double f = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double hx = 0.0;
      for (std::size_t j = 0; j < n_; ++j) hx += h_[i * n_ + j] * x[j];
      f += 0.5 * x[i] * hx - r[i] * x[i];
    }
    return f;
  }

  void solve(const std::vector<double>& r, std::vector<double>& x,
             int max_outer = 200) const {
    for (auto& v : x) v = std::clamp(v, lo_, hi_);
    double rscale = 1.0;
    for (double v : r) rscale = std::max(rscale, std::fabs(v));
    std::vector<double> g(n_), pg(n_), trial(n_);
    double f = objective(x, r);
    for (int outer = 0; outer < max_outer; ++outer) {
      gradient(x, r, g);
      double pgmax = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        pg[i] = projected(x[i], g[i]);
        pgmax = std::max(pgmax, std::fabs(pg[i]));
      }
      if (pgmax <= 1e-13 * rscale) return;

      // Projected gradient with a Cauchy step length.
      double gg = 0.0, ghg = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        gg += pg[i] * pg[i];
        double hp = 0.0;
        for (std::size_t j = 0; j < n_; ++j) hp += h_[i * n_ + j] * pg[j];
        ghg += pg[i] * hp;
      }
      double alpha = ghg > 0 ? gg / ghg : 1.0;
      for (int bt = 0; bt < 40; ++bt, alpha *= 0.5) {
        for (std::size_t i = 0; i < n_; ++i) {
          trial[i] = std::clamp(x[i] - alpha * pg[i], lo_, hi_);
        }
        const double ft = objective(trial, r);
        if (ft <= f) {
          x = trial;
          f = ft;
          break;
        }
      }

      // CG on the variables strictly inside the box.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n_; ++i) {
        if (x[i] > lo_ && x[i] < hi_) free.push_back(i);
      }
      if (free.empty()) continue;
      std::vector<double> target = x;
      cg_free(r, free, target);
      std::vector<double> dir(n_);
      for (std::size_t i = 0; i < n_; ++i) dir[i] = target[i] - x[i];
      double t = 1.0;
      for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
        for (std::size_t i = 0; i < n_; ++i) {
          trial[i] = std::clamp(x[i] + t * dir[i], lo_, hi_);
        }
        const double ft = objective(trial, r);
        if (ft <= f) {
          x = trial;
          f = ft;
          break;
        }
      }
    }
  }

 private:
  double projected(double x, double g) const {
    if (x <= lo_) return std::min(g, 0.0);
    if (x >= hi_) return std::max(g, 0.0);
    return g;
  }

  void gradient(const std::vector<double>& x, const std::vector<double>& r,
                std::vector<double>& g) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double hx = 0.0;
      for (std::size_t j = 0; j < n_; ++j) hx += h_[i * n_ + j] * x[j];
      g[i] = hx - r[i];
    }
  }

  // Solves H_FF y = r_F - H_FB x_B starting from x_F; writes y into x.
  void cg_free(const std::vector<double>& r, const std::vector<std::size_t>& free,
               std::vector<double>& x) const {
    const std::size_t m = free.size();
    std::vector<double> res(m), p(m), hp(m);
    auto hmul_free = [&](const std::vector<double>& v, std::vector<double>& out) {
      for (std::size_t a = 0; a < m; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < m; ++b) acc += h_[free[a] * n_ + free[b]] * v[b];
        out[a] = acc;
      }
    };
    std::vector<double> g(n_);
    gradient(x, r, g);
    double rr = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      res[a] = -g[free[a]];
      p[a] = res[a];
      rr += res[a] * res[a];
    }
    const double stop = 1e-28 * std::max(1.0, rr);
    for (std::size_t it = 0; it < 2 * m + 10 && rr > stop; ++it) {
      hmul_free(p, hp);
      double php = 0.0;
      for (std::size_t a = 0; a < m; ++a) php += p[a] * hp[a];
      if (php <= 0) break;
      const double alpha = rr / php;
      double rr_next = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        x[free[a]] += alpha * p[a];
        res[a] -= alpha * hp[a];
        rr_next += res[a] * res[a];
      }
      const double beta = rr_next / rr;
      rr = rr_next;
      for (std::size_t a = 0; a < m; ++a) p[a] = res[a] + beta * p[a];
    }
  }

  const std::vector<double>& h_;
  std::size_t n_;
  double lo_, hi_;
};

}  // namespace recovery_detail

// M A for A stored |unknowns| x d row-major.
inline std::vector<double> apply_mix(const MixSystem& sys, const std::vector<double>& a) {
  const std::size_t d = sys.dim();
  std::vector<double> out(sys.rows.size() * d);
  for (std::size_t i = 0; i < sys.rows.size(); ++i) {
    const auto& r = sys.rows[i];
    const double* pa = a.data() + static_cast<std::size_t>(r.a) * d;
    const double* pb = a.data() + static_cast<std::size_t>(r.b) * d;
    const double w = sys.has_noise_column() ? sys.noise_weights[i] : 0.0;
    const double* pn = sys.has_noise_column()
                           ? a.data() + static_cast<std::size_t>(sys.num_sources) * d
                           : nullptr;
    for (std::size_t j = 0; j < d; ++j) {
      double v = r.la * pa[j] + r.lb * pb[j];
      if (pn != nullptr) v += w * pn[j];
      out[i * d + j] = v;
    }
  }
  return out;
}

inline double squared_residual(const MixSystem& sys, const std::vector<double>& a) {
  const auto ma = apply_mix(sys, a);
  double acc = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double r = sys.b[i] - ma[i];
    acc += r * r;
  }
  return acc;
}

struct LeastSquaresOptions {
  double ridge = 1e-8;
  int max_outer = 200;
  int threads = 0;
};

// argmin ||B - M A'||^2 over the box, column by column on the normal
// equations (plus ridge). Warns when M^T M is numerically singular.
inline ReconstructionResult solve_least_squares(const MixSystem& sys,
                                                const LeastSquaresOptions& opts = {}) {
  sys.validate();
  const auto n = static_cast<std::size_t>(sys.num_unknowns());
  const std::size_t d = sys.dim();
  auto h = recovery_detail::normal_matrix(sys);
  ReconstructionResult out;
  out.method = "least_squares";
  if (recovery_detail::nearly_singular(h, n)) {
    out.rank_deficient = true;
    out.warnings.push_back(
        "mixing matrix is rank deficient (disconnected or degenerate pairing); "
        "ridge-regularized solution returned");
  }
  for (std::size_t i = 0; i < n; ++i) h[i * n + i] += opts.ridge;

  // Right-hand sides M^T B, one column per pixel.
  const auto cols = recovery_detail::columns(sys);
  std::vector<double> a(n * d, 0.0);
  const recovery_detail::BoxQp qp(h, n, sys.box.lo, sys.box.hi);
  std::vector<double> initial(n * d, 0.0);
  parallel_for(d, opts.threads, [&](std::size_t j) {
    std::vector<double> r(n, 0.0), x(n, 0.5 * (sys.box.lo + sys.box.hi));
    for (std::size_t s = 0; s < n; ++s) {
      for (const auto& [row, w] : cols[s]) r[s] += w * sys.b[static_cast<std::size_t>(row) * d + j];
      initial[s * d + j] = x[s];
    }
    qp.solve(r, x, opts.max_outer);
    for (std::size_t s = 0; s < n; ++s) a[s * d + j] = x[s];
  });
  out.objective_trace.push_back(squared_residual(sys, initial));
  out.residual = squared_residual(sys, a);
  out.objective_trace.push_back(out.residual);
  out.images = recovery_detail::to_images(sys, a);
  out.noise_image = recovery_detail::noise_image(sys, a);
  return out;
}

// ---- greedy-sign objective ------------------------------------------------

// sigma_ij: the smaller-magnitude of +|B|_ij - (M|A|)_ij and
// -|B|_ij - (M|A|)_ij (positive branch on ties).
inline std::vector<double> greedy_sigma(const MixSystem& sys, const std::vector<double>& a) {
  std::vector<double> abs_a(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) abs_a[i] = std::fabs(a[i]);
  auto ma = apply_mix(sys, abs_a);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double ab = std::fabs(sys.b[i]);
    const double plus = ab - ma[i];
    const double minus = -ab - ma[i];
    ma[i] = std::fabs(minus) < std::fabs(plus) ? minus : plus;
  }
  return ma;
}

inline double greedy_objective(const MixSystem& sys, const std::vector<double>& a,
                               bool l1 = false) {
  const auto sigma = greedy_sigma(sys, a);
  double acc = 0.0;
  for (double s : sigma) acc += l1 ? std::fabs(s) : s * s;
  return acc;
}

// Gradient of the greedy objective with the sign branches frozen at `a`.
inline std::vector<double> greedy_gradient(const MixSystem& sys,
                                           const std::vector<double>& a,
                                           bool l1 = false, int threads = 1) {
  const auto sigma = greedy_sigma(sys, a);
  const auto cols = recovery_detail::columns(sys);
  const std::size_t d = sys.dim();
  std::vector<double> g(a.size(), 0.0);
  parallel_for(cols.size(), threads, [&](std::size_t s) {
    double* gs = g.data() + s * d;
    for (const auto& [row, w] : cols[s]) {
      const double* sg = sigma.data() + static_cast<std::size_t>(row) * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double ds = l1 ? (sg[j] > 0 ? 1.0 : (sg[j] < 0 ? -1.0 : 0.0)) : 2.0 * sg[j];
        gs[j] -= ds * w;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (a[s * d + j] < 0) gs[j] = -gs[j];
    }
  });
  return g;
}

struct AbsGdOptions {
  bool l1 = false;
  double step = 0.1;
  int halve_every = 200;
  int max_steps = 2000;
  int window = 50;
  double tolerance = 1e-6;
  int threads = 0;
};

// Projected gradient descent on the greedy-sign objective from a warm start
// (one image per source; the noise column, if any, starts at the box
// midpoint). Steps are Jacobi-scaled per source so that `step` is a fraction
// of the diagonal Newton step.
inline ReconstructionResult solve_abs_gd(const MixSystem& sys,
                                         const std::vector<Image>& warm_start,
                                         const AbsGdOptions& opts = {}) {
  sys.validate();
  IHLAB_REQUIRE(warm_start.size() == static_cast<std::size_t>(sys.num_sources),
                "warm start has ", warm_start.size(), " images for ",
                sys.num_sources, " sources");
  IHLAB_REQUIRE(opts.step > 0 && opts.halve_every > 0 && opts.max_steps >= 0 &&
                    opts.window > 0,
                "bad descent schedule");
  const auto n = static_cast<std::size_t>(sys.num_unknowns());
  const std::size_t d = sys.dim();
  std::vector<double> a(n * d, 0.5 * (sys.box.lo + sys.box.hi));
  for (std::size_t s = 0; s < warm_start.size(); ++s) {
    IHLAB_REQUIRE(warm_start[s].shape() == sys.shape, "warm start shape mismatch");
    for (std::size_t j = 0; j < d; ++j) {
      a[s * d + j] = std::clamp(static_cast<double>(warm_start[s][j]), sys.box.lo, sys.box.hi);
    }
  }

  const auto cols = recovery_detail::columns(sys);
  std::vector<double> scale(n, 1.0);
  for (std::size_t s = 0; s < n; ++s) {
    double acc = 0.0;
    for (const auto& [row, w] : cols[s]) acc += opts.l1 ? std::fabs(w) : 2.0 * w * w;
    if (acc > 0) scale[s] = 1.0 / acc;
  }

  ReconstructionResult out;
  out.method = opts.l1 ? "abs_gd_l1" : "abs_gd_l2";
  double f = greedy_objective(sys, a, opts.l1);
  if (!std::isfinite(f)) throw Error("abs-gd: objective is not finite at the warm start");
  out.objective_trace.push_back(f);
  std::vector<double> trial(a.size());
  for (int t = 0; t < opts.max_steps && f > 0; ++t) {
    const double eta = opts.step * std::ldexp(1.0, -(t / opts.halve_every));
    const auto g = greedy_gradient(sys, a, opts.l1, opts.threads);
    bool moved = false;
    double local = eta;
    for (int bt = 0; bt < 30; ++bt, local *= 0.5) {
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < d; ++j) {
          const std::size_t idx = s * d + j;
          trial[idx] = std::clamp(a[idx] - local * scale[s] * g[idx], sys.box.lo, sys.box.hi);
        }
      }
      const double ft = greedy_objective(sys, trial, opts.l1);
      if (!std::isfinite(ft)) throw Error(detail::concat("abs-gd: objective became NaN at step ", t));
      if (ft <= f) {
        a.swap(trial);
        moved = ft < f;
        f = ft;
        break;
      }
    }
    out.objective_trace.push_back(f);
    if (!moved) break;
    const std::size_t len = out.objective_trace.size();
    if (len > static_cast<std::size_t>(opts.window)) {
      const double past = out.objective_trace[len - 1 - static_cast<std::size_t>(opts.window)];
      if (past - f < opts.tolerance * past) break;
    }
  }
  out.residual = f;
  // Reported images are |A'|, which is what M |A'| models.
  for (auto& v : a) v = std::clamp(std::fabs(v), sys.box.lo, sys.box.hi);
  out.images = recovery_detail::to_images(sys, a);
  out.noise_image = recovery_detail::noise_image(sys, a);
  return out;
}

// ---- single-encoding attack -----------------------------------------------

// Supplies the de-masked mixture (sign pattern undone) for an encoding.
using SignOracle = std::function<Image(const EncodedImage&)>;

// Oracle backed by the true sign vector.
inline SignOracle truth_sign_oracle(std::vector<std::int8_t> sigma) {
  return [sigma = std::move(sigma)](const EncodedImage& e) {
    IHLAB_REQUIRE(sigma.size() == e.pixels.size(), "sign vector length mismatch");
    Image out = e.pixels;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= static_cast<float>(sigma[j]);
    return out;
  };
}

struct SingleEncodingResult {
  Image image;
  std::vector<int> public_indices;   // in selection order
  std::vector<double> public_weights;  // fitted lambda for each selected public
  double private_weight = 0.0;       // lambda_1 + lambda_2 estimate used for rescaling
};

namespace recovery_detail {

// Solves the small dense system m x = rhs in place (partial pivoting, with a
// ridge for degenerate columns).
inline std::vector<double> solve_small(std::vector<double> m, std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] += 1e-10;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(m[r * n + col]) > std::fabs(m[piv * n + col])) piv = r;
    }
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m[col * n + c], m[piv * n + c]);
      std::swap(rhs[col], rhs[piv]);
    }
    const double d = m[col * n + col];
    if (std::fabs(d) < 1e-300) continue;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double v = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) v -= m[i * n + c] * x[c];
    x[i] = std::fabs(m[i * n + i]) < 1e-300 ? 0.0 : v / m[i * n + i];
  }
  return x;
}

struct RobustFit {
  std::vector<double> coef;  // [intercept, one per column]
  double l1 = 0.0;
};

// Least absolute deviations of y on [1, cols...] by reweighted least squares.
// The private images show up as sparse edges, which L1 largely ignores.
inline RobustFit robust_fit(const std::vector<double>& y,
                            const std::vector<const std::vector<double>*>& cols,
                            int iterations = 5) {
  const std::size_t n = cols.size() + 1;
  const std::size_t rows = y.size();
  auto col = [&](std::size_t c, std::size_t i) { return c == 0 ? 1.0 : (*cols[c - 1])[i]; };
  std::vector<double> w(rows, 1.0);
  RobustFit out;
  for (int it = 0; it <= iterations; ++it) {
    std::vector<double> m(n * n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t a = 0; a < n; ++a) {
        const double va = w[i] * col(a, i);
        rhs[a] += va * y[i];
        for (std::size_t b = a; b < n; ++b) m[a * n + b] += va * col(b, i);
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < a; ++b) m[a * n + b] = m[b * n + a];
    }
    out.coef = solve_small(std::move(m), std::move(rhs));
    out.l1 = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      double r = y[i];
      for (std::size_t c = 0; c < n; ++c) r -= out.coef[c] * col(c, i);
      out.l1 += std::fabs(r);
      w[i] = 1.0 / std::max(std::fabs(r), 1e-4);
    }
  }
  return out;
}

}  // namespace recovery_detail

// Picks the k-2 public images whose edges best explain the de-signed
// encoding under an L1 fit: greedy selection, then single swaps until no
// swap lowers the fit. The fitted coefficients are the public weights; what
// is left is rescaled by the private weight (label mass).
inline SingleEncodingResult single_encoding_attack(const EncodedImage& e,
                                                   const PublicPool& pool, int k,
                                                   const SignOracle& oracle,
                                                   Box box = {}) {
  IHLAB_REQUIRE(k >= 2, "k must be at least 2");
  IHLAB_REQUIRE(static_cast<int>(pool.size()) >= k - 2, "pool has ", pool.size(),
                " images, need ", k - 2);
  IHLAB_REQUIRE(oracle != nullptr, "no sign oracle");
  const Image mixed = oracle(e);
  IHLAB_REQUIRE(mixed.shape() == e.pixels.shape(), "oracle changed the shape");
  for (const auto& p : pool.images) {
    IHLAB_REQUIRE(p.shape() == mixed.shape(), "public image shape mismatch");
  }
  SingleEncodingResult out;
  const int want = k - 2;
  if (want > 0) {
    const auto y = abs_features(mixed, FeatureKind::kEdges);
    std::vector<std::vector<double>> feats;
    feats.reserve(pool.size());
    for (const auto& p : pool.images) feats.push_back(abs_features(p, FeatureKind::kEdges));
    auto fit = [&](const std::vector<int>& sel) {
      std::vector<const std::vector<double>*> cols;
      for (int p : sel) cols.push_back(&feats[static_cast<std::size_t>(p)]);
      return recovery_detail::robust_fit(y, cols);
    };
    auto chosen = [&](const std::vector<int>& sel, int p) {
      return std::find(sel.begin(), sel.end(), p) != sel.end();
    };
    std::vector<int> sel;
    for (int t = 0; t < want; ++t) {
      int best = -1;
      double best_l1 = std::numeric_limits<double>::infinity();
      for (int p = 0; p < static_cast<int>(pool.size()); ++p) {
        if (chosen(sel, p)) continue;
        auto trial = sel;
        trial.push_back(p);
        const double l1 = fit(trial).l1;
        if (l1 < best_l1) {
          best_l1 = l1;
          best = p;
        }
      }
      sel.push_back(best);
    }
    double current = fit(sel).l1;
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t i = 0; i < sel.size(); ++i) {
        for (int p = 0; p < static_cast<int>(pool.size()); ++p) {
          if (chosen(sel, p)) continue;
          auto trial = sel;
          trial[i] = p;
          const double l1 = fit(trial).l1;
          if (l1 < current - 1e-12) {
            current = l1;
            sel = std::move(trial);
            improved = true;
          }
        }
      }
    }
    const auto coef = fit(sel).coef;
    out.public_indices = sel;
    for (std::size_t i = 0; i < sel.size(); ++i) out.public_weights.push_back(std::max(0.0, coef[i + 1]));
  }
  const double mass = e.label.sum();
  out.private_weight = mass > kLabelZero ? mass : 2.0 / k;
  out.image = Image(mixed.shape());
  for (std::size_t j = 0; j < mixed.size(); ++j) {
    double v = mixed[j];
    for (std::size_t i = 0; i < out.public_indices.size(); ++i) {
      v -= out.public_weights[i] * pool.images[static_cast<std::size_t>(out.public_indices[i])][j];
    }
    out.image[j] = static_cast<float>(std::clamp(v / out.private_weight, box.lo, box.hi));
  }
  return out;
}

}  // namespace ihlab
