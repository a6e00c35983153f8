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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "ihlab/core/types.hpp"
#include "ihlab/flow.hpp"

namespace ihlab {

inline constexpr int kSsimWindow = 8;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Closed-form SSIM of two equally sized sample sets, population moments.
inline double ssim_window(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double va = 0, vb = 0, cov = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
    cov += (a[i] - ma) * (b[i] - mb);
  }
  va /= n;
  vb /= n;
  cov /= n;
  return ((2 * ma * mb + kSsimC1) * (2 * cov + kSsimC2)) /
         ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
}

// Mean SSIM over uniform 8x8 windows (stride 1, dynamic range 1), averaged
// over channels. Images smaller than 8 on a side use the whole extent.
inline double ssim(const Image& a, const Image& b) {
  IHLAB_REQUIRE(a.shape() == b.shape(), "shape mismatch: ", to_string(a.shape()),
                " vs ", to_string(b.shape()));
  const Shape& s = a.shape();
  const int wh = std::min(kSsimWindow, s.height);
  const int ww = std::min(kSsimWindow, s.width);
  std::vector<double> wa(static_cast<std::size_t>(wh * ww));
  std::vector<double> wb(wa.size());
  double total = 0.0;
  std::size_t windows = 0;
  for (int c = 0; c < s.channels; ++c) {
    for (int y0 = 0; y0 + wh <= s.height; ++y0) {
      for (int x0 = 0; x0 + ww <= s.width; ++x0) {
        std::size_t t = 0;
        for (int y = y0; y < y0 + wh; ++y) {
          for (int x = x0; x < x0 + ww; ++x, ++t) {
            wa[t] = a.at(y, x, c);
            wb[t] = b.at(y, x, c);
          }
        }
        total += ssim_window(wa, wb);
        ++windows;
      }
    }
  }
  return total / static_cast<double>(windows);
}

inline double mse(const Image& a, const Image& b) {
  IHLAB_REQUIRE(a.shape() == b.shape(), "shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

inline double rmse(const Image& a, const Image& b) { return std::sqrt(mse(a, b)); }

// +inf for identical images.
inline double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

inline double max_abs_error(const Image& a, const Image& b) {
  IHLAB_REQUIRE(a.shape() == b.shape(), "shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::fabs(static_cast<double>(a[i]) - b[i]));
  }
  return worst;
}

struct PairMetrics {
  int recovered = 0;
  int original = 0;
  double ssim = 0;
  double psnr = 0;
  double rmse = 0;
};

struct MetricReport {
  std::vector<PairMetrics> pairs;   // one per recovered image
  std::vector<int> permutation;     // recovered i -> original permutation[i]
  double mean_ssim = 0;
  double mean_psnr = 0;  // infinite PSNRs are capped at 100 dB for the mean
  double mean_rmse = 0;

  void write_csv(std::ostream& out) const {
    out << "recovered,original,ssim,psnr,rmse\n";
    for (const auto& p : pairs) {
      out << p.recovered << ',' << p.original << ',' << p.ssim << ','
          << p.psnr << ',' << p.rmse << '\n';
    }
  }
};

// Quantized SSIM cost for exact matching; ssim is in (-1, 1].
inline std::int64_t ssim_cost(double s) {
  return std::llround(1e6 * (1.0 - std::clamp(s, -1.0, 1.0)));
}

// Maximum-total-SSIM bipartite matching of recovered to original images.
inline MetricReport match_reconstructions(std::span<const Image> recovered,
                                          std::span<const Image> originals) {
  IHLAB_REQUIRE(recovered.size() == originals.size(), "got ", recovered.size(),
                " recovered images for ", originals.size(), " originals");
  const std::size_t n = recovered.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n));
  std::vector<std::vector<std::int64_t>> cost(n, std::vector<std::int64_t>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      sim[i][j] = ssim(recovered[i], originals[j]);
      cost[i][j] = ssim_cost(sim[i][j]);
    }
  }
  MetricReport report;
  report.permutation = solve_linear_assignment(cost);
  for (std::size_t i = 0; i < n; ++i) {
    const int j = report.permutation[i];
    PairMetrics m;
    m.recovered = static_cast<int>(i);
    m.original = j;
    m.ssim = sim[i][static_cast<std::size_t>(j)];
    m.psnr = psnr(recovered[i], originals[static_cast<std::size_t>(j)]);
    m.rmse = rmse(recovered[i], originals[static_cast<std::size_t>(j)]);
    report.pairs.push_back(m);
    report.mean_ssim += m.ssim;
    report.mean_psnr += std::min(m.psnr, 100.0);
    report.mean_rmse += m.rmse;
  }
  if (n > 0) {
    report.mean_ssim /= static_cast<double>(n);
    report.mean_psnr /= static_cast<double>(n);
    report.mean_rmse /= static_cast<double>(n);
  }
  return report;
}

}  // namespace ihlab
