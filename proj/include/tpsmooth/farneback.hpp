#pragma once

// Two-frame dense optical flow by polynomial expansion (Farneback 2003).
//
// Each pyramid level approximates the neighbourhood of every pixel by a
// quadratic f(x) ~ x'Ax + b'x + c, fitted with Gaussian-weighted least
// squares. For a translated signal the linear coefficients of the second
// frame satisfy b2 = b1 - 2 A d, which yields a 2x2 system for d. The systems
// are averaged over a Gaussian window before solving, the estimate is refined
// by re-sampling the second expansion at x + d, and the whole procedure runs
// coarse to fine.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tpsmooth/flow.hpp"
#include "tpsmooth/grid.hpp"

namespace tpsmooth {

struct FlowParams {
  int pyramid_levels = 5;
  double pyramid_scale = 0.5;
  int window_radius = 7;
  int iterations_per_level = 3;
  int poly_neighborhood = 5;
  double poly_sigma = 1.1;

  void validate() const {
    if (pyramid_levels < 1) throw ConfigError("pyramid_levels must be >= 1");
    if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0)) throw ConfigError("pyramid_scale must lie in (0, 1)");
    if (window_radius < 1) throw ConfigError("window_radius must be >= 1");
    if (iterations_per_level < 1) throw ConfigError("iterations_per_level must be >= 1");
    if (poly_neighborhood < 3 || poly_neighborhood % 2 == 0) {
      throw ConfigError("poly_neighborhood must be odd and >= 3");
    }
    if (!(poly_sigma > 0.0) || !std::isfinite(poly_sigma)) throw ConfigError("poly_sigma must be > 0");
  }
};

namespace detail {

// Levels coarser than this are not built.
constexpr int kMinPyramidSide = 24;

// Quadratic coefficients per pixel: f(x, y) ~ c + bx x + by y + axx x^2 +
// ayy y^2 + axy x y. The constant term is not needed.
struct PolyExpansion {
  ScalarField bx, by, axx, ayy, axy;
};

// Per-pixel normal equations of the displacement problem, G d = h with
// G = [[g11, g12], [g12, g22]].
struct FlowSystem {
  ScalarField g11, g12, g22, h1, h2;
};

inline std::vector<double> gaussian_taps(int radius, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps[static_cast<std::size_t>(k + radius)] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    sum += taps[static_cast<std::size_t>(k + radius)];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

// Separable convolution with replicated borders.
inline ScalarField convolve_separable(const ScalarField& src, const std::vector<double>& taps) {
  const int radius = static_cast<int>(taps.size() / 2);
  const int w = src.width();
  const int h = src.height();
  std::vector<double> tmp(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] * src(std::clamp(x + k, 0, w - 1), y);
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  ScalarField out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[static_cast<std::size_t>(k + radius)] *
               tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
      }
      out.at(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

inline ScalarField resize_bilinear(const ScalarField& src, int width, int height) {
  ScalarField out(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.at(x, y) = static_cast<float>(sample_clamped(src, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5));
    }
  }
  return out;
}

// 5-tap binomial blur followed by bilinear resampling.
inline ScalarField pyramid_down(const ScalarField& src, double scale) {
  static const std::vector<double> kBinomial{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const int w = std::max(1, static_cast<int>(std::lround(src.width() * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(src.height() * scale)));
  return resize_bilinear(convolve_separable(src, kBinomial), w, h);
}

// Solves a small dense system in place by Gauss-Jordan with partial pivoting.
template <std::size_t N>
std::array<std::array<double, N>, N> invert(std::array<std::array<double, N>, N> m) {
  std::array<std::array<double, N>, N> inv{};
  for (std::size_t i = 0; i < N; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-300) throw InvalidInput("singular polynomial basis matrix");
    std::swap(m[col], m[pivot]);
    std::swap(inv[col], inv[pivot]);
    const double d = m[col][col];
    for (std::size_t k = 0; k < N; ++k) {
      m[col][k] /= d;
      inv[col][k] /= d;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == col) continue;
      const double f = m[r][col];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < N; ++k) {
        m[r][k] -= f * m[col][k];
        inv[r][k] -= f * inv[col][k];
      }
    }
  }
  return inv;
}

// Gaussian-weighted least-squares fit of a quadratic around every pixel.
// Basis order: 1, x, y, x^2, y^2, xy.
inline PolyExpansion poly_expand(const ScalarField& img, int neighborhood, double sigma) {
  const int n = neighborhood / 2;
  const int w = img.width();
  const int h = img.height();
  const std::vector<double> g = gaussian_taps(n, sigma);
  auto tap = [&](int k) { return g[static_cast<std::size_t>(k + n)]; };

  std::array<std::array<double, 6>, 6> gram{};
  for (int dy = -n; dy <= n; ++dy) {
    for (int dx = -n; dx <= n; ++dx) {
      const double wgt = tap(dx) * tap(dy);
      const std::array<double, 6> phi{1.0, double(dx), double(dy), double(dx * dx), double(dy * dy), double(dx * dy)};
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) gram[i][j] += wgt * phi[i] * phi[j];
    }
  }
  const auto ginv = invert(gram);

  // Vertical pass: moments 0, 1, 2 in y.
  const std::size_t npix = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<double> v0(npix), v1(npix), v2(npix);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double a0 = 0, a1 = 0, a2 = 0;
      for (int k = -n; k <= n; ++k) {
        const double f = img(x, std::clamp(y + k, 0, h - 1)) * tap(k);
        a0 += f;
        a1 += k * f;
        a2 += k * k * f;
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      v0[i] = a0;
      v1[i] = a1;
      v2[i] = a2;
    }
  }

  PolyExpansion out{ScalarField(w, h), ScalarField(w, h), ScalarField(w, h), ScalarField(w, h), ScalarField(w, h)};
  for (int y = 0; y < h; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      std::array<double, 6> b{};
      for (int k = -n; k <= n; ++k) {
        const std::size_t i = row + static_cast<std::size_t>(std::clamp(x + k, 0, w - 1));
        const double t = tap(k);
        b[0] += t * v0[i];
        b[1] += t * k * v0[i];
        b[2] += t * v1[i];
        b[3] += t * k * k * v0[i];
        b[4] += t * v2[i];
        b[5] += t * k * v1[i];
      }
      std::array<double, 6> r{};
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) r[i] += ginv[i][j] * b[j];
      out.bx.at(x, y) = static_cast<float>(r[1]);
      out.by.at(x, y) = static_cast<float>(r[2]);
      out.axx.at(x, y) = static_cast<float>(r[3]);
      out.ayy.at(x, y) = static_cast<float>(r[4]);
      out.axy.at(x, y) = static_cast<float>(r[5]);
    }
  }
  return out;
}

// Builds A'A and A'db per pixel from the expansion of the first frame and the
// expansion of the second frame sampled at x + flow(x).
inline FlowSystem build_system(const PolyExpansion& r0, const PolyExpansion& r1, const FlowField& flow, int border) {
  const int w = flow.width();
  const int h = flow.height();
  FlowSystem s{ScalarField(w, h), ScalarField(w, h), ScalarField(w, h), ScalarField(w, h), ScalarField(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = flow.u(x, y);
      const double dy = flow.v(x, y);
      const double sx = x + dx;
      const double sy = y + dy;
      if (!(sx >= 0.0 && sy >= 0.0 && sx <= w - 1 && sy <= h - 1)) continue;

      const double a11 = 0.5 * (r0.axx(x, y) + sample_clamped(r1.axx, sx, sy));
      const double a22 = 0.5 * (r0.ayy(x, y) + sample_clamped(r1.ayy, sx, sy));
      const double a12 = 0.25 * (r0.axy(x, y) + sample_clamped(r1.axy, sx, sy));
      double db1 = -0.5 * (sample_clamped(r1.bx, sx, sy) - r0.bx(x, y)) + a11 * dx + a12 * dy;
      double db2 = -0.5 * (sample_clamped(r1.by, sx, sy) - r0.by(x, y)) + a12 * dx + a22 * dy;

      // Expansions near the border see replicated pixels; down-weight them.
      const int edge = std::min({x, y, w - 1 - x, h - 1 - y});
      double conf = edge >= border ? 1.0 : static_cast<double>(edge + 1) / (border + 1);
      double b11 = a11 * conf, b12 = a12 * conf, b22 = a22 * conf;
      db1 *= conf;
      db2 *= conf;

      s.g11.at(x, y) = static_cast<float>(b11 * b11 + b12 * b12);
      s.g12.at(x, y) = static_cast<float>((b11 + b22) * b12);
      s.g22.at(x, y) = static_cast<float>(b22 * b22 + b12 * b12);
      s.h1.at(x, y) = static_cast<float>(b11 * db1 + b12 * db2);
      s.h2.at(x, y) = static_cast<float>(b12 * db1 + b22 * db2);
    }
  }
  return s;
}

inline FlowField solve_system(const FlowSystem& s, const std::vector<double>& window) {
  const ScalarField g11 = convolve_separable(s.g11, window);
  const ScalarField g12 = convolve_separable(s.g12, window);
  const ScalarField g22 = convolve_separable(s.g22, window);
  const ScalarField h1 = convolve_separable(s.h1, window);
  const ScalarField h2 = convolve_separable(s.h2, window);
  FlowField flow(s.g11.width(), s.g11.height());
  for (std::size_t i = 0; i < g11.size(); ++i) {
    const double a = g11[i], b = g12[i], c = g22[i];
    const double idet = 1.0 / (a * c - b * b + 1e-3);
    flow.u[i] = static_cast<float>((c * h1[i] - b * h2[i]) * idet);
    flow.v[i] = static_cast<float>((a * h2[i] - b * h1[i]) * idet);
  }
  return flow;
}

inline FlowField upsample_flow(const FlowField& coarse, int width, int height) {
  const double fx = static_cast<double>(width) / coarse.width();
  const double fy = static_cast<double>(height) / coarse.height();
  FlowField out(resize_bilinear(coarse.u, width, height), resize_bilinear(coarse.v, width, height));
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    out.u[i] = static_cast<float>(out.u[i] * fx);
    out.v[i] = static_cast<float>(out.v[i] * fy);
  }
  return out;
}

inline ScalarField to_plane(const GrayFrame& f) {
  return ScalarField(f.width(), f.height(), std::vector<float>(f.values().begin(), f.values().end()));
}

}  // namespace detail

// Dense flow from `prev` to `next`: prev(x) ~ next(x + flow(x)).
inline FlowField estimate_flow(const GrayFrame& prev, const GrayFrame& next, const FlowParams& params = {}) {
  params.validate();
  require_same_shape(prev, next, "estimate_flow");
  require_finite(prev, "estimate_flow");
  require_finite(next, "estimate_flow");
  if (prev.width() < params.poly_neighborhood || prev.height() < params.poly_neighborhood) {
    throw InvalidInput("estimate_flow: frame " + std::to_string(prev.width()) + "x" + std::to_string(prev.height()) +
                       " is smaller than the polynomial neighbourhood");
  }

  std::vector<ScalarField> pyr0{detail::to_plane(prev)};
  std::vector<ScalarField> pyr1{detail::to_plane(next)};
  while (static_cast<int>(pyr0.size()) < params.pyramid_levels) {
    const ScalarField& top = pyr0.back();
    const int nw = static_cast<int>(std::lround(top.width() * params.pyramid_scale));
    const int nh = static_cast<int>(std::lround(top.height() * params.pyramid_scale));
    if (std::min(nw, nh) < std::max(detail::kMinPyramidSide, params.poly_neighborhood)) break;
    pyr0.push_back(detail::pyramid_down(pyr0.back(), params.pyramid_scale));
    pyr1.push_back(detail::pyramid_down(pyr1.back(), params.pyramid_scale));
  }

  const double window_sigma = 0.3 * (params.window_radius - 1) + 0.8;
  const std::vector<double> window = detail::gaussian_taps(params.window_radius, window_sigma);
  const int border = params.poly_neighborhood / 2 + 1;

  FlowField flow;
  for (int level = static_cast<int>(pyr0.size()) - 1; level >= 0; --level) {
    const ScalarField& i0 = pyr0[static_cast<std::size_t>(level)];
    const ScalarField& i1 = pyr1[static_cast<std::size_t>(level)];
    flow = flow.u.empty() ? FlowField(i0.width(), i0.height()) : detail::upsample_flow(flow, i0.width(), i0.height());

    const detail::PolyExpansion r0 = detail::poly_expand(i0, params.poly_neighborhood, params.poly_sigma);
    const detail::PolyExpansion r1 = detail::poly_expand(i1, params.poly_neighborhood, params.poly_sigma);
    for (int it = 0; it < params.iterations_per_level; ++it) {
      flow = detail::solve_system(detail::build_system(r0, r1, flow, border), window);
    }
  }
  return flow;
}

}  // namespace tpsmooth
