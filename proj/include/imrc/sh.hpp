// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "imrc/core.hpp"
#include "imrc/observation.hpp"

namespace imrc {

inline constexpr int kMaxShDegree = 4;

inline int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

struct SHIndex {
  int l = 0;
  int m = 0;
};

// Canonical coefficient ordering: l ascending, m ascending within each l.
inline int sh_flat_index(const SHIndex& idx) { return idx.l * idx.l + idx.l + idx.m; }

namespace detail {

// Real orthonormal spherical harmonics, Condon-Shortley phase folded into the
// constants. Inputs must be unit directions.
inline constexpr double kSh0 = 0.28209479177387814;
inline constexpr double kSh1 = 0.4886025119029199;
inline constexpr double kSh2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                   -1.0925484305920792, 0.5462742152960396};
inline constexpr double kSh3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                   0.3731763325901154, -0.4570457994644658, 1.445305721320277,
                                   -0.5900435899266435};
inline constexpr double kSh4[9] = {2.5033429417967046, -1.7701307697799304, 0.9461746957575601,
                                   -0.6690465435572892, 0.10578554691520431, -0.6690465435572892,
                                   0.47308734787878004, -1.7701307697799304, 0.6258357354491761};

}  // namespace detail

// Evaluates all basis functions up to `degree` at unit direction d into
// out[0 .. (degree+1)^2 - 1] in canonical order.
inline void sh_basis_all(int degree, const Vec3& d, double* out) {
  if (degree < 0 || degree > kMaxShDegree) throw Error("sh_basis_all: degree must be in [0, 4]");
  using namespace detail;
  const double x = d.x, y = d.y, z = d.z;
  out[0] = kSh0;
  if (degree < 1) return;
  out[1] = -kSh1 * y;
  out[2] = kSh1 * z;
  out[3] = -kSh1 * x;
  if (degree < 2) return;
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, yz = y * z, xz = x * z;
  out[4] = kSh2[0] * xy;
  out[5] = kSh2[1] * yz;
  out[6] = kSh2[2] * (3.0 * zz - 1.0);
  out[7] = kSh2[3] * xz;
  out[8] = kSh2[4] * (xx - yy);
  if (degree < 3) return;
  out[9] = kSh3[0] * y * (3.0 * xx - yy);
  out[10] = kSh3[1] * xy * z;
  out[11] = kSh3[2] * y * (4.0 * zz - xx - yy);
  out[12] = kSh3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  out[13] = kSh3[4] * x * (4.0 * zz - xx - yy);
  out[14] = kSh3[5] * z * (xx - yy);
  out[15] = kSh3[6] * x * (xx - 3.0 * yy);
  if (degree < 4) return;
  out[16] = kSh4[0] * xy * (xx - yy);
  out[17] = kSh4[1] * yz * (3.0 * xx - yy);
  out[18] = kSh4[2] * xy * (7.0 * zz - 1.0);
  out[19] = kSh4[3] * yz * (7.0 * zz - 3.0);
  out[20] = kSh4[4] * (zz * (35.0 * zz - 30.0) + 3.0);
  out[21] = kSh4[5] * xz * (7.0 * zz - 3.0);
  out[22] = kSh4[6] * (xx - yy) * (7.0 * zz - 1.0);
  out[23] = kSh4[7] * xz * (xx - 3.0 * yy);
  out[24] = kSh4[8] * (xx * (xx - 3.0 * yy) - yy * (3.0 * xx - yy));
}

inline double sh_basis(const SHIndex& idx, const Vec3& d) {
  if (idx.l < 0 || idx.l > kMaxShDegree || idx.m < -idx.l || idx.m > idx.l)
    throw Error("sh_basis: invalid (l, m)");
  double buf[25];
  sh_basis_all(idx.l, d, buf);
  return buf[sh_flat_index(idx)];
}

// Per-channel expansion coefficients, (max_degree+1)^2 of them.
struct SHExpansion {
  int max_degree = 0;
  std::vector<Color> coeffs;
};

inline Color evaluate(const SHExpansion& e, const Vec3& d) {
  double basis[25];
  sh_basis_all(e.max_degree, d, basis);
  const int n = sh_coeff_count(e.max_degree);
  Color c;
  for (int i = 0; i < n; ++i) c += basis[i] * e.coeffs[i];
  return c;
}

// Plain Monte-Carlo projection: h = (4pi/K) sum_k c_k Y(d_k), every
// observation weighted equally and each coefficient estimated independently.
// Consistent for uniformly distributed directions.
inline SHExpansion fit_unweighted(std::span<const Observation> obs, int degree) {
  if (degree < 0 || degree > kMaxShDegree) throw Error("fit_unweighted: degree must be in [0, 4]");
  if (obs.empty()) throw NoObservationError("fit_unweighted: no observations");
  const int n = sh_coeff_count(degree);
  SHExpansion e;
  e.max_degree = degree;
  e.coeffs.assign(n, Color{});
  double basis[25];
  for (const Observation& ob : obs) {
    sh_basis_all(degree, ob.direction, basis);
    for (int i = 0; i < n; ++i) e.coeffs[i] += basis[i] * ob.color;
  }
  const double scale = kFourPi / static_cast<double>(obs.size());
  for (int i = 0; i < n; ++i) e.coeffs[i] = scale * e.coeffs[i];
  return e;
}

struct FitResult {
  SHExpansion expansion;
  std::vector<Color> residuals;  // final residual per observation, input order
  int effective_degree = 0;      // may be below the requested degree
};

namespace detail {

// Largest degree whose coefficient count is supported by `confident`
// observations; degree 0 always allowed (the weighted mean is defined
// whenever the confidence sum passes the guard).
inline int effective_sh_degree(int requested, std::size_t confident) {
  int deg = 0;
  while (deg < requested &&
         static_cast<std::size_t>(sh_coeff_count(deg + 1)) <= confident)
    ++deg;
  return deg;
}

}  // namespace detail

// Confidence-weighted sequential estimation: coefficients are estimated in
// canonical order, each from the running residual left by the earlier ones,
//   h = 4pi * sum_k T_k * resid_k * Y(d_k) / sum_k T_k,
// then subtracted from every residual before the next coefficient. The
// requested degree falls back when fewer than (L+1)^2 observations exceed
// min_confidence. All observations participate in the sums regardless of
// confidence; min_confidence only drives the guard and the fallback count.
inline FitResult fit_weighted_sequential(const ObservationSet& obs, int degree,
                                         double min_confidence) {
  if (degree < 0 || degree > kMaxShDegree)
    throw Error("fit_weighted_sequential: degree must be in [0, 4]");
  if (obs.items.empty() || !(obs.sum_confidence > min_confidence))
    throw NoObservationError("fit_weighted_sequential: total confidence below threshold");

  std::size_t confident = 0;
  for (const Observation& ob : obs.items)
    if (ob.confidence > min_confidence) ++confident;
  const int eff = detail::effective_sh_degree(degree, confident);
  const int n = sh_coeff_count(eff);
  const std::size_t K = obs.items.size();

  FitResult fit;
  fit.effective_degree = eff;
  fit.expansion.max_degree = eff;
  fit.expansion.coeffs.assign(n, Color{});
  fit.residuals.resize(K);

  // Basis rows cached per observation; scratch reused across calls.
  thread_local std::vector<double> basis_rows;
  basis_rows.resize(K * static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < K; ++k) {
    fit.residuals[k] = obs.items[k].color;
    sh_basis_all(eff, obs.items[k].direction, basis_rows.data() + k * n);
  }

  const double inv_sum = 1.0 / obs.sum_confidence;
  for (int i = 0; i < n; ++i) {
    Color acc;
    for (std::size_t k = 0; k < K; ++k)
      acc += (obs.items[k].confidence * basis_rows[k * n + i]) * fit.residuals[k];
    const Color h = (kFourPi * inv_sum) * acc;
    fit.expansion.coeffs[i] = h;
    for (std::size_t k = 0; k < K; ++k) fit.residuals[k] -= basis_rows[k * n + i] * h;
  }
  return fit;
}

}  // namespace imrc
