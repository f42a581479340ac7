#pragma once

namespace multipfa {

/// Standard normal cdf, accurate in both tails (via erfc).
double normal_cdf(double x);

/// Φ⁻¹(u) for u ∈ [0, 1]; returns ∓infinity at the endpoints.
double normal_quantile(double u);

/// 2Φ(−|z|), floored at 1e-300 so that downstream logs stay finite.
double two_sided_pvalue(double z);

inline constexpr double kPvalueFloor = 1e-300;

}  // namespace multipfa
