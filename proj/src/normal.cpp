#include "multipfa/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

namespace multipfa {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double u) {
  if (u <= 0.0) return -std::numeric_limits<double>::infinity();
  if (u >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>(), u);
}

double two_sided_pvalue(double z) {
  return std::max(std::erfc(std::abs(z) / std::sqrt(2.0)), kPvalueFloor);
}

}  // namespace multipfa
