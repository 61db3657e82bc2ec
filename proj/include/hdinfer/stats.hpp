#pragma once

namespace hdinfer {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal quantile, accurate to full double precision
/// (rational approximation plus one Halley refinement).
double normal_quantile(double p);

/// Two-sided Gaussian tail p-value for |Z| > z.
double normal_two_sided_pvalue(double z);

}  // namespace hdinfer
