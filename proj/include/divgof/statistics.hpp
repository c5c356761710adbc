#pragma once

#include <string>
#include <vector>

#include "divgof/measure.hpp"

namespace divgof {

// (z - m)^2/m - 1
Kernel pearson_kernel();
// z ln z - E[nu ln nu] - (z - m)(1 + ln m), with 0 ln 0 = 0
Kernel cash_kernel();
// z - m
Kernel linear_stat_kernel();
// (z - m)/m
Kernel weighted_linear_kernel();
// 1{z <= q} - P(q|m)
Kernel spectral_kernel(int q);
// p(q-1|m)(z - m): the linear companion of spectral(q) in its commonly quoted form
Kernel spectral_linear_kernel(int q);
// 1{z = 0} - p(0|m)
Kernel empty_boxes_kernel();
// omega(bin, m) * base
Kernel custom_kernel(std::string name, BinFn omega, const Kernel& base);

// E[nu ln nu] for nu ~ Poisson(m), memoized per thread.
double expected_nu_log_nu(double m);

// pearson | cash | linear | wlinear | spectral:q | spectral_linear:q | empty | custom:<power>:<base>
// where custom multiplies the base kernel by m^power.
Kernel make_kernel(const std::string& spec);
std::vector<std::string> catalogue_specs();

struct Decomposition {
    Kernel parallel;
    Kernel perp;
};

// g_par = C(x;g)/m (z - m) and g_perp = g - g_par. Both are functions of (bin, z, m)
// only, so they can be evaluated under any fitted mean.
Decomposition decompose(const Kernel& g);
Decomposition decompose(const Kernel& g, const MeasureContext& ctx);

bool is_c_homogeneous(const Kernel& g, const MeasureContext& ctx, double tol = 1e-9);

}  // namespace divgof
