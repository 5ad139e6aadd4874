#pragma once

#include <cmath>
#include <map>
#include <vector>

// Shared statistical helpers for the simulation-facing suites.
namespace test_helpers {

// chi2 critical values at significance 1e-3, indexed by degrees of freedom
inline double chi2_critical_1e3(int dof) {
    static const double table[] = {0.0,    10.828, 13.816, 16.266, 18.467, 20.515, 22.458,
                                   24.322, 26.124, 27.877, 29.588, 31.264, 32.909, 34.528,
                                   36.123, 37.697, 39.252, 40.790, 42.312, 43.820, 45.315};
    if (dof < 1) return 0.0;
    if (dof <= 20) return table[dof];
    // Wilson-Hilferty for larger dof
    const double z = 3.0902;  // Phi^{-1}(0.999)
    const double h = 2.0 / (9.0 * dof);
    const double x = 1.0 - h + z * std::sqrt(h);
    return dof * x * x * x;
}

// Pearson statistic against expected probabilities; cells with expected
// count < 5 are pooled into one bucket.
struct Chi2Result {
    double statistic = 0.0;
    int dof = 0;
    bool pass = false;
};

inline Chi2Result chi2_goodness(const std::map<int, long>& observed,
                                const std::map<int, double>& expected_prob, long draws) {
    double pooled_obs = 0.0;
    double pooled_exp = 0.0;
    double stat = 0.0;
    int cells = 0;
    for (const auto& [value, prob] : expected_prob) {
        const double exp_count = prob * static_cast<double>(draws);
        const auto it = observed.find(value);
        const double obs_count = it == observed.end() ? 0.0 : static_cast<double>(it->second);
        if (exp_count < 5.0) {
            pooled_obs += obs_count;
            pooled_exp += exp_count;
            continue;
        }
        stat += (obs_count - exp_count) * (obs_count - exp_count) / exp_count;
        ++cells;
    }
    if (pooled_exp > 0.0) {
        stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++cells;
    }
    Chi2Result result;
    result.statistic = stat;
    result.dof = cells > 1 ? cells - 1 : 1;
    result.pass = stat <= chi2_critical_1e3(result.dof);
    return result;
}

}  // namespace test_helpers
