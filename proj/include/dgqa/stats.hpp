#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "dgqa/errors.hpp"

namespace dgqa {

struct Chi2Result {
    double chi2 = 0.0;
    double p_value = 1.0;
    int dof = 1;
};

/// Pooled two-proportion chi-square test (1 degree of freedom, no
/// continuity correction): are successes1/n1 and successes2/n2
/// plausibly draws from one rate?
inline Chi2Result two_proportion_chi2(std::size_t successes1, std::size_t n1,
                                      std::size_t successes2, std::size_t n2) {
    if (n1 == 0 || n2 == 0)
        throw ValidationError("two-proportion test requires non-empty groups");
    if (successes1 > n1 || successes2 > n2)
        throw ValidationError("success count exceeds group size");
    const double x1 = static_cast<double>(successes1), x2 = static_cast<double>(successes2);
    const double m1 = static_cast<double>(n1), m2 = static_cast<double>(n2);
    const double pooled = (x1 + x2) / (m1 + m2);
    if (pooled <= 0.0 || pooled >= 1.0)
        throw ValidationError("degenerate pooled proportion (all successes or all "
                              "failures); the test statistic is undefined");

    // 2x2 observed vs expected under the pooled rate.
    const double obs[2][2] = {{x1, m1 - x1}, {x2, m2 - x2}};
    const double exp[2][2] = {{m1 * pooled, m1 * (1.0 - pooled)},
                              {m2 * pooled, m2 * (1.0 - pooled)}};
    double chi2 = 0.0;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            const double d = obs[r][c] - exp[r][c];
            chi2 += d * d / exp[r][c];
        }

    boost::math::chi_squared dist(1);
    return {chi2, boost::math::cdf(boost::math::complement(dist, chi2)), 1};
}

struct TTestResult {
    double t = 0.0;
    double dof = 0.0;
    double p_value = 1.0;  // two-sided
};

/// Welch's two-sample t-test (unequal variances, Welch–Satterthwaite
/// degrees of freedom), two-sided p-value.
inline TTestResult welch_t_test(const std::vector<double>& xs,
                                const std::vector<double>& ys) {
    if (xs.size() < 2 || ys.size() < 2)
        throw ValidationError("each sample needs at least two observations");
    auto mean_var = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (const double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (const double x : v) ss += (x - mean) * (x - mean);
        return std::pair<double, double>(mean, ss / static_cast<double>(v.size() - 1));
    };
    const auto [mx, vx] = mean_var(xs);
    const auto [my, vy] = mean_var(ys);
    const double nx = static_cast<double>(xs.size());
    const double ny = static_cast<double>(ys.size());
    const double se2x = vx / nx, se2y = vy / ny;
    if (se2x + se2y <= 0.0)
        throw ValidationError("both samples have zero variance; the t statistic is "
                              "undefined");
    const double t = (mx - my) / std::sqrt(se2x + se2y);
    const double dof = (se2x + se2y) * (se2x + se2y) /
                       (se2x * se2x / (nx - 1.0) + se2y * se2y / (ny - 1.0));

    boost::math::students_t dist(dof);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return {t, dof, p};
}

/// Krippendorff's alpha for nominal labels, via the coincidence matrix.
/// Each item contributes its label pairs weighted by 1/(m-1) where m is
/// that item's number of labels; items with fewer than two labels carry
/// no pairable information and are skipped.
inline double krippendorff_alpha(const std::vector<std::vector<std::string>>& items) {
    std::map<std::string, std::map<std::string, double>> coincidence;
    std::map<std::string, double> totals;
    double n = 0.0;
    for (const auto& labels : items) {
        const std::size_t m = labels.size();
        if (m < 2) continue;
        const double w = 1.0 / static_cast<double>(m - 1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                coincidence[labels[i]][labels[j]] += w;
            }
        for (const auto& l : labels) {
            totals[l] += 1.0;
            n += 1.0;
        }
    }
    if (n <= 1.0)
        throw ValidationError("agreement is undefined without at least one multiply-"
                              "labeled item");

    double observed_disagreement = 0.0;  // sum of off-diagonal coincidences
    for (const auto& [c, row] : coincidence)
        for (const auto& [k, v] : row)
            if (c != k) observed_disagreement += v;

    double expected_disagreement = 0.0;  // sum over c != k of n_c * n_k / (n - 1)
    for (const auto& [c, nc] : totals)
        for (const auto& [k, nk] : totals)
            if (c != k) expected_disagreement += nc * nk;
    expected_disagreement /= (n - 1.0);

    // Unanimous data: no expected disagreement. Observed is then also
    // zero, which is perfect agreement by convention.
    if (expected_disagreement == 0.0) return 1.0;
    return 1.0 - observed_disagreement / expected_disagreement;
}

}  // namespace dgqa
