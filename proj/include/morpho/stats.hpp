/*
 * morphoscope — deformation-based morphometry toolkit
 *
 * Copyright 2026 the morphoscope authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MORPHO_STATS_HPP
#define MORPHO_STATS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "morpho/volume.hpp"

namespace morpho {

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double p_value = 1.0;
    int n = 0;
};

enum class EffectBand { none, medium, large, very_large };

inline std::string to_string(EffectBand b) {
    switch (b) {
        case EffectBand::none: return "none";
        case EffectBand::medium: return "medium";
        case EffectBand::large: return "large";
        default: return "very_large";
    }
}

struct GroupComparison {
    std::string group_a, group_b;
    double t_stat = 0.0;
    double p_raw = 1.0;
    double p_bonferroni = 1.0;
    double cohens_d = 0.0;
    EffectBand band = EffectBand::none;
};

namespace stats_detail {

inline double mean(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_variance(const std::vector<double>& x, double m) {
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

inline double student_t_two_sided_p(double t, double dof) {
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t_distribution<double> dist(dof);
    return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

} // namespace stats_detail

// Ordinary least squares of y on x with R^2 and the two-sided p-value of
// the slope (t distribution, n-2 dof). Constant y is a defined degenerate
// case: R^2 = 0, p = 1.
inline FitResult fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw validation_error("fit_linear: size mismatch");
    const int n = static_cast<int>(x.size());
    if (n < 3) throw validation_error("fit_linear: need at least 3 points");
    const double mx = stats_detail::mean(x), my = stats_detail::mean(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) throw validation_error("fit_linear: x values are all equal");

    FitResult fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy <= 0.0) { // constant response
        fit.r_squared = 0.0;
        fit.p_value = 1.0;
        return fit;
    }
    const double ss_res = syy - fit.slope * sxy;
    fit.r_squared = 1.0 - ss_res / syy;
    const double se2 = std::max(ss_res, 0.0) / (n - 2) / sxx;
    if (se2 <= 0.0) {
        fit.p_value = 0.0; // exact fit
    } else {
        const double t = fit.slope / std::sqrt(se2);
        fit.p_value = stats_detail::student_t_two_sided_p(t, n - 2);
    }
    return fit;
}

// Argmax of R^2 over the quantile grid; ties resolve to the smallest q.
inline std::pair<double, FitResult> select_quantile(
    const std::map<double, std::pair<std::vector<double>, std::vector<double>>>& per_q) {
    if (per_q.empty()) throw validation_error("select_quantile: empty map");
    double best_q = per_q.begin()->first;
    FitResult best_fit;
    bool first = true;
    for (const auto& [q, xy] : per_q) { // std::map iterates q ascending
        FitResult fit = fit_linear(xy.first, xy.second);
        if (first || fit.r_squared > best_fit.r_squared) {
            best_q = q;
            best_fit = fit;
            first = false;
        }
    }
    return {best_q, best_fit};
}

// Student's two-sample pooled-variance t-test, two-sided. Degenerate case
// (zero pooled variance): equal means give p = 1, unequal means p = 0.
inline std::pair<double, double> t_test_ind(const std::vector<double>& a,
                                            const std::vector<double>& b, bool welch = false) {
    if (a.size() < 2 || b.size() < 2)
        throw validation_error("t_test_ind: each sample needs at least 2 values");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = stats_detail::mean(a), mb = stats_detail::mean(b);
    const double va = stats_detail::sample_variance(a, ma);
    const double vb = stats_detail::sample_variance(b, mb);

    double t, dof;
    if (welch) {
        const double se2 = va / na + vb / nb;
        if (se2 <= 0.0) {
            return ma == mb ? std::make_pair(0.0, 1.0)
                            : std::make_pair(ma > mb ? HUGE_VAL : -HUGE_VAL, 0.0);
        }
        t = (ma - mb) / std::sqrt(se2);
        dof = se2 * se2 /
              ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    } else {
        const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
        if (pooled <= 0.0) {
            return ma == mb ? std::make_pair(0.0, 1.0)
                            : std::make_pair(ma > mb ? HUGE_VAL : -HUGE_VAL, 0.0);
        }
        t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
        dof = na + nb - 2.0;
    }
    return {t, stats_detail::student_t_two_sided_p(t, dof)};
}

inline double bonferroni(double p, int m) {
    if (m < 1) throw validation_error("bonferroni: m must be >= 1");
    return std::min(1.0, p * static_cast<double>(m));
}

// Effect-size bands on |d|: [0.35, 0.65) medium, [0.65, 0.9) large,
// >= 0.9 very large.
inline EffectBand effect_band(double d) {
    const double a = std::abs(d);
    if (a >= 0.9) return EffectBand::very_large;
    if (a >= 0.65) return EffectBand::large;
    if (a >= 0.35) return EffectBand::medium;
    return EffectBand::none;
}

// d = (mean(a) - mean(b)) / pooled sd; negative when the second group's
// mean is higher.
inline std::pair<double, EffectBand> cohens_d(const std::vector<double>& a,
                                              const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw validation_error("cohens_d: each sample needs at least 2 values");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = stats_detail::mean(a), mb = stats_detail::mean(b);
    const double va = stats_detail::sample_variance(a, ma);
    const double vb = stats_detail::sample_variance(b, mb);
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
    if (pooled <= 0.0) {
        if (ma == mb) return {0.0, EffectBand::none};
        throw numerical_error("cohens_d: zero pooled variance with unequal means");
    }
    const double d = (ma - mb) / std::sqrt(pooled);
    return {d, effect_band(d)};
}

// Common-slope ANCOVA age adjustment. Fits score = mu_group + beta * age
// (shared beta across groups), removes the age effect around the grand mean
// age and centers the result on the reference group:
//   adjusted_i = score_i - beta * (age_i - mean(age)) - mean(adjusted ref).
inline std::vector<double> ancova_adjust(const std::vector<double>& scores,
                                         const std::vector<double>& ages,
                                         const std::vector<std::string>& groups,
                                         const std::string& reference_group) {
    const std::size_t n = scores.size();
    if (ages.size() != n || groups.size() != n)
        throw validation_error("ancova_adjust: size mismatch");
    if (n == 0) throw validation_error("ancova_adjust: empty input");

    std::map<std::string, std::vector<std::size_t>> by_group;
    for (std::size_t i = 0; i < n; ++i) by_group[groups[i]].push_back(i);
    if (by_group.size() < 2) throw validation_error("ancova_adjust: need at least 2 groups");
    if (by_group.find(reference_group) == by_group.end())
        throw validation_error("ancova_adjust: reference group '" + reference_group +
                               "' not present");

    // pooled within-group slope (OLS solution of the dummy-intercept model)
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [name, idx] : by_group) {
        double mean_age = 0.0, mean_score = 0.0;
        for (std::size_t i : idx) {
            mean_age += ages[i];
            mean_score += scores[i];
        }
        mean_age /= static_cast<double>(idx.size());
        mean_score /= static_cast<double>(idx.size());
        for (std::size_t i : idx) {
            sxx += (ages[i] - mean_age) * (ages[i] - mean_age);
            sxy += (ages[i] - mean_age) * (scores[i] - mean_score);
        }
    }
    if (sxx <= 0.0)
        throw validation_error("ancova_adjust: rank-deficient design (ages constant)");
    const double beta = sxy / sxx;

    const double grand_age = stats_detail::mean(ages);
    std::vector<double> adjusted(n);
    for (std::size_t i = 0; i < n; ++i)
        adjusted[i] = scores[i] - beta * (ages[i] - grand_age);

    double ref_mean = 0.0;
    const auto& ref = by_group.at(reference_group);
    for (std::size_t i : ref) ref_mean += adjusted[i];
    ref_mean /= static_cast<double>(ref.size());
    for (double& v : adjusted) v -= ref_mean;
    return adjusted;
}

// Spearman rank correlation (average ranks on ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw validation_error("spearman: need two equal-length samples of size >= 2");
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> rx = ranks(x), ry = ranks(y);
    const double mx = stats_detail::mean(rx), my = stats_detail::mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// Significance annotation used in the comparison CSV.
inline std::string p_stars(double p) {
    if (p <= 0.0001) return "****";
    if (p <= 0.001) return "***";
    if (p <= 0.01) return "**";
    if (p <= 0.05) return "*";
    return "ns";
}

} // namespace morpho

#endif // MORPHO_STATS_HPP
