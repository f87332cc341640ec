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

#ifndef MORPHO_SCORES_HPP
#define MORPHO_SCORES_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "morpho/csv.hpp"
#include "morpho/registration.hpp"
#include "morpho/svf.hpp"
#include "morpho/volume.hpp"

namespace morpho {

// One-year normal-aging SVF on the reference (young) template grid.
struct AgingField {
    Svf v0;
    double gap_years = 0.0;
    double young_age = 0.0;
    double old_age = 0.0;
};

struct RegionSpec {
    std::string name;
    std::set<int> labels;                    // empty when an explicit mask is used
    std::optional<LabelVolume> explicit_mask; // binary region mask

    static RegionSpec ventricles() { return {"ventricles", {4, 14, 15, 43}, std::nullopt}; }
    static RegionSpec hippocampi_amygdala() {
        return {"hippocampi_amygdala", {17, 53, 18, 54}, std::nullopt};
    }
    static RegionSpec whole_brain() { return {"whole_brain", {}, std::nullopt}; }
    static RegionSpec ventricle_edges(LabelVolume mask) {
        return {"ventricle_edges", {}, std::move(mask)};
    }
};

struct VoxelScores {
    ScalarVolume as_map;
    ScalarVolume ads_map;
    ScalarVolume v0_norm;               // ||v0|| per voxel, drives outlier rejection
    std::vector<std::uint8_t> retained; // voxels with ||v0|| > 0
};

// v0 = SVF(young -> old templates) / age gap, per year.
inline AgingField one_year_field(const ScalarVolume& t_young, const ScalarVolume& t_old,
                                 double young_age, double old_age,
                                 const RegistrationConfig& cfg = {},
                                 const LabelVolume* mask = nullptr) {
    if (!(old_age > young_age))
        throw validation_error("one_year_field: old_age must exceed young_age");
    require_compatible(t_young.grid, t_old.grid, "one_year_field");
    RegistrationResult reg = register_images(t_young, t_old, cfg, mask);
    AgingField out;
    out.gap_years = old_age - young_age;
    out.young_age = young_age;
    out.old_age = old_age;
    out.v0 = scale(reg.svf, 1.0 / out.gap_years);
    out.v0.provenance = "one_year_field";
    return out;
}

// Voxel-wise orthogonal decomposition of the subject SVF against v0:
//   AS  = <v_subject, v0> / ||v0||^2
//   ADS = ||v_subject - AS * v0||
// Voxels where v0 vanishes are excluded (denominator singularity).
inline VoxelScores voxel_scores(const Svf& v_subject, const AgingField& aging) {
    require_compatible(v_subject.field.grid, aging.v0.field.grid, "voxel_scores");
    const Grid3& g = v_subject.field.grid;
    const std::size_t n = g.voxel_count();
    VoxelScores out;
    out.as_map = ScalarVolume(g);
    out.ads_map = ScalarVolume(g);
    out.v0_norm = ScalarVolume(g);
    out.retained.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& v0 = aging.v0.field.vectors[i];
        const double denom = v0.norm2();
        out.v0_norm.values[i] = std::sqrt(denom);
        if (denom == 0.0) continue;
        const Vec3& vs = v_subject.field.vectors[i];
        const double as = vs.dot(v0) / denom;
        out.as_map.values[i] = as;
        out.ads_map.values[i] = (vs - v0 * as).norm();
        out.retained[i] = 1;
    }
    return out;
}

// q-quantile of {||v0(p)|| : p in region} by linear interpolation of the
// sorted sample; retained voxels are those strictly above the threshold.
// q = 0 keeps every region voxel with ||v0|| > 0.
inline std::vector<std::uint8_t> quantile_threshold(const ScalarVolume& norm_map,
                                                    const std::vector<std::uint8_t>& region_mask,
                                                    double q) {
    if (q < 0.0 || q > 0.9)
        throw validation_error("quantile_threshold: q must lie in [0, 0.9]");
    if (region_mask.size() != norm_map.values.size())
        throw validation_error("quantile_threshold: mask size mismatch");

    std::vector<double> sample;
    for (std::size_t i = 0; i < region_mask.size(); ++i)
        if (region_mask[i]) sample.push_back(norm_map.values[i]);
    if (sample.empty()) throw validation_error("quantile_threshold: empty region");

    double threshold = 0.0;
    if (q > 0.0) {
        std::sort(sample.begin(), sample.end());
        const double h = q * static_cast<double>(sample.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(h);
        const double frac = h - static_cast<double>(lo);
        threshold = sample[lo];
        if (lo + 1 < sample.size()) threshold += frac * (sample[lo + 1] - sample[lo]);
    }

    std::vector<std::uint8_t> retained(region_mask.size(), 0);
    for (std::size_t i = 0; i < region_mask.size(); ++i)
        if (region_mask[i] && norm_map.values[i] > threshold) retained[i] = 1;
    return retained;
}

// Resolve a region to a binary voxel mask on the label volume's grid.
inline std::vector<std::uint8_t> region_mask(const RegionSpec& region, const LabelVolume& labels) {
    std::vector<std::uint8_t> mask(labels.labels.size(), 0);
    if (region.explicit_mask) {
        require_compatible(labels.grid, region.explicit_mask->grid, "region_mask");
        for (std::size_t i = 0; i < mask.size(); ++i)
            mask[i] = region.explicit_mask->labels[i] > 0 ? 1 : 0;
        return mask;
    }
    if (region.labels.empty()) { // whole brain: every non-background voxel
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = labels.labels[i] > 0 ? 1 : 0;
        return mask;
    }
    for (std::size_t i = 0; i < mask.size(); ++i)
        mask[i] = region.labels.count(labels.labels[i]) > 0 ? 1 : 0;
    return mask;
}

// Mean AS and ADS over the retained voxels of one region at quantile q.
inline std::pair<RegionScoreRow, RegionScoreRow> regional_score(const VoxelScores& vs,
                                                                const RegionSpec& region,
                                                                const LabelVolume& labels,
                                                                double q,
                                                                const std::string& scan_id) {
    require_compatible(vs.as_map.grid, labels.grid, "regional_score");
    const std::vector<std::uint8_t> in_region = region_mask(region, labels);
    const std::vector<std::uint8_t> retained = quantile_threshold(vs.v0_norm, in_region, q);

    double as_sum = 0.0, ads_sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < retained.size(); ++i) {
        if (!retained[i] || !vs.retained[i]) continue;
        as_sum += vs.as_map.values[i];
        ads_sum += vs.ads_map.values[i];
        ++count;
    }
    if (count == 0)
        throw validation_error("regional_score: no retained voxels in region " + region.name);

    RegionScoreRow as_row{scan_id, region.name, "AS", as_sum / count, count, q};
    RegionScoreRow ads_row{scan_id, region.name, "ADS", ads_sum / count, count, q};
    return {as_row, ads_row};
}

} // namespace morpho

#endif // MORPHO_SCORES_HPP
