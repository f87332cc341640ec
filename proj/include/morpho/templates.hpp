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

#ifndef MORPHO_TEMPLATES_HPP
#define MORPHO_TEMPLATES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "morpho/registration.hpp"
#include "morpho/svf.hpp"
#include "morpho/volume.hpp"

namespace morpho {

struct TemplateBuildLogRow {
    int iteration = 0;
    double mean_u = 0.0; // mean ||u-bar|| over voxels after the iteration
    double efc = 0.0;
};

struct TemplateModel {
    std::vector<int> ages;
    std::map<int, ScalarVolume> templates;
    std::map<int, LabelVolume> masks;
    std::map<int, std::vector<TemplateBuildLogRow>> build_logs;
};

// Entropy focus criterion, normalized to [0, 1] over the masked voxels:
//   E = -sum (B_i/B_max) ln(B_i/B_max),  B_max = sqrt(sum B_i^2),
// divided by the uniform-image maximum sqrt(N) ln(sqrt(N)). Zero-valued
// voxels contribute 0; a single bright voxel gives 0, a uniform image 1.
// Lower values mean sharper images.
inline double efc(const ScalarVolume& vol, const LabelVolume* mask = nullptr) {
    if (mask) require_compatible(vol.grid, mask->grid, "efc");
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < vol.values.size(); ++i) {
        if (mask && mask->labels[i] <= 0) continue;
        ++n;
        sum_sq += vol.values[i] * vol.values[i];
    }
    if (n == 0) throw validation_error("efc: empty mask");
    if (sum_sq <= 0.0) throw validation_error("efc: all-zero input");
    const double b_max = std::sqrt(sum_sq);
    double entropy = 0.0;
    for (std::size_t i = 0; i < vol.values.size(); ++i) {
        if (mask && mask->labels[i] <= 0) continue;
        const double r = vol.values[i] / b_max;
        if (r > 0.0) entropy -= r * std::log(r);
    }
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double e_max = sqrt_n * std::log(sqrt_n);
    if (!(e_max > 0.0)) throw validation_error("efc: needs at least 2 masked voxels");
    return entropy / e_max;
}

// Shell of ventricle growth: voxels belonging to the ventricle label set in
// the old segmentation but not in the young one (strict set difference).
inline LabelVolume ventricle_edge_map(const LabelVolume& seg_young, const LabelVolume& seg_old,
                                      const std::set<int>& ventricle_labels) {
    require_compatible(seg_young.grid, seg_old.grid, "ventricle_edge_map");
    LabelVolume out(seg_young.grid);
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        const bool in_old = ventricle_labels.count(seg_old.labels[i]) > 0;
        const bool in_young = ventricle_labels.count(seg_young.labels[i]) > 0;
        out.labels[i] = (in_old && !in_young) ? 1 : 0;
    }
    return out;
}

struct TemplateCohortEntry {
    const ScalarVolume* image = nullptr;
    double age = 0.0;
    std::string id; // reductions run in sorted-id order for reproducibility
};

// Iterative unbiased template at target_age. Subjects are weighted by a
// Gaussian age kernel; each outer iteration registers the current template
// to every subject, averages the subjects resampled into template space and
// re-centers with exp(-u_bar) so the mean deformation stays near zero.
// run_parallel lets the caller distribute the per-subject registrations.
inline ScalarVolume build_template(
    const std::vector<TemplateCohortEntry>& cohort, double target_age, double bandwidth,
    const RegistrationConfig& cfg, int outer_iters,
    std::vector<TemplateBuildLogRow>* log = nullptr, const LabelVolume* efc_mask = nullptr,
    const std::function<void(std::size_t, const std::function<void(std::size_t)>&)>&
        run_parallel = {}) {
    if (cohort.empty()) throw validation_error("build_template: empty cohort");
    if (!(bandwidth > 0.0)) throw validation_error("build_template: bandwidth must be positive");

    std::vector<const TemplateCohortEntry*> ordered;
    for (const auto& entry : cohort) ordered.push_back(&entry);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const TemplateCohortEntry* a, const TemplateCohortEntry* b) {
                         return a->id < b->id;
                     });

    std::vector<const ScalarVolume*> images;
    std::vector<double> weights;
    double weight_sum = 0.0;
    for (const auto* entry : ordered) {
        const double d = entry->age - target_age;
        const double w = std::exp(-(d * d) / (2.0 * bandwidth * bandwidth));
        if (w <= 1e-3) continue;
        images.push_back(entry->image);
        weights.push_back(w);
        weight_sum += w;
    }
    if (images.empty())
        throw validation_error("build_template: no subject has age-kernel weight above 1e-3");
    for (std::size_t i = 1; i < images.size(); ++i)
        require_compatible(images[0]->grid, images[i]->grid, "build_template");

    const Grid3& grid = images[0]->grid;
    const std::size_t n = grid.voxel_count();

    ScalarVolume tpl(grid);
    for (std::size_t s = 0; s < images.size(); ++s)
        for (std::size_t i = 0; i < n; ++i) tpl.values[i] += weights[s] * images[s]->values[i];
    for (std::size_t i = 0; i < n; ++i) tpl.values[i] /= weight_sum;

    auto for_each_subject = [&](const std::function<void(std::size_t)>& body) {
        if (run_parallel)
            run_parallel(images.size(), body);
        else
            for (std::size_t s = 0; s < images.size(); ++s) body(s);
    };

    for (int it = 0; it < outer_iters; ++it) {
        std::vector<Svf> fields(images.size());
        std::vector<ScalarVolume> warped(images.size());
        for_each_subject([&](std::size_t s) {
            RegistrationResult r = register_images(tpl, *images[s], cfg);
            warped[s] = warp(*images[s], exponential(r.svf));
            fields[s] = std::move(r.svf);
        });

        // weighted mean of warped subjects and of the template-to-subject SVFs,
        // accumulated in subject order for reproducibility
        ScalarVolume mean_img(grid);
        VectorField3 mean_v(grid, FieldKind::velocity);
        for (std::size_t s = 0; s < images.size(); ++s) {
            const double w = weights[s];
            for (std::size_t i = 0; i < n; ++i) {
                mean_img.values[i] += w * warped[s].values[i];
                mean_v.vectors[i] += fields[s].field.vectors[i] * w;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            mean_img.values[i] /= weight_sum;
            mean_v.vectors[i] *= 1.0 / weight_sum;
        }

        tpl = warp(mean_img, exponential(scale(Svf(mean_v), -1.0)));

        if (log) {
            double mean_norm = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean_norm += mean_v.vectors[i].norm();
            mean_norm /= static_cast<double>(n);
            log->push_back({it + 1, mean_norm, efc(tpl, efc_mask)});
        }
    }
    return tpl;
}

} // namespace morpho

#endif // MORPHO_TEMPLATES_HPP
