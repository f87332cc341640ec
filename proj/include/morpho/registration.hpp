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

#ifndef MORPHO_REGISTRATION_HPP
#define MORPHO_REGISTRATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "morpho/filters.hpp"
#include "morpho/svf.hpp"
#include "morpho/volume.hpp"

namespace morpho {

struct RegistrationConfig {
    int lncc_window = 9;          // odd box window, voxels
    double lambda2 = 1.0;         // weight of the ||grad u||^2 penalty
    double lambda3 = 0.01;        // weight of the ||u||^2 penalty
    int pyramid_levels = 3;       // coarse-to-fine, 2x downsampling per level
    int iters_per_level = 100;
    double step_size = 0.1;       // initial step, voxels
    double smooth_update_sigma = 1.0;
    double convergence_tol = 1e-4; // relative energy decrease

    void validate() const {
        if (lncc_window < 1 || lncc_window % 2 == 0)
            throw validation_error("RegistrationConfig: lncc_window must be odd and positive");
        if (lambda2 < 0.0 || lambda3 < 0.0)
            throw validation_error("RegistrationConfig: lambda2/lambda3 must be non-negative");
        if (pyramid_levels < 1)
            throw validation_error("RegistrationConfig: pyramid_levels must be >= 1");
        if (iters_per_level < 0)
            throw validation_error("RegistrationConfig: iters_per_level must be >= 0");
        if (!(step_size > 0.0))
            throw validation_error("RegistrationConfig: step_size must be positive");
        if (!(smooth_update_sigma > 0.0))
            throw validation_error("RegistrationConfig: smooth_update_sigma must be positive");
        if (!(convergence_tol > 0.0))
            throw validation_error("RegistrationConfig: convergence_tol must be positive");
    }
};

struct RegistrationResult {
    Svf svf;                  // field on the fixed grid, warps fixed toward moving
    double final_energy = 0.0;
    std::vector<std::vector<double>> level_traces; // accepted energies, coarse to fine
    double min_jacobian = 0.0;

    std::vector<double> energy_trace() const {
        std::vector<double> flat;
        for (const auto& level : level_traces) flat.insert(flat.end(), level.begin(), level.end());
        return flat;
    }
};

namespace detail {

// Mean squared local Pearson correlation over a box window, computed with
// moving sums. Windows truncate at the volume boundary. Voxels whose local
// variance (either image) falls below 1e-12 contribute 0. When a mask is
// given, the mean runs over mask voxels only.
inline double lncc_mean(const ScalarVolume& a, const ScalarVolume& b, int window,
                        const std::vector<std::uint8_t>* mask) {
    require_compatible(a.grid, b.grid, "lncc");
    if (window < 1 || window % 2 == 0)
        throw validation_error("lncc: window must be odd and positive");
    const Grid3& g = a.grid;
    const std::size_t n = g.voxel_count();
    const int radius = window / 2;

    std::vector<double> sa(a.values), sb(b.values), saa(n), sbb(n), sab(n), scratch;
    for (std::size_t i = 0; i < n; ++i) {
        saa[i] = a.values[i] * a.values[i];
        sbb[i] = b.values[i] * b.values[i];
        sab[i] = a.values[i] * b.values[i];
    }
    box_sum_inplace(sa, g, radius, scratch);
    box_sum_inplace(sb, g, radius, scratch);
    box_sum_inplace(saa, g, radius, scratch);
    box_sum_inplace(sbb, g, radius, scratch);
    box_sum_inplace(sab, g, radius, scratch);
    const std::vector<double> counts = box_counts(g, radius);

    double acc = 0.0;
    std::size_t denom = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && (*mask)[i] == 0) continue;
        ++denom;
        const double cnt = counts[i];
        const double ma = sa[i] / cnt, mb = sb[i] / cnt;
        const double var_a = saa[i] / cnt - ma * ma;
        const double var_b = sbb[i] / cnt - mb * mb;
        if (var_a < 1e-12 || var_b < 1e-12) continue;
        const double cov = sab[i] / cnt - ma * mb;
        acc += (cov * cov) / (var_a * var_b);
    }
    if (denom == 0) throw validation_error("lncc: empty mask");
    return acc / static_cast<double>(denom);
}

// (img - local mean) / local std over the box window; voxels whose local
// variance vanishes map to 0. The demons force runs on standardized
// images so it inherits the affine-intensity invariance of the LNCC term.
inline ScalarVolume local_standardize(const ScalarVolume& img, int window) {
    const Grid3& g = img.grid;
    const std::size_t n = g.voxel_count();
    const int radius = window / 2;
    std::vector<double> sum(img.values), sumsq(n), scratch;
    for (std::size_t i = 0; i < n; ++i) sumsq[i] = img.values[i] * img.values[i];
    box_sum_inplace(sum, g, radius, scratch);
    box_sum_inplace(sumsq, g, radius, scratch);
    const std::vector<double> counts = box_counts(g, radius);
    ScalarVolume out(g);
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = sum[i] / counts[i];
        const double var = sumsq[i] / counts[i] - mean * mean;
        out.values[i] = var < 1e-12 ? 0.0 : (img.values[i] - mean) / std::sqrt(var);
    }
    return out;
}

} // namespace detail

// Similarity in [0, 1]; the registration energy uses 1 - lncc.
inline double lncc(const ScalarVolume& a, const ScalarVolume& b, int window) {
    return detail::lncc_mean(a, b, window, nullptr);
}

// lambda2 * mean ||grad u||^2 + lambda3 * mean ||u||^2 over the voxel grid.
// The population-centering term of the reference energy is applied during
// template construction, not here.
inline double regularizer(const VectorField3& u, const RegistrationConfig& cfg) {
    if (u.kind != FieldKind::displacement)
        throw validation_error("regularizer: field kind must be displacement");
    const Grid3& g = u.grid;
    double grad_sum = 0.0, mag_sum = 0.0;
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const int xm = x > 0 ? x - 1 : 0, xp = x < g.dims[0] - 1 ? x + 1 : x;
                const int ym = y > 0 ? y - 1 : 0, yp = y < g.dims[1] - 1 ? y + 1 : y;
                const int zm = z > 0 ? z - 1 : 0, zp = z < g.dims[2] - 1 ? z + 1 : z;
                const Vec3 dx = (u.at(xp, y, z) - u.at(xm, y, z)) * (1.0 / (xp - xm));
                const Vec3 dy = (u.at(x, yp, z) - u.at(x, ym, z)) * (1.0 / (yp - ym));
                const Vec3 dz = (u.at(x, y, zp) - u.at(x, y, zm)) * (1.0 / (zp - zm));
                grad_sum += dx.norm2() + dy.norm2() + dz.norm2();
                mag_sum += u.at(x, y, z).norm2();
            }
        }
    }
    const double n = static_cast<double>(g.voxel_count());
    return cfg.lambda2 * grad_sum / n + cfg.lambda3 * mag_sum / n;
}

namespace detail {

struct EnergyState {
    double energy = 0.0;
    VectorField3 phi;
    ScalarVolume warped;
};

inline EnergyState evaluate_energy(const ScalarVolume& fixed, const ScalarVolume& moving,
                                   const VectorField3& v, const RegistrationConfig& cfg,
                                   const std::vector<std::uint8_t>* mask) {
    EnergyState st;
    st.phi = exponential(Svf(v));
    st.warped = warp(moving, st.phi);
    const double similarity = lncc_mean(fixed, st.warped, cfg.lncc_window, mask);
    const VectorField3 u = to_displacement(st.phi);
    st.energy = (1.0 - similarity) + regularizer(u, cfg);
    return st;
}

// Descent direction: Thirion-style demons force for the similarity term,
// computed on locally standardized intensities and Gaussian-smoothed. The
// regularizer steers through the energy acceptance test rather than an
// explicit gradient term (its per-voxel gradient is a factor of the voxel
// count smaller than the force).
inline VectorField3 descent_direction(const ScalarVolume& fixed_std,
                                      const ScalarVolume& warped,
                                      const RegistrationConfig& cfg,
                                      const std::vector<std::uint8_t>* mask) {
    const ScalarVolume warped_std = local_standardize(warped, cfg.lncc_window);
    VectorField3 force = spatial_gradient(warped_std);
    const std::size_t n = fixed_std.grid.voxel_count();
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && (*mask)[i] == 0) {
            force.vectors[i] = {0.0, 0.0, 0.0};
            continue;
        }
        const double r = fixed_std.values[i] - warped_std.values[i];
        const Vec3& grad = force.vectors[i];
        const double denom = grad.norm2() + r * r + 1e-12;
        force.vectors[i] = grad * (r / denom);
    }
    gaussian_smooth_inplace(force, cfg.smooth_update_sigma);
    return force;
}

struct PyramidLevel {
    ScalarVolume fixed;
    ScalarVolume moving;
    std::vector<std::uint8_t> mask; // empty when unmasked
};

inline std::vector<PyramidLevel> build_pyramid(const ScalarVolume& fixed,
                                               const ScalarVolume& moving,
                                               const LabelVolume* mask, int levels) {
    std::vector<PyramidLevel> pyramid;
    PyramidLevel finest;
    finest.fixed = fixed;
    finest.moving = moving;
    if (mask) {
        finest.mask.resize(fixed.grid.voxel_count());
        for (std::size_t i = 0; i < finest.mask.size(); ++i)
            finest.mask[i] = mask->labels[i] > 0 ? 1 : 0;
    }
    pyramid.push_back(std::move(finest));
    for (int l = 1; l < levels; ++l) {
        const PyramidLevel& prev = pyramid.back();
        const auto& d = prev.fixed.grid.dims;
        if (std::min({d[0], d[1], d[2]}) < 8) break; // too coarse to halve again
        PyramidLevel next;
        next.fixed = downsample2x(prev.fixed);
        next.moving = downsample2x(prev.moving);
        if (!prev.mask.empty()) {
            ScalarVolume m(prev.fixed.grid);
            for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = prev.mask[i];
            const ScalarVolume md = downsample2x(m);
            next.mask.resize(md.values.size());
            for (std::size_t i = 0; i < next.mask.size(); ++i)
                next.mask[i] = md.values[i] >= 0.5 ? 1 : 0;
        }
        pyramid.push_back(std::move(next));
    }
    return pyramid;
}

} // namespace detail

// Pairwise diffeomorphic registration. Finds the SVF v minimizing
//   E(v) = (1 - lncc(fixed, warp(moving, exp(v)))) + regularizer(u)
// by coarse-to-fine gradient descent with step halving. Steps are accepted
// only when the energy decreases and exp(v) keeps a positive Jacobian, so
// the returned field is always diffeomorphic on the grid. Non-convergence
// is not an error; the best iterate is returned with its trace.
inline RegistrationResult register_images(const ScalarVolume& fixed, const ScalarVolume& moving,
                                          const RegistrationConfig& cfg = {},
                                          const LabelVolume* fixed_mask = nullptr) {
    require_compatible(fixed.grid, moving.grid, "register_images");
    if (fixed_mask) require_compatible(fixed.grid, fixed_mask->grid, "register_images mask");
    cfg.validate();
    for (const ScalarVolume* img : {&fixed, &moving})
        for (double v : img->values)
            if (!(v >= -1e-9 && v <= 1.0 + 1e-9))
                throw validation_error("register_images: intensities must lie in [0, 1]");

    auto pyramid = detail::build_pyramid(fixed, moving, fixed_mask, cfg.pyramid_levels);

    RegistrationResult result;
    VectorField3 v(pyramid.back().fixed.grid, FieldKind::velocity);

    for (int l = static_cast<int>(pyramid.size()) - 1; l >= 0; --l) {
        const detail::PyramidLevel& level = pyramid[l];
        const std::vector<std::uint8_t>* mask = level.mask.empty() ? nullptr : &level.mask;
        if (!(v.grid == level.fixed.grid)) v = upsample_field(v, level.fixed.grid);

        const ScalarVolume fixed_std = detail::local_standardize(level.fixed, cfg.lncc_window);
        detail::EnergyState state =
            detail::evaluate_energy(level.fixed, level.moving, v, cfg, mask);
        std::vector<double> trace{state.energy};
        double step = cfg.step_size;

        for (int iter = 0; iter < cfg.iters_per_level; ++iter) {
            const VectorField3 dir =
                detail::descent_direction(fixed_std, state.warped, cfg, mask);

            bool accepted = false;
            VectorField3 cand(v.grid, FieldKind::velocity);
            while (step >= 1e-6) {
                for (std::size_t i = 0; i < v.vectors.size(); ++i)
                    cand.vectors[i] = v.vectors[i] + dir.vectors[i] * step;
                detail::EnergyState cand_state =
                    detail::evaluate_energy(level.fixed, level.moving, cand, cfg, mask);
                if (cand_state.energy < state.energy && min_jacobian(cand_state.phi) > 0.0) {
                    const double prev = state.energy;
                    std::swap(v.vectors, cand.vectors);
                    state = std::move(cand_state);
                    trace.push_back(state.energy);
                    accepted = true;
                    step = std::min(step * 1.2, 1.0);
                    if ((prev - state.energy) / std::max(std::abs(prev), 1e-12) <
                        cfg.convergence_tol)
                        iter = cfg.iters_per_level; // converged at this level
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
        }
        result.level_traces.push_back(std::move(trace)); // coarse to fine

        if (l == 0) {
            result.final_energy = state.energy;
            result.min_jacobian = min_jacobian(state.phi);
        }
    }

    result.svf = Svf(std::move(v), "register_images");
    return result;
}

} // namespace morpho

#endif // MORPHO_REGISTRATION_HPP
