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

// Test-only oracles and field generators. The integrators and reductions
// here stay independent of the implementation paths they check: only the
// primitive trilinear sampler is shared, and that sampler has its own
// hand-computed tests.

#ifndef MORPHO_TESTS_ORACLES_HPP
#define MORPHO_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "morpho/filters.hpp"
#include "morpho/volume.hpp"

namespace morpho::testing {

// Dense forward-Euler integration of the stationary flow, the reference
// for the scaling-and-squaring exponential.
inline VectorField3 euler_flow(const VectorField3& velocity, int steps) {
    VectorField3 x = identity_deformation(velocity.grid);
    const double h = 1.0 / static_cast<double>(steps);
    for (int s = 0; s < steps; ++s)
        for (std::size_t i = 0; i < x.vectors.size(); ++i)
            x.vectors[i] += sample_trilinear(velocity, x.vectors[i]) * h;
    return x;
}

// Smooth interior test fields: a few Gaussian bumps with widths of 8-11
// voxels, centers near the middle of the domain, tapered to zero at the
// boundary with a margin-10 smootherstep and normalized to max_norm.
// This is the frozen field class used by the SVF acceptance checks.
inline VectorField3 smooth_bump_field(const Grid3& grid, std::uint64_t seed, double max_norm) {
    Rng rng(seed);
    VectorField3 v(grid, FieldKind::velocity);
    const Vec3 c{(grid.dims[0] - 1) / 2.0, (grid.dims[1] - 1) / 2.0, (grid.dims[2] - 1) / 2.0};
    struct Bump {
        Vec3 center, dir;
        double width;
    };
    std::vector<Bump> bumps;
    for (int b = 0; b < 4; ++b) {
        Bump bump;
        bump.center = {c.x + rng.uniform(-5.0, 5.0), c.y + rng.uniform(-5.0, 5.0),
                       c.z + rng.uniform(-5.0, 5.0)};
        bump.width = rng.uniform(8.0, 11.0);
        Vec3 d{rng.normal(), rng.normal(), rng.normal()};
        bump.dir = d * (1.0 / d.norm());
        bumps.push_back(bump);
    }
    auto taper1d = [](double x, double n) {
        double t = std::min(x, n - 1.0 - x) / 10.0;
        t = std::clamp(t, 0.0, 1.0);
        return t * t * t * (t * (6.0 * t - 15.0) + 10.0); // smootherstep
    };
    std::size_t i = 0;
    for (int z = 0; z < grid.dims[2]; ++z) {
        for (int y = 0; y < grid.dims[1]; ++y) {
            for (int x = 0; x < grid.dims[0]; ++x, ++i) {
                const Vec3 p{static_cast<double>(x), static_cast<double>(y),
                             static_cast<double>(z)};
                Vec3 val{0.0, 0.0, 0.0};
                for (const Bump& b : bumps) {
                    const Vec3 d = p - b.center;
                    val += b.dir * std::exp(-d.norm2() / (2.0 * b.width * b.width));
                }
                const double w = taper1d(p.x, grid.dims[0]) * taper1d(p.y, grid.dims[1]) *
                                 taper1d(p.z, grid.dims[2]);
                v.vectors[i] = val * w;
            }
        }
    }
    const double current = max_vector_norm(v);
    if (current > 0.0)
        for (Vec3& w : v.vectors) w *= max_norm / current;
    return v;
}

inline double max_deformation_difference(const VectorField3& a, const VectorField3& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.vectors.size(); ++i) {
        const Vec3 d = a.vectors[i] - b.vectors[i];
        m = std::max({m, std::abs(d.x), std::abs(d.y), std::abs(d.z)});
    }
    return m;
}

// Intensity-weighted centroid, an independent check for template centering.
inline Vec3 foreground_centroid(const ScalarVolume& vol, double threshold) {
    double wsum = 0.0;
    Vec3 acc{0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (int z = 0; z < vol.grid.dims[2]; ++z)
        for (int y = 0; y < vol.grid.dims[1]; ++y)
            for (int x = 0; x < vol.grid.dims[0]; ++x, ++i) {
                const double w = vol.values[i];
                if (w <= threshold) continue;
                acc += Vec3{static_cast<double>(x), static_cast<double>(y),
                            static_cast<double>(z)} *
                       w;
                wsum += w;
            }
    return wsum > 0.0 ? acc * (1.0 / wsum) : Vec3{0.0, 0.0, 0.0};
}

// Binary dilation by one voxel (6-neighbourhood), morphological oracle for
// the ventricle edge map.
inline LabelVolume dilate6(const LabelVolume& mask) {
    LabelVolume out = mask;
    const Grid3& g = mask.grid;
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x) {
                if (mask.at(x, y, z) > 0) continue;
                bool touch = false;
                if (x > 0 && mask.at(x - 1, y, z) > 0) touch = true;
                if (x < g.dims[0] - 1 && mask.at(x + 1, y, z) > 0) touch = true;
                if (y > 0 && mask.at(x, y - 1, z) > 0) touch = true;
                if (y < g.dims[1] - 1 && mask.at(x, y + 1, z) > 0) touch = true;
                if (z > 0 && mask.at(x, y, z - 1) > 0) touch = true;
                if (z < g.dims[2] - 1 && mask.at(x, y, z + 1) > 0) touch = true;
                if (touch) out.at(x, y, z) = 1;
            }
    return out;
}

} // namespace morpho::testing

#endif // MORPHO_TESTS_ORACLES_HPP
