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

#ifndef MORPHO_FILTERS_HPP
#define MORPHO_FILTERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "morpho/volume.hpp"

namespace morpho {

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[i + radius];
    }
    for (double& w : k) w /= sum;
    return k;
}

// Separable correlation along one axis with replicated boundary.
template <typename T>
void correlate_axis(std::vector<T>& data, const Grid3& g, int axis,
                    const std::vector<double>& kernel, std::vector<T>& scratch) {
    const int radius = static_cast<int>(kernel.size() / 2);
    const int d[3] = {g.dims[0], g.dims[1], g.dims[2]};
    const std::size_t stride[3] = {1, static_cast<std::size_t>(d[0]),
                                   static_cast<std::size_t>(d[0]) * d[1]};
    const int n = d[axis];
    const std::size_t s = stride[axis];
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    scratch.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < d[a2]; ++j) {
        for (int i = 0; i < d[a1]; ++i) {
            const std::size_t base = stride[a1] * i + stride[a2] * j;
            T* line = data.data() + base;
            for (int x = 0; x < n; ++x) {
                T acc{};
                for (int t = -radius; t <= radius; ++t) {
                    int xi = std::clamp(x + t, 0, n - 1);
                    acc += line[s * xi] * kernel[t + radius];
                }
                scratch[x] = acc;
            }
            for (int x = 0; x < n; ++x) line[s * x] = scratch[x];
        }
    }
}

} // namespace detail

inline void gaussian_smooth_inplace(ScalarVolume& vol, double sigma) {
    if (!(sigma > 0.0)) return;
    const auto kernel = detail::gaussian_kernel(sigma);
    std::vector<double> scratch;
    for (int axis = 0; axis < 3; ++axis)
        detail::correlate_axis(vol.values, vol.grid, axis, kernel, scratch);
}

inline ScalarVolume gaussian_smooth(const ScalarVolume& vol, double sigma) {
    ScalarVolume out = vol;
    gaussian_smooth_inplace(out, sigma);
    return out;
}

inline void gaussian_smooth_inplace(VectorField3& field, double sigma) {
    if (!(sigma > 0.0)) return;
    const auto kernel = detail::gaussian_kernel(sigma);
    std::vector<Vec3> scratch;
    for (int axis = 0; axis < 3; ++axis)
        detail::correlate_axis(field.vectors, field.grid, axis, kernel, scratch);
}

// Moving-window sums over the clamped box neighbourhood, one running-sum
// pass per axis. Window w = 2*radius+1; boundary windows truncate.
inline void box_sum_inplace(std::vector<double>& data, const Grid3& g, int radius,
                            std::vector<double>& scratch) {
    const int d[3] = {g.dims[0], g.dims[1], g.dims[2]};
    const std::size_t stride[3] = {1, static_cast<std::size_t>(d[0]),
                                   static_cast<std::size_t>(d[0]) * d[1]};
    for (int axis = 0; axis < 3; ++axis) {
        const int n = d[axis];
        const std::size_t s = stride[axis];
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        scratch.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < d[a2]; ++j) {
            for (int i = 0; i < d[a1]; ++i) {
                double* line = data.data() + stride[a1] * i + stride[a2] * j;
                double acc = 0.0;
                for (int x = 0; x <= std::min(radius, n - 1); ++x) acc += line[s * x];
                for (int x = 0; x < n; ++x) {
                    scratch[x] = acc;
                    const int enter = x + radius + 1;
                    const int leave = x - radius;
                    if (enter < n) acc += line[s * enter];
                    if (leave >= 0) acc -= line[s * leave];
                }
                for (int x = 0; x < n; ++x) line[s * x] = scratch[x];
            }
        }
    }
}

// Number of voxels inside the clamped box window at each position.
inline std::vector<double> box_counts(const Grid3& g, int radius) {
    auto axis_counts = [radius](int n) {
        std::vector<double> c(static_cast<std::size_t>(n));
        for (int x = 0; x < n; ++x)
            c[x] = static_cast<double>(std::min(x + radius, n - 1) - std::max(x - radius, 0) + 1);
        return c;
    };
    const auto cx = axis_counts(g.dims[0]);
    const auto cy = axis_counts(g.dims[1]);
    const auto cz = axis_counts(g.dims[2]);
    std::vector<double> out(g.voxel_count());
    std::size_t i = 0;
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x, ++i) out[i] = cx[x] * cy[y] * cz[z];
    return out;
}

// 2x box downsampling (partial blocks averaged at odd edges).
inline ScalarVolume downsample2x(const ScalarVolume& vol) {
    const Grid3& g = vol.grid;
    Grid3 cg;
    for (int i = 0; i < 3; ++i) {
        cg.dims[i] = (g.dims[i] + 1) / 2;
        cg.spacing[i] = g.spacing[i] * 2.0;
        cg.origin[i] = g.origin[i];
    }
    ScalarVolume out(cg);
    for (int z = 0; z < cg.dims[2]; ++z) {
        for (int y = 0; y < cg.dims[1]; ++y) {
            for (int x = 0; x < cg.dims[0]; ++x) {
                double sum = 0.0;
                int count = 0;
                for (int dz = 0; dz < 2; ++dz)
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const int sx = 2 * x + dx, sy = 2 * y + dy, sz = 2 * z + dz;
                            if (sx < g.dims[0] && sy < g.dims[1] && sz < g.dims[2]) {
                                sum += vol.at(sx, sy, sz);
                                ++count;
                            }
                        }
                out.at(x, y, z) = sum / count;
            }
        }
    }
    return out;
}

inline LabelVolume downsample2x_mask(const LabelVolume& mask) {
    ScalarVolume tmp(mask.grid);
    for (std::size_t i = 0; i < tmp.values.size(); ++i)
        tmp.values[i] = mask.labels[i] > 0 ? 1.0 : 0.0;
    ScalarVolume ds = downsample2x(tmp);
    LabelVolume out(ds.grid);
    for (std::size_t i = 0; i < out.labels.size(); ++i)
        out.labels[i] = ds.values[i] >= 0.5 ? 1 : 0;
    return out;
}

// Upsample a velocity field onto a finer grid. Vectors are voxel-unit, so
// the components scale with the resolution ratio. The fine voxel x maps to
// coarse coordinate (x - 0.5) / 2 under 2x box downsampling.
inline VectorField3 upsample_field(const VectorField3& coarse, const Grid3& fine_grid) {
    VectorField3 out(fine_grid, coarse.kind);
    std::size_t i = 0;
    for (int z = 0; z < fine_grid.dims[2]; ++z) {
        for (int y = 0; y < fine_grid.dims[1]; ++y) {
            for (int x = 0; x < fine_grid.dims[0]; ++x, ++i) {
                const Vec3 pc{(x - 0.5) / 2.0, (y - 0.5) / 2.0, (z - 0.5) / 2.0};
                out.vectors[i] = sample_trilinear(coarse, pc) * 2.0;
            }
        }
    }
    return out;
}

// Deterministic random numbers. mt19937_64 is specified by the standard;
// the variate mappings below are explicit so streams are identical across
// platforms (std::*_distribution algorithms are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Split a reproducible per-stream seed from a base seed and an index.
    static std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
        std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform01() { // in [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    double normal() { // Box-Muller, one variate per two draws
        const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace morpho

#endif // MORPHO_FILTERS_HPP
