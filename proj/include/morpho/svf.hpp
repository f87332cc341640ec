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

#ifndef MORPHO_SVF_HPP
#define MORPHO_SVF_HPP

#include <cmath>
#include <string>

#include "morpho/volume.hpp"

namespace morpho {

// Stationary velocity field. Its unit-time flow defines a diffeomorphic
// deformation; the flow is computed by scaling and squaring (see exponential).
struct Svf {
    VectorField3 field;
    std::string provenance;

    Svf() = default;
    explicit Svf(VectorField3 f, std::string prov = {})
        : field(std::move(f)), provenance(std::move(prov)) {
        field.kind = FieldKind::velocity;
    }
};

// Number of squarings: smallest K >= 0 with max||v|| / 2^K < 0.5 voxel,
// capped at 10 to bound interpolation-error accumulation.
inline int squaring_steps(const VectorField3& v) {
    const double maxnorm = max_vector_norm(v);
    int k = 0;
    while (maxnorm / static_cast<double>(1ULL << k) >= 0.5 && k < 10) ++k;
    return k;
}

// Unit-time flow of the SVF by scaling and squaring:
//   phi_0 = Id + v / 2^K, then phi <- phi o phi, K times.
// Squaring runs on the displacement part; see sample_deformation for the
// boundary extrapolation rule.
inline VectorField3 exponential(const Svf& v) {
    if (!all_finite(v.field))
        throw numerical_error("exponential: velocity field has non-finite components");
    const Grid3& g = v.field.grid;
    const int k = squaring_steps(v.field);
    const double scale = 1.0 / static_cast<double>(1ULL << k);

    VectorField3 phi = identity_deformation(g);
    const std::size_t n = g.voxel_count();
    for (std::size_t i = 0; i < n; ++i) phi.vectors[i] += v.field.vectors[i] * scale;

    VectorField3 next(g, FieldKind::deformation);
    for (int step = 0; step < k; ++step) {
        for (std::size_t i = 0; i < n; ++i)
            next.vectors[i] = sample_deformation(phi, phi.vectors[i]);
        std::swap(phi.vectors, next.vectors);
    }
    return phi;
}

inline Svf scale(const Svf& v, double s) {
    Svf out = v;
    for (Vec3& w : out.field.vectors) w *= s;
    return out;
}

inline Svf add(const Svf& a, const Svf& b) {
    require_compatible(a.field.grid, b.field.grid, "svf add");
    Svf out = a;
    for (std::size_t i = 0; i < out.field.vectors.size(); ++i)
        out.field.vectors[i] += b.field.vectors[i];
    return out;
}

inline ScalarVolume norm_map(const Svf& v) {
    ScalarVolume out(v.field.grid);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = v.field.vectors[i].norm();
    return out;
}

// exp(-v); the flow of the negated field inverts the deformation.
inline VectorField3 inverse_deformation(const Svf& v) {
    return exponential(scale(v, -1.0));
}

// Determinant of the central-difference Jacobian of phi, one-sided at the
// boundary. Positive everywhere certifies a diffeomorphism on the grid.
inline ScalarVolume jacobian_determinant(const VectorField3& phi) {
    if (phi.kind != FieldKind::deformation)
        throw validation_error("jacobian_determinant: field kind must be deformation");
    const Grid3& g = phi.grid;
    ScalarVolume out(g);
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const int xm = x > 0 ? x - 1 : 0, xp = x < g.dims[0] - 1 ? x + 1 : x;
                const int ym = y > 0 ? y - 1 : 0, yp = y < g.dims[1] - 1 ? y + 1 : y;
                const int zm = z > 0 ? z - 1 : 0, zp = z < g.dims[2] - 1 ? z + 1 : z;
                const Vec3 dx = (phi.at(xp, y, z) - phi.at(xm, y, z)) * (1.0 / (xp - xm));
                const Vec3 dy = (phi.at(x, yp, z) - phi.at(x, ym, z)) * (1.0 / (yp - ym));
                const Vec3 dz = (phi.at(x, y, zp) - phi.at(x, y, zm)) * (1.0 / (zp - zm));
                out.at(x, y, z) = dx.x * (dy.y * dz.z - dy.z * dz.y) -
                                  dy.x * (dx.y * dz.z - dx.z * dz.y) +
                                  dz.x * (dx.y * dy.z - dx.z * dy.y);
            }
        }
    }
    return out;
}

inline double min_jacobian(const VectorField3& phi) {
    const ScalarVolume det = jacobian_determinant(phi);
    double m = det.values[0];
    for (double v : det.values) m = std::min(m, v);
    return m;
}

} // namespace morpho

#endif // MORPHO_SVF_HPP
