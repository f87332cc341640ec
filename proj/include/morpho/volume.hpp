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

#ifndef MORPHO_VOLUME_HPP
#define MORPHO_VOLUME_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace morpho {

// Error taxonomy shared across the library. The CLI maps these onto
// distinct process exit codes.
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class validation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Sampled spatial domain: voxel counts, spacing in mm and origin in mm.
// All field arithmetic in this library runs in voxel units; spacing and
// origin matter only at I/O boundaries. Volumes are linearized x-fastest
// so that reductions in index order are reproducible.
struct Grid3 {
    std::array<int, 3> dims{0, 0, 0};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
    }
    bool operator==(const Grid3& o) const {
        return dims == o.dims && spacing == o.spacing && origin == o.origin;
    }
    bool compatible(const Grid3& o) const { return *this == o; }

    void validate() const {
        for (int i = 0; i < 3; ++i) {
            if (dims[i] < 2)
                throw validation_error("Grid3: dims must be >= 2 per axis");
            if (!(spacing[i] > 0.0))
                throw validation_error("Grid3: spacing must be positive");
        }
    }
};

inline void require_compatible(const Grid3& a, const Grid3& b, const char* what) {
    if (!a.compatible(b))
        throw validation_error(std::string(what) + ": grid mismatch");
}

struct ScalarVolume {
    Grid3 grid;
    std::vector<double> values;

    ScalarVolume() = default;
    explicit ScalarVolume(const Grid3& g, double fill = 0.0)
        : grid(g), values(g.voxel_count(), fill) {
        grid.validate();
    }

    double& at(int x, int y, int z) { return values[grid.index(x, y, z)]; }
    double at(int x, int y, int z) const { return values[grid.index(x, y, z)]; }
};

enum class FieldKind { velocity, displacement, deformation };

// 3-vector field sampled on a grid, components in voxel units.
// kind=deformation stores absolute target coordinates phi(p);
// kind=displacement stores u with phi = Id + u.
struct VectorField3 {
    Grid3 grid;
    std::vector<Vec3> vectors;
    FieldKind kind = FieldKind::displacement;

    VectorField3() = default;
    VectorField3(const Grid3& g, FieldKind k) : grid(g), vectors(g.voxel_count()), kind(k) {
        grid.validate();
    }

    Vec3& at(int x, int y, int z) { return vectors[grid.index(x, y, z)]; }
    const Vec3& at(int x, int y, int z) const { return vectors[grid.index(x, y, z)]; }
};

struct LabelVolume {
    Grid3 grid;
    std::vector<std::int32_t> labels;

    LabelVolume() = default;
    explicit LabelVolume(const Grid3& g, std::int32_t fill = 0)
        : grid(g), labels(g.voxel_count(), fill) {
        grid.validate();
    }

    std::int32_t& at(int x, int y, int z) { return labels[grid.index(x, y, z)]; }
    std::int32_t at(int x, int y, int z) const { return labels[grid.index(x, y, z)]; }
};

namespace detail {

// Shared trilinear setup: clamp the sample point to the grid, pick the
// base voxel and the 8 corner weights. Points outside the volume clamp
// to the boundary face, which keeps sampling total and avoids the
// artificial boundary gradients zero-padding would create.
struct TrilinearStencil {
    std::size_t i000;
    std::size_t sx, sy, sz; // index strides
    int ix, iy, iz;         // base voxel
    double fx, fy, fz;
};

inline TrilinearStencil trilinear_stencil(const Grid3& g, const Vec3& p) {
    auto prep = [](double c, int dim, int& i0, double& f) {
        if (!(c > 0.0)) { // clamp low; NaN lands here as well
            i0 = 0;
            f = 0.0;
            return;
        }
        double hi = static_cast<double>(dim - 1);
        if (c >= hi) {
            i0 = dim - 2;
            f = 1.0;
            return;
        }
        double fl = std::floor(c);
        i0 = static_cast<int>(fl);
        if (i0 > dim - 2) i0 = dim - 2;
        f = c - static_cast<double>(i0);
    };
    TrilinearStencil s{};
    prep(p.x, g.dims[0], s.ix, s.fx);
    prep(p.y, g.dims[1], s.iy, s.fy);
    prep(p.z, g.dims[2], s.iz, s.fz);
    s.i000 = g.index(s.ix, s.iy, s.iz);
    s.sx = 1;
    s.sy = static_cast<std::size_t>(g.dims[0]);
    s.sz = static_cast<std::size_t>(g.dims[0]) * g.dims[1];
    return s;
}

template <typename T, typename Get>
inline T trilinear_gather(const TrilinearStencil& s, Get&& value) {
    const double gx = 1.0 - s.fx, gy = 1.0 - s.fy, gz = 1.0 - s.fz;
    const std::size_t i000 = s.i000;
    const std::size_t i100 = i000 + s.sx;
    const std::size_t i010 = i000 + s.sy;
    const std::size_t i110 = i010 + s.sx;
    const std::size_t i001 = i000 + s.sz;
    const std::size_t i101 = i001 + s.sx;
    const std::size_t i011 = i001 + s.sy;
    const std::size_t i111 = i011 + s.sx;
    return value(i000) * (gx * gy * gz) + value(i100) * (s.fx * gy * gz) +
           value(i010) * (gx * s.fy * gz) + value(i110) * (s.fx * s.fy * gz) +
           value(i001) * (gx * gy * s.fz) + value(i101) * (s.fx * gy * s.fz) +
           value(i011) * (gx * s.fy * s.fz) + value(i111) * (s.fx * s.fy * s.fz);
}

} // namespace detail

// Trilinear interpolation at a point in voxel coordinates; out-of-bounds
// coordinates clamp to the boundary face. Reproduces node values exactly
// at integer coordinates.
inline double sample_trilinear(const ScalarVolume& vol, const Vec3& point) {
    const auto s = detail::trilinear_stencil(vol.grid, point);
    const double* v = vol.values.data();
    return detail::trilinear_gather<double>(s, [v](std::size_t i) { return v[i]; });
}

// Component-wise trilinear sampling of a vector field.
inline Vec3 sample_trilinear(const VectorField3& field, const Vec3& point) {
    const auto s = detail::trilinear_stencil(field.grid, point);
    const Vec3* v = field.vectors.data();
    return detail::trilinear_gather<Vec3>(s, [v](std::size_t i) { return v[i]; });
}

// Sample the displacement part of a deformation field. The identity ramp
// is handled analytically, so points outside the grid extrapolate with the
// nearest boundary displacement instead of a truncated coordinate ramp.
inline Vec3 sample_deformation(const VectorField3& deformation, const Vec3& point) {
    const auto s = detail::trilinear_stencil(deformation.grid, point);
    const Vec3* v = deformation.vectors.data();
    const Vec3 base{static_cast<double>(s.ix), static_cast<double>(s.iy),
                    static_cast<double>(s.iz)};
    const double gx = 1.0 - s.fx, gy = 1.0 - s.fy, gz = 1.0 - s.fz;
    const std::size_t i000 = s.i000;
    const std::size_t i010 = i000 + s.sy;
    const std::size_t i001 = i000 + s.sz;
    const std::size_t i011 = i001 + s.sy;
    // displacement corners: u(corner) = v[corner] - (base + offset)
    const Vec3 dx{1.0, 0.0, 0.0}, dy{0.0, 1.0, 0.0}, dz{0.0, 0.0, 1.0};
    Vec3 u = (v[i000] - base) * (gx * gy * gz) +
             (v[i000 + 1] - base - dx) * (s.fx * gy * gz) +
             (v[i010] - base - dy) * (gx * s.fy * gz) +
             (v[i010 + 1] - base - dy - dx) * (s.fx * s.fy * gz) +
             (v[i001] - base - dz) * (gx * gy * s.fz) +
             (v[i001 + 1] - base - dz - dx) * (s.fx * gy * s.fz) +
             (v[i011] - base - dz - dy) * (gx * s.fy * s.fz) +
             (v[i011 + 1] - base - dz - dy - dx) * (s.fx * s.fy * s.fz);
    return point + u;
}

inline VectorField3 identity_deformation(const Grid3& grid) {
    VectorField3 phi(grid, FieldKind::deformation);
    std::size_t i = 0;
    for (int z = 0; z < grid.dims[2]; ++z)
        for (int y = 0; y < grid.dims[1]; ++y)
            for (int x = 0; x < grid.dims[0]; ++x, ++i)
                phi.vectors[i] = {static_cast<double>(x), static_cast<double>(y),
                                  static_cast<double>(z)};
    return phi;
}

inline VectorField3 to_displacement(const VectorField3& deformation) {
    if (deformation.kind != FieldKind::deformation)
        throw validation_error("to_displacement: field is not a deformation");
    VectorField3 u = deformation;
    u.kind = FieldKind::displacement;
    std::size_t i = 0;
    const Grid3& g = u.grid;
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x, ++i)
                u.vectors[i] -= Vec3{static_cast<double>(x), static_cast<double>(y),
                                     static_cast<double>(z)};
    return u;
}

inline VectorField3 to_deformation(const VectorField3& displacement) {
    if (displacement.kind != FieldKind::displacement)
        throw validation_error("to_deformation: field is not a displacement");
    VectorField3 phi = displacement;
    phi.kind = FieldKind::deformation;
    std::size_t i = 0;
    const Grid3& g = phi.grid;
    for (int z = 0; z < g.dims[2]; ++z)
        for (int y = 0; y < g.dims[1]; ++y)
            for (int x = 0; x < g.dims[0]; ++x, ++i)
                phi.vectors[i] += Vec3{static_cast<double>(x), static_cast<double>(y),
                                       static_cast<double>(z)};
    return phi;
}

// Resample an image through a deformation: output(p) = image(phi(p)).
inline ScalarVolume warp(const ScalarVolume& image, const VectorField3& deformation) {
    require_compatible(image.grid, deformation.grid, "warp");
    if (deformation.kind != FieldKind::deformation)
        throw validation_error("warp: field kind must be deformation");
    ScalarVolume out(image.grid);
    const std::size_t n = image.grid.voxel_count();
    for (std::size_t i = 0; i < n; ++i)
        out.values[i] = sample_trilinear(image, deformation.vectors[i]);
    return out;
}

// Nearest-neighbour warp for label volumes.
inline LabelVolume warp_nearest(const LabelVolume& labels, const VectorField3& deformation) {
    require_compatible(labels.grid, deformation.grid, "warp_nearest");
    if (deformation.kind != FieldKind::deformation)
        throw validation_error("warp_nearest: field kind must be deformation");
    LabelVolume out(labels.grid);
    const Grid3& g = labels.grid;
    auto clamp_round = [](double c, int dim) {
        int i = static_cast<int>(std::lround(c));
        if (i < 0) i = 0;
        if (i > dim - 1) i = dim - 1;
        return i;
    };
    const std::size_t n = g.voxel_count();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& p = deformation.vectors[i];
        out.labels[i] = labels.at(clamp_round(p.x, g.dims[0]), clamp_round(p.y, g.dims[1]),
                                  clamp_round(p.z, g.dims[2]));
    }
    return out;
}

// Composition of deformations: result(p) = phi_a(phi_b(p)), phi_a evaluated
// component-wise by trilinear interpolation of its displacement part.
inline VectorField3 compose(const VectorField3& phi_a, const VectorField3& phi_b) {
    require_compatible(phi_a.grid, phi_b.grid, "compose");
    if (phi_a.kind != FieldKind::deformation || phi_b.kind != FieldKind::deformation)
        throw validation_error("compose: both fields must be deformations");
    VectorField3 out(phi_a.grid, FieldKind::deformation);
    const std::size_t n = phi_a.grid.voxel_count();
    for (std::size_t i = 0; i < n; ++i)
        out.vectors[i] = sample_deformation(phi_a, phi_b.vectors[i]);
    return out;
}

// Central differences in the interior, one-sided at the boundary; units of
// intensity per voxel. Exact for linear images at interior voxels.
inline VectorField3 spatial_gradient(const ScalarVolume& vol) {
    const Grid3& g = vol.grid;
    VectorField3 out(g, FieldKind::displacement);
    auto diff = [](double lo, double hi, double span) { return (hi - lo) / span; };
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x) {
                const int xm = x > 0 ? x - 1 : 0, xp = x < g.dims[0] - 1 ? x + 1 : x;
                const int ym = y > 0 ? y - 1 : 0, yp = y < g.dims[1] - 1 ? y + 1 : y;
                const int zm = z > 0 ? z - 1 : 0, zp = z < g.dims[2] - 1 ? z + 1 : z;
                out.at(x, y, z) = {
                    diff(vol.at(xm, y, z), vol.at(xp, y, z), static_cast<double>(xp - xm)),
                    diff(vol.at(x, ym, z), vol.at(x, yp, z), static_cast<double>(yp - ym)),
                    diff(vol.at(x, y, zm), vol.at(x, y, zp), static_cast<double>(zp - zm))};
            }
        }
    }
    return out;
}

inline double max_vector_norm(const VectorField3& f) {
    double m = 0.0;
    for (const Vec3& v : f.vectors) m = std::max(m, v.norm2());
    return std::sqrt(m);
}

inline bool all_finite(const VectorField3& f) {
    for (const Vec3& v : f.vectors)
        if (!v.finite()) return false;
    return true;
}

inline bool all_finite(const ScalarVolume& v) {
    for (double x : v.values)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace morpho

#endif // MORPHO_VOLUME_HPP
