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

#ifndef MORPHO_PHANTOM_HPP
#define MORPHO_PHANTOM_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "morpho/csv.hpp"
#include "morpho/filters.hpp"
#include "morpho/svf.hpp"
#include "morpho/volume.hpp"

namespace morpho {

// Synthetic cohort with exact ground truth. Anatomy is a nested-ellipsoid
// "brain" (labels: brain 2, ventricles 4, hippocampi 17). Aging deforms the
// ventricle, brain and hippocampus shells radially at fixed per-year rates;
// on the hippocampi it acts on the polar caps only. The disease field is a
// radial shrink of the hippocampus equatorial band. Cap and band supports
// are disjoint (with a latitude gap), so the two fields are orthogonal at
// every voxel while both remain visible boundary motions; Gram-Schmidt
// removes the residual overlap with the ventricle/brain shell tails.
//
// Subject deformations are sampled as
//   v_gt = (age - 60 + aging_accel_years_per_severity * severity) * v_aging
//          + severity * w,
// and the image is warp(base, exp(v_gt)) plus clamped Gaussian noise.
struct PhantomSpec {
    Grid3 grid{{64, 64, 64}, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}};
    std::uint64_t seed = 7;

    double reference_age = 60.0;

    // per-year shell displacement rates, voxels (scaled by grid size / 64)
    double ventricle_rate = 0.10; // expansion
    double hippo_rate = 0.06;     // shrink
    double brain_rate = 0.03;     // global shrink

    // disease component: shell displacement in voxels at severity 1
    double disease_amplitude = 2.2;

    // extra morphological aging planted in AD subjects, years per severity
    // unit; 0 reproduces the pure orthogonal-decomposition model
    double aging_accel_years_per_severity = 0.0;

    double noise_sigma = 0.01; // additive intensity noise before clamping

    double severity_for_cdr(double cdr) const {
        if (cdr == 0.0) return 0.25;
        if (cdr == 0.5) return 0.5;
        if (cdr == 1.0) return 1.0;
        if (cdr == 2.0) return 1.5;
        throw validation_error("phantom: unknown CDR stage");
    }
};

namespace phantom_detail {

struct Ellipsoid {
    Vec3 center;
    Vec3 radii;

    double rho(const Vec3& p) const {
        const double a = (p.x - center.x) / radii.x;
        const double b = (p.y - center.y) / radii.y;
        const double c = (p.z - center.z) / radii.z;
        return std::sqrt(a * a + b * b + c * c);
    }
    // approximate signed distance to the surface in voxels
    double surface_distance(const Vec3& p) const {
        return (rho(p) - 1.0) * (radii.x + radii.y + radii.z) / 3.0;
    }
    Vec3 outward_normal(const Vec3& p) const {
        Vec3 n{(p.x - center.x) / (radii.x * radii.x),
               (p.y - center.y) / (radii.y * radii.y),
               (p.z - center.z) / (radii.z * radii.z)};
        const double len = n.norm();
        return len > 1e-12 ? n * (1.0 / len) : Vec3{1.0, 0.0, 0.0};
    }
};

struct Anatomy {
    Ellipsoid brain, ventricles, hippo_left, hippo_right;
};

inline Anatomy make_anatomy(const Grid3& grid) {
    const double s = static_cast<double>(grid.dims[0]) / 64.0;
    const Vec3 c{(grid.dims[0] - 1) / 2.0, (grid.dims[1] - 1) / 2.0, (grid.dims[2] - 1) / 2.0};
    Anatomy a;
    a.brain = {c, {26.0 * s, 24.0 * s, 24.0 * s}};
    a.ventricles = {c, {8.0 * s, 6.0 * s, 6.0 * s}};
    a.hippo_left = {{c.x - 16.0 * s, c.y - 10.0 * s, c.z}, {4.5 * s, 4.5 * s, 4.5 * s}};
    a.hippo_right = {{c.x + 16.0 * s, c.y - 10.0 * s, c.z}, {4.5 * s, 4.5 * s, 4.5 * s}};
    return a;
}

inline double shell_bump(double distance, double width) {
    return std::exp(-(distance * distance) / (2.0 * width * width));
}

inline double smootherstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

// |cos| of the latitude of p against the z-axis through the center
inline double axial_mu(const Vec3& p, const Vec3& center) {
    const Vec3 r = p - center;
    const double len = r.norm();
    return len > 1e-9 ? std::abs(r.z) / len : 1.0;
}

} // namespace phantom_detail

// Static parts of the generator, built once per spec.
struct PhantomModel {
    PhantomSpec spec;
    ScalarVolume base_image;
    LabelVolume base_labels;
    VectorField3 aging_per_year; // v_aging
    VectorField3 disease_unit;   // w, orthogonal to v_aging voxel-wise
};

inline PhantomModel build_phantom_model(const PhantomSpec& spec) {
    spec.grid.validate();
    const Grid3& g = spec.grid;
    const double gs = static_cast<double>(g.dims[0]) / 64.0;
    const auto anatomy = phantom_detail::make_anatomy(g);

    PhantomModel m;
    m.spec = spec;
    m.base_image = ScalarVolume(g);
    m.base_labels = LabelVolume(g);
    m.aging_per_year = VectorField3(g, FieldKind::velocity);
    m.disease_unit = VectorField3(g, FieldKind::velocity);

    const double vent_width = 3.0 * gs, hippo_width = 2.0 * gs, brain_width = 3.0 * gs;
    const double disease_decay = 2.0 * gs;

    std::size_t i = 0;
    for (int z = 0; z < g.dims[2]; ++z) {
        for (int y = 0; y < g.dims[1]; ++y) {
            for (int x = 0; x < g.dims[0]; ++x, ++i) {
                const Vec3 p{static_cast<double>(x), static_cast<double>(y),
                             static_cast<double>(z)};
                const bool in_brain = anatomy.brain.rho(p) <= 1.0;
                const bool in_vent = anatomy.ventricles.rho(p) <= 1.0;
                const bool in_hipl = anatomy.hippo_left.rho(p) <= 1.0;
                const bool in_hipr = anatomy.hippo_right.rho(p) <= 1.0;
                if (in_vent) {
                    m.base_image.values[i] = 0.15;
                    m.base_labels.labels[i] = 4;
                } else if (in_hipl || in_hipr) {
                    // axial intensity ramp keeps the interior textured
                    const auto& hip = in_hipl ? anatomy.hippo_left : anatomy.hippo_right;
                    const double rel = (p.z - hip.center.z) / hip.radii.z; // [-1, 1]
                    m.base_image.values[i] = 0.35 + 0.15 * rel;
                    m.base_labels.labels[i] = 17;
                } else if (in_brain) {
                    m.base_image.values[i] = 0.80;
                    m.base_labels.labels[i] = 2;
                }

                // aging: ventricle expansion pulls the resampling point
                // inward; brain shrink pushes it outward; hippocampus shrink
                // acts on the polar caps (|cos latitude| above 0.65)
                Vec3 aging{0.0, 0.0, 0.0};
                aging -= anatomy.ventricles.outward_normal(p) *
                         (spec.ventricle_rate * gs *
                          phantom_detail::shell_bump(anatomy.ventricles.surface_distance(p),
                                                     vent_width));
                for (const auto* hip : {&anatomy.hippo_left, &anatomy.hippo_right}) {
                    const double mu = phantom_detail::axial_mu(p, hip->center);
                    const double cap = phantom_detail::smootherstep01((mu - 0.5) / 0.15);
                    aging += hip->outward_normal(p) *
                             (spec.hippo_rate * gs * cap *
                              phantom_detail::shell_bump(hip->surface_distance(p), hippo_width));
                }
                aging += anatomy.brain.outward_normal(p) *
                         (spec.brain_rate * gs *
                          phantom_detail::shell_bump(anatomy.brain.surface_distance(p),
                                                     brain_width));
                m.aging_per_year.vectors[i] = aging;

                // disease: radial shrink of the equatorial band
                // (|cos latitude| below 0.3, fading out by 0.45 so the cap
                // and band supports never overlap)
                Vec3 disease{0.0, 0.0, 0.0};
                for (const auto* hip : {&anatomy.hippo_left, &anatomy.hippo_right}) {
                    const double mu = phantom_detail::axial_mu(p, hip->center);
                    const double band = phantom_detail::smootherstep01((0.45 - mu) / 0.15);
                    disease += hip->outward_normal(p) *
                               (spec.disease_amplitude * gs * band *
                                phantom_detail::shell_bump(hip->surface_distance(p),
                                                           disease_decay));
                }
                // exact voxel-wise orthogonalization against the aging field
                const double a2 = aging.norm2();
                if (a2 > 0.0) disease -= aging * (disease.dot(aging) / a2);
                m.disease_unit.vectors[i] = disease;
            }
        }
    }

    gaussian_smooth_inplace(m.base_image, 1.2 * gs);
    for (double& v : m.base_image.values) v = std::clamp(v, 0.0, 1.0);
    return m;
}

struct PhantomSubject {
    ScalarVolume image;
    LabelVolume labels;
    Svf ground_truth;
};

inline Svf ground_truth_field(const PhantomModel& m, double age, double severity) {
    const PhantomSpec& spec = m.spec;
    const double aging_years =
        age - spec.reference_age + spec.aging_accel_years_per_severity * severity;
    VectorField3 v(m.spec.grid, FieldKind::velocity);
    for (std::size_t i = 0; i < v.vectors.size(); ++i)
        v.vectors[i] = m.aging_per_year.vectors[i] * aging_years +
                       m.disease_unit.vectors[i] * severity;
    return Svf(std::move(v), "phantom");
}

inline PhantomSubject generate_subject(const PhantomModel& m, double age, double severity,
                                       std::uint64_t noise_stream = 0) {
    if (age < 55.0 || age > 95.0)
        throw validation_error("phantom: age must lie in [55, 95]");
    if (severity < 0.0) throw validation_error("phantom: severity must be >= 0");

    PhantomSubject out;
    out.ground_truth = ground_truth_field(m, age, severity);
    const VectorField3 phi = exponential(out.ground_truth);
    out.image = warp(m.base_image, phi);
    out.labels = warp_nearest(m.base_labels, phi);

    if (m.spec.noise_sigma > 0.0) {
        Rng rng(Rng::stream_seed(m.spec.seed, noise_stream));
        for (double& v : out.image.values)
            v = std::clamp(v + m.spec.noise_sigma * rng.normal(), 0.0, 1.0);
    }
    return out;
}

inline PhantomSubject generate_subject(const PhantomSpec& spec, double age, double severity,
                                       std::uint64_t noise_stream = 0) {
    return generate_subject(build_phantom_model(spec), age, severity, noise_stream);
}

// Noise-free anatomy at a given age; doubles as the analytic age template.
inline PhantomSubject phantom_template(const PhantomModel& m, double age) {
    PhantomModel quiet = m;
    quiet.spec.noise_sigma = 0.0;
    return generate_subject(quiet, age, 0.0);
}

struct PhantomCohortRow {
    CohortRow row;
    double severity = 0.0;
};

// Deterministic cohort plan: CN ages ~ U(60, 90) with severity 0, then one
// block of AD subjects per CDR stage {0, 0.5, 1, 2} with the spec's planted
// severities. Ages for every subject come from the master seed stream.
inline std::vector<PhantomCohortRow> plan_cohort(const PhantomSpec& spec, int n_cn,
                                                 int n_ad_per_stage) {
    if (n_cn < 1) throw validation_error("phantom: n_cn must be >= 1");
    if (n_ad_per_stage < 0) throw validation_error("phantom: n_ad_per_stage must be >= 0");
    Rng rng(Rng::stream_seed(spec.seed, 0));
    std::vector<PhantomCohortRow> plan;
    int counter = 0;
    auto make_id = [&counter]() {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "sub%03d", counter++);
        return std::string(buf);
    };
    for (int i = 0; i < n_cn; ++i) {
        PhantomCohortRow r;
        const std::string id = make_id();
        r.row = {id, id + "_s1", rng.uniform(60.0, 90.0), Group::CN, 0.0, ""};
        r.severity = 0.0;
        plan.push_back(std::move(r));
    }
    for (double cdr : {0.0, 0.5, 1.0, 2.0}) {
        for (int i = 0; i < n_ad_per_stage; ++i) {
            PhantomCohortRow r;
            const std::string id = make_id();
            r.row = {id, id + "_s1", rng.uniform(60.0, 90.0), Group::AD, cdr, ""};
            r.severity = spec.severity_for_cdr(cdr);
            plan.push_back(std::move(r));
        }
    }
    return plan;
}

} // namespace morpho

#endif // MORPHO_PHANTOM_HPP
