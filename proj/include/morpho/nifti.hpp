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

#ifndef MORPHO_NIFTI_HPP
#define MORPHO_NIFTI_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "morpho/volume.hpp"

namespace morpho {

// NIfTI-1 subset: uncompressed single-file .nii, little-endian, 3D frames,
// datatypes uint8/int16/int32/float32/float64. qform/sform are written for
// completeness but only pixdim and qoffset are interpreted (inputs are
// assumed affinely pre-aligned).
namespace nifti {

constexpr std::int16_t DT_UINT8 = 2;
constexpr std::int16_t DT_INT16 = 4;
constexpr std::int16_t DT_INT32 = 8;
constexpr std::int16_t DT_FLOAT32 = 16;
constexpr std::int16_t DT_FLOAT64 = 64;

#pragma pack(push, 1)
struct Header { // nifti1 layout, 348 bytes
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Header) == 348, "nifti1 header must be 348 bytes");

enum class ErrorKind {
    bad_magic,
    unsupported_datatype,
    bad_dims,
    truncated,
    unsupported_layout,
    io
};

class Error : public io_error {
public:
    Error(ErrorKind k, const std::string& msg) : io_error(msg), kind(k) {}
    ErrorKind kind;
};

inline int bytes_per_voxel(std::int16_t datatype) {
    switch (datatype) {
        case DT_UINT8: return 1;
        case DT_INT16: return 2;
        case DT_INT32: return 4;
        case DT_FLOAT32: return 4;
        case DT_FLOAT64: return 8;
        default: return 0;
    }
}

inline Header read_header(std::ifstream& in, const std::string& path) {
    Header hdr{};
    in.read(reinterpret_cast<char*>(&hdr), sizeof(Header));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(Header)))
        throw Error(ErrorKind::truncated, path + ": file shorter than the 348-byte header");
    if (hdr.sizeof_hdr != 348) {
        if (hdr.sizeof_hdr == 1543569408) // 348 byte-swapped
            throw Error(ErrorKind::unsupported_layout,
                        path + ": big-endian NIfTI files are not supported");
        throw Error(ErrorKind::bad_magic, path + ": sizeof_hdr != 348, not a NIfTI-1 file");
    }
    const bool n1 = std::memcmp(hdr.magic, "n+1", 4) == 0;
    const bool ni1 = std::memcmp(hdr.magic, "ni1", 4) == 0;
    if (!n1 && !ni1)
        throw Error(ErrorKind::bad_magic, path + ": bad magic, expected \"n+1\" or \"ni1\"");
    if (ni1)
        throw Error(ErrorKind::unsupported_layout,
                    path + ": two-file (.hdr/.img) NIfTI pairs are not supported");
    if (hdr.dim[0] != 3)
        throw Error(ErrorKind::bad_dims,
                    path + ": dim[0] = " + std::to_string(hdr.dim[0]) + ", expected a 3D volume");
    if (bytes_per_voxel(hdr.datatype) == 0)
        throw Error(ErrorKind::unsupported_datatype,
                    path + ": unsupported datatype code " + std::to_string(hdr.datatype));
    for (int i = 1; i <= 3; ++i)
        if (hdr.dim[i] < 2)
            throw Error(ErrorKind::bad_dims, path + ": dim[" + std::to_string(i) + "] < 2");
    return hdr;
}

inline Grid3 grid_from_header(const Header& hdr) {
    Grid3 g;
    for (int i = 0; i < 3; ++i) {
        g.dims[i] = hdr.dim[i + 1];
        g.spacing[i] = hdr.pixdim[i + 1] > 0.0f ? hdr.pixdim[i + 1] : 1.0;
    }
    g.origin = {hdr.qoffset_x, hdr.qoffset_y, hdr.qoffset_z};
    return g;
}

inline std::vector<char> read_payload(std::ifstream& in, const Header& hdr,
                                      const std::string& path) {
    const std::size_t n = static_cast<std::size_t>(hdr.dim[1]) * hdr.dim[2] * hdr.dim[3];
    const std::size_t nbytes = n * bytes_per_voxel(hdr.datatype);
    const std::streamoff offset =
        hdr.vox_offset >= 352.0f ? static_cast<std::streamoff>(hdr.vox_offset) : 352;
    in.seekg(offset, std::ios::beg);
    std::vector<char> raw(nbytes);
    in.read(raw.data(), static_cast<std::streamsize>(nbytes));
    if (in.gcount() != static_cast<std::streamsize>(nbytes))
        throw Error(ErrorKind::truncated, path + ": voxel data truncated");
    return raw;
}

inline Header make_header(const Grid3& g, std::int16_t datatype) {
    Header hdr{};
    hdr.sizeof_hdr = 348;
    hdr.regular = 'r';
    hdr.dim[0] = 3;
    for (int i = 0; i < 3; ++i) hdr.dim[i + 1] = static_cast<std::int16_t>(g.dims[i]);
    for (int i = 4; i < 8; ++i) hdr.dim[i] = 1;
    hdr.datatype = datatype;
    hdr.bitpix = static_cast<std::int16_t>(8 * bytes_per_voxel(datatype));
    hdr.pixdim[0] = 1.0f;
    for (int i = 0; i < 3; ++i) hdr.pixdim[i + 1] = static_cast<float>(g.spacing[i]);
    hdr.vox_offset = 352.0f;
    hdr.scl_slope = 1.0f;
    hdr.scl_inter = 0.0f;
    hdr.xyzt_units = 2; // mm
    hdr.qform_code = 1;
    hdr.sform_code = 0;
    hdr.quatern_b = hdr.quatern_c = hdr.quatern_d = 0.0f; // identity rotation
    hdr.qoffset_x = static_cast<float>(g.origin[0]);
    hdr.qoffset_y = static_cast<float>(g.origin[1]);
    hdr.qoffset_z = static_cast<float>(g.origin[2]);
    std::memcpy(hdr.descrip, "morphoscope", 12);
    std::memcpy(hdr.magic, "n+1", 4);
    return hdr;
}

} // namespace nifti

using NiftiVolume = std::variant<ScalarVolume, LabelVolume>;

// int32 files hold label volumes (no intensity scaling expected); every other
// supported datatype reads as a scalar volume with scl_slope/scl_inter applied
// when slope is nonzero.
inline NiftiVolume read_nifti(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw nifti::Error(nifti::ErrorKind::io, path + ": cannot open for reading");
    const nifti::Header hdr = nifti::read_header(in, path);
    const Grid3 grid = nifti::grid_from_header(hdr);
    const std::vector<char> raw = nifti::read_payload(in, hdr, path);
    const std::size_t n = grid.voxel_count();

    if (hdr.datatype == nifti::DT_INT32) {
        const bool trivial_scale =
            hdr.scl_slope == 0.0f || (hdr.scl_slope == 1.0f && hdr.scl_inter == 0.0f);
        if (!trivial_scale)
            throw nifti::Error(nifti::ErrorKind::unsupported_datatype,
                               path + ": int32 label volume with nontrivial scl scaling");
        LabelVolume out(grid);
        std::memcpy(out.labels.data(), raw.data(), n * sizeof(std::int32_t));
        return out;
    }

    ScalarVolume out(grid);
    auto convert = [&](auto type_tag) {
        using T = decltype(type_tag);
        const T* src = reinterpret_cast<const T*>(raw.data());
        for (std::size_t i = 0; i < n; ++i) out.values[i] = static_cast<double>(src[i]);
    };
    switch (hdr.datatype) {
        case nifti::DT_UINT8: convert(std::uint8_t{}); break;
        case nifti::DT_INT16: convert(std::int16_t{}); break;
        case nifti::DT_FLOAT32: convert(float{}); break;
        case nifti::DT_FLOAT64: convert(double{}); break;
        default:
            throw nifti::Error(nifti::ErrorKind::unsupported_datatype,
                               path + ": unsupported datatype");
    }
    if (hdr.scl_slope != 0.0f) {
        const double slope = hdr.scl_slope, inter = hdr.scl_inter;
        for (double& v : out.values) v = slope * v + inter;
    }
    return out;
}

inline ScalarVolume read_scalar(const std::string& path) {
    NiftiVolume v = read_nifti(path);
    if (std::holds_alternative<ScalarVolume>(v)) return std::get<ScalarVolume>(v);
    // label file requested as image: cast labels to intensities
    const LabelVolume& l = std::get<LabelVolume>(v);
    ScalarVolume out(l.grid);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = static_cast<double>(l.labels[i]);
    return out;
}

inline LabelVolume read_labels(const std::string& path) {
    NiftiVolume v = read_nifti(path);
    if (std::holds_alternative<LabelVolume>(v)) return std::get<LabelVolume>(v);
    throw nifti::Error(nifti::ErrorKind::unsupported_datatype,
                       path + ": expected an int32 label volume");
}

inline void write_nifti(const ScalarVolume& vol, const std::string& path) {
    vol.grid.validate();
    nifti::Header hdr = nifti::make_header(vol.grid, nifti::DT_FLOAT32);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw nifti::Error(nifti::ErrorKind::io, path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(&hdr), sizeof(hdr));
    const char pad[4] = {0, 0, 0, 0};
    out.write(pad, 4); // extension flag, data starts at 352
    std::vector<float> data(vol.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(vol.values[i]);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out) throw nifti::Error(nifti::ErrorKind::io, path + ": write failed");
}

inline void write_nifti(const LabelVolume& vol, const std::string& path) {
    vol.grid.validate();
    nifti::Header hdr = nifti::make_header(vol.grid, nifti::DT_INT32);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw nifti::Error(nifti::ErrorKind::io, path + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(&hdr), sizeof(hdr));
    const char pad[4] = {0, 0, 0, 0};
    out.write(pad, 4);
    out.write(reinterpret_cast<const char*>(vol.labels.data()),
              static_cast<std::streamsize>(vol.labels.size() * sizeof(std::int32_t)));
    if (!out) throw nifti::Error(nifti::ErrorKind::io, path + ": write failed");
}

// Vector fields persist as three scalar volumes with _x/_y/_z suffixes.
inline void write_vector_field(const VectorField3& field, const std::string& stem) {
    ScalarVolume comp(field.grid);
    const char* suffix[3] = {"_x.nii", "_y.nii", "_z.nii"};
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < comp.values.size(); ++i) {
            const Vec3& v = field.vectors[i];
            comp.values[i] = c == 0 ? v.x : (c == 1 ? v.y : v.z);
        }
        write_nifti(comp, stem + suffix[c]);
    }
}

inline VectorField3 read_vector_field(const std::string& stem, FieldKind kind) {
    const ScalarVolume x = read_scalar(stem + "_x.nii");
    const ScalarVolume y = read_scalar(stem + "_y.nii");
    const ScalarVolume z = read_scalar(stem + "_z.nii");
    require_compatible(x.grid, y.grid, "read_vector_field");
    require_compatible(x.grid, z.grid, "read_vector_field");
    VectorField3 out(x.grid, kind);
    for (std::size_t i = 0; i < out.vectors.size(); ++i)
        out.vectors[i] = {x.values[i], y.values[i], z.values[i]};
    return out;
}

} // namespace morpho

#endif // MORPHO_NIFTI_HPP
