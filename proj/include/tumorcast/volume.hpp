#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tumorcast {

struct Vec3i {
    int x = 0, y = 0, z = 0;
    bool operator==(const Vec3i&) const = default;
};

/// Scalar 3-D grid with spacing metadata. Data is float32, x-fastest
/// row-major (index = (z*ny + y)*nx + x).
struct Volume3D {
    std::array<int, 3> dims{0, 0, 0};              // nx, ny, nz
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per voxel
    std::vector<float> data;

    static Volume3D zeros(int nx, int ny, int nz,
                          std::array<double, 3> spacing = {1.0, 1.0, 1.0});

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x;
    }
    bool contains(int x, int y, int z) const {
        return x >= 0 && x < dims[0] && y >= 0 && y < dims[1] && z >= 0 && z < dims[2];
    }
    float& at(int x, int y, int z) { return data[index(x, y, z)]; }
    float at(int x, int y, int z) const { return data[index(x, y, z)]; }

    bool same_grid(const Volume3D& o) const { return dims == o.dims; }

    /// Throws std::invalid_argument on broken invariants (size mismatch,
    /// non-positive spacing or dims).
    void validate() const;

    bool operator==(const Volume3D&) const = default;
};

/// Inclusive axis-aligned integer box.
struct Box3 {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{-1, -1, -1};

    bool contains(int x, int y, int z) const {
        return x >= lo[0] && x <= hi[0] && y >= lo[1] && y <= hi[1] && z >= lo[2] && z <= hi[2];
    }
    std::array<int, 3> size() const {
        return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1};
    }
    bool operator==(const Box3&) const = default;
};

/// Binary mask volume; every voxel must be 0 or 255.
struct TumorMask {
    Volume3D volume;

    bool foreground(int x, int y, int z) const { return volume.at(x, y, z) != 0.0f; }
    void validate() const;  // value-set check on top of Volume3D::validate

    bool operator==(const TumorMask&) const = default;
};

std::size_t foreground_count(const TumorMask& mask);

/// Arithmetic-mean foreground coordinate. Throws on empty mask.
std::array<double, 3> mask_centroid(const TumorMask& mask);

/// Tightest inclusive box around the foreground. Throws on empty mask.
Box3 bounding_box(const TumorMask& mask);

/// Shift the volume by an integer offset; voxels translated in from
/// outside the field are zero-filled.
Volume3D translate_volume(const Volume3D& v, Vec3i offset);

/// Persistence: `<name>.vol.json` header + `<name>.raw` little-endian
/// float32 blob next to it. Round-trips bit-exactly.
void save_volume(const Volume3D& v, const std::string& json_path);
Volume3D load_volume(const std::string& json_path);

}  // namespace tumorcast
