#include "tumorcast/volume.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace tumorcast {

static_assert(std::endian::native == std::endian::little,
              "volume blobs are little-endian; big-endian hosts unsupported");

Volume3D Volume3D::zeros(int nx, int ny, int nz, std::array<double, 3> spacing) {
    Volume3D v;
    v.dims = {nx, ny, nz};
    v.spacing = spacing;
    v.data.assign(static_cast<std::size_t>(nx) * ny * nz, 0.0f);
    v.validate();
    return v;
}

void Volume3D::validate() const {
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        throw std::invalid_argument("Volume3D: non-positive dims");
    if (spacing[0] <= 0 || spacing[1] <= 0 || spacing[2] <= 0)
        throw std::invalid_argument("Volume3D: non-positive spacing");
    if (data.size() != voxel_count())
        throw std::invalid_argument("Volume3D: data length != nx*ny*nz");
}

void TumorMask::validate() const {
    volume.validate();
    for (float v : volume.data)
        if (v != 0.0f && v != 255.0f)
            throw std::invalid_argument("TumorMask: voxel value not in {0,255}");
}

std::size_t foreground_count(const TumorMask& mask) {
    std::size_t n = 0;
    for (float v : mask.volume.data) n += (v != 0.0f);
    return n;
}

std::array<double, 3> mask_centroid(const TumorMask& mask) {
    const auto& v = mask.volume;
    double sx = 0, sy = 0, sz = 0;
    std::size_t n = 0;
    for (int z = 0; z < v.dims[2]; ++z)
        for (int y = 0; y < v.dims[1]; ++y)
            for (int x = 0; x < v.dims[0]; ++x)
                if (v.at(x, y, z) != 0.0f) {
                    sx += x; sy += y; sz += z;
                    ++n;
                }
    if (n == 0) throw std::invalid_argument("mask_centroid: empty mask");
    return {sx / n, sy / n, sz / n};
}

Box3 bounding_box(const TumorMask& mask) {
    const auto& v = mask.volume;
    Box3 box;
    box.lo = {v.dims[0], v.dims[1], v.dims[2]};
    box.hi = {-1, -1, -1};
    for (int z = 0; z < v.dims[2]; ++z)
        for (int y = 0; y < v.dims[1]; ++y)
            for (int x = 0; x < v.dims[0]; ++x)
                if (v.at(x, y, z) != 0.0f) {
                    box.lo[0] = std::min(box.lo[0], x);
                    box.lo[1] = std::min(box.lo[1], y);
                    box.lo[2] = std::min(box.lo[2], z);
                    box.hi[0] = std::max(box.hi[0], x);
                    box.hi[1] = std::max(box.hi[1], y);
                    box.hi[2] = std::max(box.hi[2], z);
                }
    if (box.hi[0] < 0) throw std::invalid_argument("bounding_box: empty mask");
    return box;
}

Volume3D translate_volume(const Volume3D& v, Vec3i offset) {
    Volume3D out = Volume3D::zeros(v.dims[0], v.dims[1], v.dims[2], v.spacing);
    for (int z = 0; z < v.dims[2]; ++z) {
        int sz = z - offset.z;
        if (sz < 0 || sz >= v.dims[2]) continue;
        for (int y = 0; y < v.dims[1]; ++y) {
            int sy = y - offset.y;
            if (sy < 0 || sy >= v.dims[1]) continue;
            for (int x = 0; x < v.dims[0]; ++x) {
                int sx = x - offset.x;
                if (sx < 0 || sx >= v.dims[0]) continue;
                out.at(x, y, z) = v.at(sx, sy, sz);
            }
        }
    }
    return out;
}

static std::string blob_name_for(const fs::path& json_path) {
    std::string name = json_path.filename().string();
    const std::string suffix = ".vol.json";
    if (name.size() > suffix.size() && name.ends_with(suffix))
        name = name.substr(0, name.size() - suffix.size());
    else
        name = json_path.stem().string();
    return name + ".raw";
}

void save_volume(const Volume3D& v, const std::string& json_path) {
    v.validate();
    fs::path jpath(json_path);
    std::string blob = blob_name_for(jpath);

    json header = {
        {"dims", v.dims},
        {"spacing_mm", v.spacing},
        {"dtype", "f32le"},
        {"blob", blob},
    };
    std::ofstream jf(jpath);
    if (!jf) throw std::runtime_error("save_volume: cannot open " + json_path);
    jf << header.dump(2) << "\n";
    if (!jf) throw std::runtime_error("save_volume: write failed for " + json_path);

    fs::path bpath = jpath.parent_path() / blob;
    std::ofstream bf(bpath, std::ios::binary);
    if (!bf) throw std::runtime_error("save_volume: cannot open " + bpath.string());
    bf.write(reinterpret_cast<const char*>(v.data.data()),
             static_cast<std::streamsize>(v.data.size() * sizeof(float)));
    if (!bf) throw std::runtime_error("save_volume: write failed for " + bpath.string());
}

Volume3D load_volume(const std::string& json_path) {
    std::ifstream jf(json_path);
    if (!jf) throw std::runtime_error("load_volume: missing file " + json_path);
    json header = json::parse(jf);

    Volume3D v;
    header.at("dims").get_to(v.dims);
    header.at("spacing_mm").get_to(v.spacing);
    if (header.at("dtype").get<std::string>() != "f32le")
        throw std::runtime_error("load_volume: unsupported dtype in " + json_path);

    fs::path bpath = fs::path(json_path).parent_path() / header.at("blob").get<std::string>();
    std::ifstream bf(bpath, std::ios::binary);
    if (!bf) throw std::runtime_error("load_volume: missing blob " + bpath.string());
    bf.seekg(0, std::ios::end);
    auto nbytes = static_cast<std::size_t>(bf.tellg());
    bf.seekg(0);

    std::size_t expected = static_cast<std::size_t>(v.dims[0]) * v.dims[1] * v.dims[2] * sizeof(float);
    if (nbytes != expected)
        throw std::runtime_error("load_volume: blob length mismatch for " + json_path + " (" +
                                 std::to_string(nbytes) + " bytes, expected " +
                                 std::to_string(expected) + ")");

    v.data.resize(expected / sizeof(float));
    bf.read(reinterpret_cast<char*>(v.data.data()), static_cast<std::streamsize>(expected));
    if (!bf) throw std::runtime_error("load_volume: short read on " + bpath.string());
    v.validate();
    return v;
}

}  // namespace tumorcast
