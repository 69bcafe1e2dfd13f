#include "tumorcast/report.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tumorcast {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

bool boundary_voxel(const TumorMask& m, int x, int y, int z) {
    if (!m.foreground(x, y, z)) return false;
    const auto& d = m.volume.dims;
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || nx[k] >= d[0] || ny[k] < 0 || ny[k] >= d[1]) return true;
        if (!m.foreground(nx[k], ny[k], z)) return true;
    }
    return false;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, int w, int h,
               const std::vector<std::uint8_t>& rgb) {
    if (rgb.size() != std::size_t(w) * h * 3)
        throw std::invalid_argument("write_ppm: payload size mismatch");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "P6\n" << w << " " << h << "\n255\n";
    f.write(reinterpret_cast<const char*>(rgb.data()), std::streamsize(rgb.size()));
    if (!f) throw std::runtime_error("write failure: " + path.string());
}

void write_csv(const std::vector<MetricEntry>& entries, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "patient_id,kind,recall,precision,dice,rvd,tpv_vox,vpred_vox,vgt_vox,tau,epochs\n";
    for (const auto& e : entries)
        f << e.patient_id << "," << e.kind << "," << fmt(e.recall) << "," << fmt(e.precision)
          << "," << fmt(e.dice) << "," << fmt(e.rvd) << "," << e.tpv_vox << "," << e.vpred_vox
          << "," << e.vgt_vox << "," << fmt(e.tau) << "," << e.epochs << "\n";
    if (!f) throw std::runtime_error("write failure: " + path.string());
}

void write_json_aggregate(const std::vector<MetricEntry>& entries,
                          const std::filesystem::path& path) {
    std::map<std::string, std::vector<const MetricEntry*>> by_kind;
    for (const auto& e : entries) by_kind[e.kind].push_back(&e);

    nlohmann::json out;
    for (const auto& [kind, list] : by_kind) {
        auto agg = [&](auto field) {
            std::vector<double> v;
            for (const auto* e : list) v.push_back(e->*field);
            Aggregate a = aggregate(v);
            return nlohmann::json{
                {"mean", a.mean}, {"std", a.stddev}, {"min", a.min}, {"max", a.max}};
        };
        out[kind] = {{"n", list.size()},
                     {"dice", agg(&MetricEntry::dice)},
                     {"recall", agg(&MetricEntry::recall)},
                     {"precision", agg(&MetricEntry::precision)},
                     {"rvd", agg(&MetricEntry::rvd)}};
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << out.dump(2) << "\n";
}

int write_overlays(const TumorMask& pred, const TumorMask& gt, const Box3& zone,
                   const std::filesystem::path& dir, const std::string& prefix) {
    std::filesystem::create_directories(dir);
    const int w = zone.hi[0] - zone.lo[0] + 1;
    const int h = zone.hi[1] - zone.lo[1] + 1;
    int written = 0;
    for (int z = zone.lo[2]; z <= zone.hi[2]; ++z) {
        std::vector<std::uint8_t> rgb(std::size_t(w) * h * 3, 0);
        for (int y = zone.lo[1]; y <= zone.hi[1]; ++y)
            for (int x = zone.lo[0]; x <= zone.hi[0]; ++x) {
                std::size_t i = (std::size_t(y - zone.lo[1]) * w + (x - zone.lo[0])) * 3;
                std::uint8_t base = gt.foreground(x, y, z) ? 96 : 16;
                rgb[i] = rgb[i + 1] = rgb[i + 2] = base;
                bool pb = boundary_voxel(pred, x, y, z);
                bool gb = boundary_voxel(gt, x, y, z);
                if (pb) rgb[i] = 255;      // predicted boundary: red
                if (gb) rgb[i + 1] = 255;  // ground truth: green (agreement -> yellow)
                if (pb || gb) rgb[i + 2] = 0;
            }
        char name[64];
        std::snprintf(name, sizeof(name), "%s_z%03d.ppm", prefix.c_str(), z);
        write_ppm(dir / name, w, h, rgb);
        ++written;
    }
    return written;
}

void write_report(const std::vector<MetricEntry>& entries, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_csv(entries, out_dir / "report.csv");
    write_json_aggregate(entries, out_dir / "report.json");
}

}  // namespace tumorcast
