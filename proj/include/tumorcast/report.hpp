#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tumorcast/metrics.hpp"
#include "tumorcast/sampling.hpp"
#include "tumorcast/volume.hpp"

namespace tumorcast {

/// Binary (P6) PPM; rgb is row-major, 3 bytes per pixel.
void write_ppm(const std::filesystem::path& path, int w, int h,
               const std::vector<std::uint8_t>& rgb);

/// report.csv: one row per patient per kind, fixed column order
/// patient_id,kind,recall,precision,dice,rvd,tpv_vox,vpred_vox,vgt_vox,tau,epochs.
void write_csv(const std::vector<MetricEntry>& entries, const std::filesystem::path& path);

/// report.json: per-kind mean/std/min/max of dice, recall, precision, rvd.
void write_json_aggregate(const std::vector<MetricEntry>& entries,
                          const std::filesystem::path& path);

/// One PPM per zone slice: ground-truth boundary green, predicted
/// boundary red, agreement yellow, over a grayscale mask backdrop.
/// Returns the number of slices written.
int write_overlays(const TumorMask& pred, const TumorMask& gt, const Box3& zone,
                   const std::filesystem::path& dir, const std::string& prefix);

/// CSV + JSON + overlays for a whole run.
void write_report(const std::vector<MetricEntry>& entries, const std::filesystem::path& out_dir);

}  // namespace tumorcast
