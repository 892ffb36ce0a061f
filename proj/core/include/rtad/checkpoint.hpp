// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/param.hpp"
#include "rtad/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace rtad {

/// Key -> array container with a text header.
///
/// Layout (little-endian):
///   "RTADCKPT"  u32 version  u32 header_len  header (key=value lines)
///   u32 n_arrays  { u32 key_len  key  u32 rows  u32 cols  f64[rows*cols] column-major }*
struct Archive {
    static constexpr std::uint32_t kVersion = 1;

    std::map<std::string, std::string> header;
    std::vector<std::pair<std::string, Mat>> arrays;

    const Mat& array(const std::string& key) const;
    const std::string& value(const std::string& key) const;
};

void write_archive(const std::filesystem::path& path, const Archive& archive);
/// Throws CheckpointError on a missing file, bad magic, version mismatch or truncation.
Archive read_archive(const std::filesystem::path& path);

Archive detector_to_archive(const Detector& detector);
Detector detector_from_archive(const Archive& archive);

void save_checkpoint(const std::filesystem::path& path, const Detector& detector);
Detector load_checkpoint(const std::filesystem::path& path);

} // namespace rtad
