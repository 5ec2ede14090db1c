#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "errdecode/core.hpp"

namespace errdecode {

inline constexpr int kContainerFormatVersion = 1;

/// Reads `<dir>/header.json` + `<dir>/data.f32le`.
Recording load_recording(const std::filesystem::path& dir);

/// Writes the container. Samples are stored as 32-bit floats, so the round
/// trip is exact for data that is float-representable (anything loaded).
void save_recording(const Recording& rec, const std::filesystem::path& dir);

/// Raw little-endian payload helpers shared by the model containers.
void write_f32le(const std::filesystem::path& file, std::span<const float> values);
void write_f64le(const std::filesystem::path& file, std::span<const double> values);
std::vector<float> read_f32le(const std::filesystem::path& file);
std::vector<double> read_f64le(const std::filesystem::path& file);

void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

}  // namespace errdecode
