#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>

#include "prx/frontend.hpp"
#include "prx/sigkit.hpp"

namespace prx {

using json = nlohmann::json;

// Complex waveform interchange: <stem>.bin holds little-endian float64
// re/im-interleaved samples; <stem>.json is the sidecar with the sample rate
// and layout so a frame round-trips exactly.
void save_frame(const std::filesystem::path& stem, const ComplexFrame& frame,
                const std::string& label);
ComplexFrame load_frame(const std::filesystem::path& stem);

// Detected-intensity interchange: four channels interleaved per sample
// (a_x, b_x, a_y, b_y), little-endian float64, with a JSON sidecar.
void save_quad(const std::filesystem::path& stem, const IntensityQuad& quad);
IntensityQuad load_quad(const std::filesystem::path& stem);

// Plain CSV with a header row; every row must match the header's arity.
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<rvec>& rows);

// 64-bit FNV-1a over a string; used to fingerprint configurations.
std::uint64_t fnv1a64(const std::string& s);

// Canonical serialization (sorted keys, fixed spacing) plus its fingerprint.
std::string canonical_dump(const json& j);
std::uint64_t config_fingerprint(const json& config);

// Write a manifest: config echo, config fingerprint, library/build info,
// and the run's scalar results. Deterministic byte-for-byte for identical
// inputs (no timestamps, no environment capture).
void write_manifest(const std::filesystem::path& path, const json& config,
                    const json& results);

}  // namespace prx
