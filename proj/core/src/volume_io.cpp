/*
 * Copyright 2026 The mixreg Authors
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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "mixreg/error.hpp"
#include "mixreg/volume.hpp"

namespace mixreg {
namespace {

constexpr std::string_view kRvolMagic = "RVOL1\n";
constexpr std::size_t kNiftiHeaderSize = 348;

static_assert(std::numeric_limits<float>::is_iec559, "IEEE-754 float required");

void put_f32le(std::vector<std::uint8_t>& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::uint32_t get_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::int16_t get_i16le(const std::uint8_t* p) {
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | p[1] << 8));
}

std::int32_t get_i32le(const std::uint8_t* p) { return static_cast<std::int32_t>(get_u32le(p)); }

float get_f32le(const std::uint8_t* p) { return std::bit_cast<float>(get_u32le(p)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Vec3 vec3_from_json(const nlohmann::json& j, const char* key, std::size_t offset) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
    throw FormatError("RVOL1 header at byte " + std::to_string(offset) + ": key '" + key +
                      "' must be an array of 3 numbers");
  }
  return {j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>()};
}

}  // namespace

std::vector<std::uint8_t> encode_rvol(const Volume& v, std::string_view provenance) {
  nlohmann::json header = {
      {"dims", {v.dims()[0], v.dims()[1], v.dims()[2]}},
      {"spacing_mm", {v.spacing()[0], v.spacing()[1], v.spacing()[2]}},
      {"origin_mm", {v.origin()[0], v.origin()[1], v.origin()[2]}},
      {"dtype", "f32le"},
  };
  if (!provenance.empty()) {
    header["provenance"] = nlohmann::json::parse(provenance, nullptr, /*allow_exceptions=*/false);
    if (header["provenance"].is_discarded()) header["provenance"] = std::string(provenance);
  }
  const std::string line = header.dump();
  std::vector<std::uint8_t> out;
  out.reserve(kRvolMagic.size() + line.size() + 1 + 4 * v.size());
  out.insert(out.end(), kRvolMagic.begin(), kRvolMagic.end());
  out.insert(out.end(), line.begin(), line.end());
  out.push_back('\n');
  for (float x : v.voxels()) put_f32le(out, x);
  return out;
}

Volume decode_rvol(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kRvolMagic.size() ||
      !std::equal(kRvolMagic.begin(), kRvolMagic.end(), bytes.begin())) {
    throw FormatError("bad RVOL1 magic at byte offset 0");
  }
  const std::size_t header_start = kRvolMagic.size();
  const auto newline = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(header_start),
                                 bytes.end(), std::uint8_t{'\n'});
  if (newline == bytes.end()) {
    throw FormatError("unterminated RVOL1 header line starting at byte offset " +
                      std::to_string(header_start));
  }
  const std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(header_start), newline);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("malformed RVOL1 header JSON at byte offset " +
                      std::to_string(header_start + e.byte - (e.byte > 0 ? 1 : 0)) + ": " +
                      e.what());
  }
  if (!header.is_object() || header.value("dtype", "") != "f32le") {
    throw FormatError("RVOL1 header at byte offset " + std::to_string(header_start) +
                      " must declare dtype \"f32le\"");
  }
  if (!header.contains("dims") || !header["dims"].is_array() || header["dims"].size() != 3) {
    throw FormatError("RVOL1 header at byte offset " + std::to_string(header_start) +
                      ": key 'dims' must be an array of 3 integers");
  }
  Dims dims{};
  std::size_t count = 1;
  for (int axis = 0; axis < 3; ++axis) {
    const auto n = header["dims"][static_cast<std::size_t>(axis)].get<std::int64_t>();
    if (n < 1 || n > (1 << 20)) {
      throw FormatError("RVOL1 header at byte offset " + std::to_string(header_start) +
                        ": dims out of range");
    }
    dims[axis] = static_cast<int>(n);
    count *= static_cast<std::size_t>(n);
  }
  const Vec3 spacing = vec3_from_json(header, "spacing_mm", header_start);
  const Vec3 origin = vec3_from_json(header, "origin_mm", header_start);

  const std::size_t payload_start = static_cast<std::size_t>(newline - bytes.begin()) + 1;
  const std::size_t payload_size = 4 * count;
  if (bytes.size() - payload_start < payload_size) {
    throw FormatError("truncated RVOL1 payload: expected " + std::to_string(payload_size) +
                      " bytes from byte offset " + std::to_string(payload_start) +
                      ", file ends at byte offset " + std::to_string(bytes.size()));
  }
  if (bytes.size() - payload_start > payload_size) {
    throw FormatError("trailing bytes after RVOL1 payload at byte offset " +
                      std::to_string(payload_start + payload_size));
  }
  std::vector<float> voxels(count);
  const std::uint8_t* p = bytes.data() + payload_start;
  for (std::size_t i = 0; i < count; ++i) voxels[i] = get_f32le(p + 4 * i);
  return Volume(dims, spacing, origin, std::move(voxels));
}

Volume decode_nifti(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kNiftiHeaderSize) {
    throw FormatError("truncated NIfTI-1 header: file ends at byte offset " +
                      std::to_string(bytes.size()) + ", header needs 348 bytes");
  }
  const std::uint8_t* h = bytes.data();
  if (get_i32le(h) != 348) {
    throw FormatError("bad NIfTI-1 sizeof_hdr at byte offset 0 (big-endian files are not supported)");
  }
  if (std::memcmp(h + 344, "n+1\0", 4) != 0) {
    throw FormatError("bad NIfTI-1 magic at byte offset 344 (only single-file n+1 is supported)");
  }
  const int ndim = get_i16le(h + 40);
  if (ndim < 3 || ndim > 7) {
    throw FormatError("NIfTI-1 dim[0] at byte offset 40 must be 3..7, got " + std::to_string(ndim));
  }
  Dims dims{};
  for (int axis = 0; axis < 3; ++axis) {
    dims[axis] = get_i16le(h + 42 + 2 * axis);
    if (dims[axis] < 1) {
      throw FormatError("NIfTI-1 dim[" + std::to_string(axis + 1) + "] at byte offset " +
                        std::to_string(42 + 2 * axis) + " must be positive");
    }
  }
  for (int extra = 4; extra <= ndim; ++extra) {
    if (get_i16le(h + 40 + 2 * extra) > 1) {
      throw UnsupportedTypeError("NIfTI-1 volumes with more than 3 non-singleton dims are not supported");
    }
  }
  const int datatype = get_i16le(h + 70);
  int bytes_per_voxel = 0;
  switch (datatype) {
    case 2: bytes_per_voxel = 1; break;
    case 4: bytes_per_voxel = 2; break;
    case 16: bytes_per_voxel = 4; break;
    default:
      throw UnsupportedTypeError("unsupported NIfTI-1 datatype code " + std::to_string(datatype) +
                                 "; supported codes: 2 (uint8), 4 (int16), 16 (float32)");
  }
  Vec3 spacing;
  for (int axis = 0; axis < 3; ++axis) {
    spacing[axis] = std::abs(static_cast<double>(get_f32le(h + 80 + 4 * axis)));
  }
  const double vox_offset = get_f32le(h + 108);
  const double slope = get_f32le(h + 112);
  const double inter = get_f32le(h + 116);
  if (!(vox_offset >= static_cast<double>(kNiftiHeaderSize))) {
    throw FormatError("NIfTI-1 vox_offset at byte offset 108 must be >= 348");
  }
  const auto data_start = static_cast<std::size_t>(vox_offset);
  const std::size_t count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  const std::size_t payload = count * static_cast<std::size_t>(bytes_per_voxel);
  if (bytes.size() < data_start || bytes.size() - data_start < payload) {
    throw FormatError("truncated NIfTI-1 payload: expected " + std::to_string(payload) +
                      " bytes from byte offset " + std::to_string(data_start) +
                      ", file ends at byte offset " + std::to_string(bytes.size()));
  }
  const bool scale = slope != 0.0 && std::isfinite(slope);
  std::vector<float> voxels(count);
  const std::uint8_t* p = bytes.data() + data_start;
  for (std::size_t i = 0; i < count; ++i) {
    double x = 0.0;
    switch (datatype) {
      case 2: x = p[i]; break;
      case 4: x = get_i16le(p + 2 * i); break;
      case 16: x = get_f32le(p + 4 * i); break;
    }
    if (scale) x = slope * x + inter;
    voxels[i] = static_cast<float>(x);
  }
  return Volume(dims, spacing, Vec3::Zero(), std::move(voxels));
}

Volume load_volume(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() >= kRvolMagic.size() &&
      std::equal(kRvolMagic.begin(), kRvolMagic.end(), bytes.begin())) {
    return decode_rvol(bytes);
  }
  if (bytes.size() >= 4 && get_i32le(bytes.data()) == 348) return decode_nifti(bytes);
  throw FormatError("unrecognized volume format in " + path.string() +
                    ": bad magic at byte offset 0 (expected RVOL1 or NIfTI-1)");
}

void save_volume(const Volume& v, const std::filesystem::path& path, std::string_view provenance) {
  for (float x : v.voxels()) {
    if (!std::isfinite(x)) throw ParameterError("refusing to save a volume with non-finite voxels");
  }
  const std::vector<std::uint8_t> bytes = encode_rvol(v, provenance);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::system_error(errno, std::generic_category(), "cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::system_error(errno, std::generic_category(), "write failed for " + path.string());
  }
}

}  // namespace mixreg
