#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "evs/events.hpp"
#include "evs/filtering.hpp"
#include "evs/representations.hpp"

namespace evs {

// ---------------------------------------------------------------------------
// Event streams
//
// Binary container (EVB1, little-endian):
//   header  16 B: magic "EVB1", width u16, height u16, reserved u32,
//                 record count u32
//   records 16 B each: t u64, x u16, y u16, p i8, 3 pad bytes (zero)
//
// Text container: one `t,x,y,p` line per event, LF-terminated, no header;
// p is 1 or -1 on output, 0 is accepted as -1 on input. Geometry is not
// stored in text form and must be supplied by the caller.
// ---------------------------------------------------------------------------

std::vector<std::byte> encode_evb1(const EventStream& stream);
EventStream decode_evb1(std::span<const std::byte> bytes);

std::string encode_text_events(const EventStream& stream);
EventStream decode_text_events(std::string_view text, SensorGeometry geometry);

/// Incremental EVB1 decoder: feed() accepts chunks of any size and the
/// result is identical to decoding the whole buffer at once. Records are
/// validated as they stream in (bounds, polarity, timestamp order) and
/// violations raise errors naming the record index or byte offset.
class Evb1Decoder {
public:
    void feed(std::span<const std::byte> chunk);

    /// Checks completeness (no partial trailing record, record count as
    /// declared) and hands over the stream.
    [[nodiscard]] EventStream finish();

    [[nodiscard]] bool header_parsed() const noexcept { return have_header_; }
    [[nodiscard]] SensorGeometry geometry() const noexcept { return stream_.geometry; }

private:
    void parse_header();
    void parse_record(const std::byte* record);

    std::vector<std::byte> pending_;
    EventStream stream_;
    std::uint64_t bytes_consumed_ = 0;
    std::uint32_t declared_count_ = 0;
    std::uint64_t last_t_ = 0;
    bool have_header_ = false;
};

// ---------------------------------------------------------------------------
// Pose labels (JSON)
//
// Array of {"frame": int, "t_us": int, "q": [w,x,y,z], "t_m": [x,y,z]}.
// Doubles are written in shortest round-trip form, so write -> read is
// exact. Quaternions farther than 1e-3 from unit norm are rejected;
// accepted ones are stored as-is, never renormalized.
// ---------------------------------------------------------------------------

struct PoseLabel {
    std::int64_t frame = 0;
    std::uint64_t t_us = 0;
    Eigen::Quaterniond q{1.0, 0.0, 0.0, 0.0};
    Eigen::Vector3d t_m{0.0, 0.0, 0.0};
};

std::string format_pose_labels(std::span<const PoseLabel> labels);
std::vector<PoseLabel> parse_pose_labels(std::string_view json_text);

void write_pose_labels(const std::filesystem::path& path, std::span<const PoseLabel> labels);
std::vector<PoseLabel> read_pose_labels(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Float tensors (ETF1): magic "ETF1", u32 channels, u32 height, u32 width,
// then float32 little-endian, channel-major / row-major. Lossless.
// ---------------------------------------------------------------------------

struct Tensor {
    std::uint32_t channels = 0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> values;

    bool operator==(const Tensor&) const = default;
};

Tensor tensor_from_frame(const EventFrame& frame);

std::vector<std::byte> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(std::span<const std::byte> bytes);

void write_tensor_file(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Images: binary PGM (P5) and PPM (P6), maxval 255. Frame values in
// [0, 1] quantize by round(v * 255), halves away from zero. ASCII
// variants (P2/P3) are rejected. A mask pixel is "in" iff its PGM value
// exceeds 127.
// ---------------------------------------------------------------------------

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;  ///< [0, 1], row-major
};

void write_pgm(const std::filesystem::path& path, std::span<const float> values, int width,
               int height);
void write_pgm(const std::filesystem::path& path, const EventFrame& frame);  // 1 channel
void write_ppm(const std::filesystem::path& path, const EventFrame& frame);  // 3 channels

GrayImage read_pgm(const std::filesystem::path& path);
Mask read_mask_pgm(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Whole-file helpers
// ---------------------------------------------------------------------------

std::vector<std::byte> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, std::span<const std::byte> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace evs
