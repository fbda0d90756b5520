#include "evs/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace evs {

namespace {

using json = nlohmann::json;

// --- little-endian scalar packing ------------------------------------------

template <typename T>
void store_le(std::byte* dst, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        std::memcpy(dst, bytes.data(), sizeof(T));
    } else {
        std::memcpy(dst, &value, sizeof(T));
    }
}

template <typename T>
T load_le(const std::byte* src) {
    static_assert(std::is_trivially_copyable_v<T>);
    T value;
    std::memcpy(&value, src, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        value = std::bit_cast<T>(bytes);
    }
    return value;
}

constexpr std::size_t kEvb1HeaderSize = 16;
constexpr std::size_t kEvb1RecordSize = 16;
constexpr char kEvb1Magic[4] = {'E', 'V', 'B', '1'};
constexpr char kEtf1Magic[4] = {'E', 'T', 'F', '1'};

[[noreturn]] void fail(const std::string& message) { throw std::runtime_error(message); }

}  // namespace

// --- EVB1 -------------------------------------------------------------------

std::vector<std::byte> encode_evb1(const EventStream& stream) {
    if (!stream.geometry.valid()) fail("cannot encode a stream with invalid geometry");
    if (stream.geometry.width > 0xFFFF || stream.geometry.height > 0xFFFF)
        fail("sensor geometry exceeds the 16-bit field of the binary header");
    if (stream.size() > 0xFFFFFFFFull)
        fail("stream exceeds the 32-bit record count of the binary header");

    std::vector<std::byte> out(kEvb1HeaderSize + kEvb1RecordSize * stream.size());
    std::memcpy(out.data(), kEvb1Magic, 4);
    store_le<std::uint16_t>(out.data() + 4, static_cast<std::uint16_t>(stream.geometry.width));
    store_le<std::uint16_t>(out.data() + 6, static_cast<std::uint16_t>(stream.geometry.height));
    store_le<std::uint32_t>(out.data() + 8, 0);
    store_le<std::uint32_t>(out.data() + 12, static_cast<std::uint32_t>(stream.size()));

    std::byte* rec = out.data() + kEvb1HeaderSize;
    for (const Event& e : stream.events) {
        store_le<std::uint64_t>(rec, e.t);
        store_le<std::uint16_t>(rec + 8, e.x);
        store_le<std::uint16_t>(rec + 10, e.y);
        store_le<std::int8_t>(rec + 12, e.p);
        rec[13] = rec[14] = rec[15] = std::byte{0};
        rec += kEvb1RecordSize;
    }
    return out;
}

void Evb1Decoder::parse_header() {
    const std::byte* h = pending_.data();
    if (std::memcmp(h, kEvb1Magic, 4) != 0) fail("bad magic: not an EVB1 event file");
    stream_.geometry.width = load_le<std::uint16_t>(h + 4);
    stream_.geometry.height = load_le<std::uint16_t>(h + 6);
    declared_count_ = load_le<std::uint32_t>(h + 12);
    if (!stream_.geometry.valid()) fail("EVB1 header declares an empty sensor geometry");
    stream_.events.reserve(declared_count_);
    have_header_ = true;
}

void Evb1Decoder::parse_record(const std::byte* record) {
    const std::size_t index = stream_.size();
    if (index >= declared_count_)
        fail("EVB1 stream holds more records than the declared " +
             std::to_string(declared_count_));

    Event e;
    e.t = load_le<std::uint64_t>(record);
    e.x = load_le<std::uint16_t>(record + 8);
    e.y = load_le<std::uint16_t>(record + 10);
    e.p = load_le<std::int8_t>(record + 12);

    if (!stream_.geometry.contains(e.x, e.y))
        fail("record " + std::to_string(index) + ": pixel (" + std::to_string(e.x) + ", " +
             std::to_string(e.y) + ") outside the sensor");
    if (e.p != 1 && e.p != -1)
        fail("record " + std::to_string(index) + ": polarity " + std::to_string(e.p) +
             " is not +1/-1");
    if (index > 0 && e.t < last_t_)
        fail("record " + std::to_string(index) + ": timestamp goes backwards");
    last_t_ = e.t;
    stream_.events.push_back(e);
}

void Evb1Decoder::feed(std::span<const std::byte> chunk) {
    const std::byte* cur = chunk.data();
    std::size_t remaining = chunk.size();
    bytes_consumed_ += chunk.size();

    // Complete whatever straddles the previous chunk first.
    if (!pending_.empty()) {
        const std::size_t need =
            (have_header_ ? kEvb1RecordSize : kEvb1HeaderSize) - pending_.size();
        const std::size_t take = std::min(need, remaining);
        pending_.insert(pending_.end(), cur, cur + take);
        cur += take;
        remaining -= take;
        if (pending_.size() < (have_header_ ? kEvb1RecordSize : kEvb1HeaderSize)) return;
        if (!have_header_)
            parse_header();
        else
            parse_record(pending_.data());
        pending_.clear();
    }

    if (!have_header_) {
        if (remaining < kEvb1HeaderSize) {
            pending_.assign(cur, cur + remaining);
            return;
        }
        pending_.assign(cur, cur + kEvb1HeaderSize);
        parse_header();
        pending_.clear();
        cur += kEvb1HeaderSize;
        remaining -= kEvb1HeaderSize;
    }

    while (remaining >= kEvb1RecordSize) {
        parse_record(cur);
        cur += kEvb1RecordSize;
        remaining -= kEvb1RecordSize;
    }
    if (remaining > 0) pending_.assign(cur, cur + remaining);
}

EventStream Evb1Decoder::finish() {
    if (!have_header_)
        fail("truncated EVB1 header: only " + std::to_string(bytes_consumed_) + " bytes");
    if (!pending_.empty())
        fail("truncated EVB1 record at byte offset " +
             std::to_string(bytes_consumed_ - pending_.size()));
    if (stream_.size() != declared_count_)
        fail("EVB1 record count mismatch: header declares " + std::to_string(declared_count_) +
             ", stream holds " + std::to_string(stream_.size()));
    EventStream out = std::move(stream_);
    stream_ = EventStream{};
    have_header_ = false;
    declared_count_ = 0;
    last_t_ = 0;
    bytes_consumed_ = 0;
    return out;
}

EventStream decode_evb1(std::span<const std::byte> bytes) {
    Evb1Decoder decoder;
    decoder.feed(bytes);
    return decoder.finish();
}

// --- text events -------------------------------------------------------------

std::string encode_text_events(const EventStream& stream) {
    std::string out;
    out.reserve(stream.size() * 16);
    // Worst case line: 20-digit t + 2x 5-digit coords + "-1" + separators = 36.
    char buf[64];
    char* const limit = buf + 40;
    for (const Event& e : stream.events) {
        char* p = buf;
        p = std::to_chars(p, limit, e.t).ptr;
        *p++ = ',';
        p = std::to_chars(p, limit, e.x).ptr;
        *p++ = ',';
        p = std::to_chars(p, limit, e.y).ptr;
        *p++ = ',';
        p = std::to_chars(p, limit, static_cast<int>(e.p)).ptr;
        *p++ = '\n';
        out.append(buf, p);
    }
    return out;
}

namespace {

template <typename T>
const char* parse_field(const char* cur, const char* end, T& out, std::size_t line,
                        char expected_tail) {
    const auto [ptr, ec] = std::from_chars(cur, end, out);
    if (ec != std::errc{})
        fail("line " + std::to_string(line) + ": malformed event field");
    if (expected_tail != '\0') {
        if (ptr == end || *ptr != expected_tail)
            fail("line " + std::to_string(line) + ": expected '" +
                 std::string(1, expected_tail) + "' after field");
        return ptr + 1;
    }
    if (ptr != end) fail("line " + std::to_string(line) + ": trailing characters");
    return ptr;
}

}  // namespace

EventStream decode_text_events(std::string_view text, SensorGeometry geometry) {
    if (!geometry.valid()) fail("text event decoding needs a valid sensor geometry");
    EventStream stream;
    stream.geometry = geometry;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::uint64_t last_t = 0;
    while (pos < text.size()) {
        ++line_no;
        std::size_t eol = text.find('\n', pos);
        std::size_t next = eol == std::string_view::npos ? text.size() : eol + 1;
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = next;
        if (line.empty()) fail("line " + std::to_string(line_no) + ": empty line");

        const char* cur = line.data();
        const char* end = line.data() + line.size();
        std::uint64_t t = 0;
        std::uint32_t x = 0, y = 0;
        int p = 0;
        cur = parse_field(cur, end, t, line_no, ',');
        cur = parse_field(cur, end, x, line_no, ',');
        cur = parse_field(cur, end, y, line_no, ',');
        parse_field(cur, end, p, line_no, '\0');

        if (p == 0) p = -1;
        if (p != 1 && p != -1)
            fail("line " + std::to_string(line_no) + ": polarity " + std::to_string(p) +
                 " is not +1/-1 (or 0 for -1)");
        if (x >= static_cast<std::uint32_t>(geometry.width) ||
            y >= static_cast<std::uint32_t>(geometry.height))
            fail("line " + std::to_string(line_no) + ": pixel outside the sensor");
        if (!stream.events.empty() && t < last_t)
            fail("line " + std::to_string(line_no) + ": timestamp goes backwards");
        last_t = t;
        stream.events.push_back(Event{.t = t,
                                      .x = static_cast<std::uint16_t>(x),
                                      .y = static_cast<std::uint16_t>(y),
                                      .p = static_cast<std::int8_t>(p)});
    }
    return stream;
}

// --- pose labels --------------------------------------------------------------

std::string format_pose_labels(std::span<const PoseLabel> labels) {
    json arr = json::array();
    for (const PoseLabel& label : labels) {
        arr.push_back({{"frame", label.frame},
                       {"t_us", label.t_us},
                       {"q", {label.q.w(), label.q.x(), label.q.y(), label.q.z()}},
                       {"t_m", {label.t_m.x(), label.t_m.y(), label.t_m.z()}}});
    }
    return arr.dump(2) + "\n";
}

std::vector<PoseLabel> parse_pose_labels(std::string_view json_text) {
    json arr;
    try {
        arr = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("pose labels: ") + e.what());
    }
    if (!arr.is_array()) fail("pose labels: top-level JSON value must be an array");

    std::vector<PoseLabel> labels;
    labels.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const json& item = arr[i];
        const std::string at = "pose label " + std::to_string(i);
        for (const char* key : {"frame", "t_us", "q", "t_m"})
            if (!item.contains(key)) fail(at + ": missing key '" + key + "'");
        if (!item["q"].is_array() || item["q"].size() != 4)
            fail(at + ": q must be an array of 4 numbers (w, x, y, z)");
        if (!item["t_m"].is_array() || item["t_m"].size() != 3)
            fail(at + ": t_m must be an array of 3 numbers");

        PoseLabel label;
        label.frame = item["frame"].get<std::int64_t>();
        label.t_us = item["t_us"].get<std::uint64_t>();
        label.q = Eigen::Quaterniond(item["q"][0].get<double>(), item["q"][1].get<double>(),
                                     item["q"][2].get<double>(), item["q"][3].get<double>());
        label.t_m = Eigen::Vector3d(item["t_m"][0].get<double>(), item["t_m"][1].get<double>(),
                                    item["t_m"][2].get<double>());
        if (std::abs(label.q.norm() - 1.0) > 1e-3)
            fail(at + ": quaternion norm " + std::to_string(label.q.norm()) +
                 " is not unit within 1e-3");
        labels.push_back(label);
    }
    return labels;
}

void write_pose_labels(const std::filesystem::path& path, std::span<const PoseLabel> labels) {
    write_text_file(path, format_pose_labels(labels));
}

std::vector<PoseLabel> read_pose_labels(const std::filesystem::path& path) {
    return parse_pose_labels(read_text_file(path));
}

// --- tensors -------------------------------------------------------------------

Tensor tensor_from_frame(const EventFrame& frame) {
    Tensor t;
    t.channels = static_cast<std::uint32_t>(frame.channels);
    t.height = static_cast<std::uint32_t>(frame.height);
    t.width = static_cast<std::uint32_t>(frame.width);
    t.values = frame.values;
    return t;
}

std::vector<std::byte> encode_tensor(const Tensor& tensor) {
    const std::uint64_t count = static_cast<std::uint64_t>(tensor.channels) * tensor.height *
                                static_cast<std::uint64_t>(tensor.width);
    if (tensor.channels == 0 || tensor.height == 0 || tensor.width == 0)
        fail("tensor dimensions must all be nonzero");
    if (tensor.values.size() != count)
        fail("tensor value count does not match its dimensions");

    std::vector<std::byte> out(16 + 4 * count);
    std::memcpy(out.data(), kEtf1Magic, 4);
    store_le<std::uint32_t>(out.data() + 4, tensor.channels);
    store_le<std::uint32_t>(out.data() + 8, tensor.height);
    store_le<std::uint32_t>(out.data() + 12, tensor.width);
    std::byte* dst = out.data() + 16;
    for (float v : tensor.values) {
        store_le<float>(dst, v);
        dst += 4;
    }
    return out;
}

Tensor decode_tensor(std::span<const std::byte> bytes) {
    if (bytes.size() < 16) fail("truncated tensor header");
    if (std::memcmp(bytes.data(), kEtf1Magic, 4) != 0)
        fail("bad magic: not an ETF1 tensor file");
    Tensor t;
    t.channels = load_le<std::uint32_t>(bytes.data() + 4);
    t.height = load_le<std::uint32_t>(bytes.data() + 8);
    t.width = load_le<std::uint32_t>(bytes.data() + 12);
    if (t.channels == 0 || t.height == 0 || t.width == 0)
        fail("tensor header declares a zero dimension");
    const std::uint64_t count =
        static_cast<std::uint64_t>(t.channels) * t.height * static_cast<std::uint64_t>(t.width);
    if (bytes.size() != 16 + 4 * count)
        fail("tensor payload is " + std::to_string(bytes.size() - 16) + " bytes, expected " +
             std::to_string(4 * count));
    t.values.resize(count);
    const std::byte* src = bytes.data() + 16;
    for (float& v : t.values) {
        v = load_le<float>(src);
        src += 4;
    }
    return t;
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& tensor) {
    write_binary_file(path, encode_tensor(tensor));
}

Tensor read_tensor_file(const std::filesystem::path& path) {
    return decode_tensor(read_binary_file(path));
}

// --- PGM / PPM -------------------------------------------------------------------

namespace {

std::uint8_t quantize(float v) {
    const double clamped = std::clamp(static_cast<double>(v), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

struct PnmData {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bytes;  // 1 per pixel (P5)
};

/// Header tokenizer: whitespace-separated fields, '#' comments to end of line.
const std::byte* next_token(const std::byte* cur, const std::byte* end, std::string& token) {
    token.clear();
    while (cur < end) {
        const char c = static_cast<char>(*cur);
        if (c == '#') {
            while (cur < end && static_cast<char>(*cur) != '\n') ++cur;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++cur;
        } else {
            break;
        }
    }
    while (cur < end && !std::isspace(static_cast<unsigned char>(static_cast<char>(*cur)))) {
        token.push_back(static_cast<char>(*cur));
        ++cur;
    }
    return cur;
}

int parse_pnm_int(const std::string& token, const char* what) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || value <= 0)
        fail(std::string("PGM header: bad ") + what);
    return value;
}

PnmData read_p5(const std::filesystem::path& path) {
    const std::vector<std::byte> bytes = read_binary_file(path);
    const std::byte* cur = bytes.data();
    const std::byte* end = bytes.data() + bytes.size();

    std::string token;
    cur = next_token(cur, end, token);
    if (token == "P2" || token == "P3")
        fail(path.string() + ": ASCII PNM variants (P2/P3) are not supported");
    if (token != "P5") fail(path.string() + ": not a binary PGM (P5) file");

    PnmData img;
    cur = next_token(cur, end, token);
    img.width = parse_pnm_int(token, "width");
    cur = next_token(cur, end, token);
    img.height = parse_pnm_int(token, "height");
    cur = next_token(cur, end, token);
    if (parse_pnm_int(token, "maxval") != 255)
        fail(path.string() + ": maxval must be 255");
    if (cur >= end) fail(path.string() + ": missing pixel data");
    ++cur;  // single whitespace byte after maxval

    const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
    if (static_cast<std::size_t>(end - cur) < count)
        fail(path.string() + ": truncated pixel data");
    img.bytes.resize(count);
    std::memcpy(img.bytes.data(), cur, count);
    return img;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, std::span<const float> values, int width,
               int height) {
    if (width <= 0 || height <= 0 ||
        values.size() != static_cast<std::size_t>(width) * height)
        fail("PGM dimensions do not match the value count");
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    const std::size_t header = out.size();
    out.resize(header + values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[header + i] = static_cast<char>(quantize(values[i]));
    write_text_file(path, out);
}

void write_pgm(const std::filesystem::path& path, const EventFrame& frame) {
    if (frame.channels != 1) fail("PGM export needs a single-channel frame");
    write_pgm(path, frame.values, frame.width, frame.height);
}

void write_ppm(const std::filesystem::path& path, const EventFrame& frame) {
    if (frame.channels != 3) fail("PPM export needs a 3-channel frame");
    std::string out =
        "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
    const std::size_t header = out.size();
    const std::size_t plane = static_cast<std::size_t>(frame.width) * frame.height;
    out.resize(header + 3 * plane);
    for (std::size_t i = 0; i < plane; ++i)
        for (std::size_t c = 0; c < 3; ++c)
            out[header + 3 * i + c] = static_cast<char>(quantize(frame.values[c * plane + i]));
    write_text_file(path, out);
}

GrayImage read_pgm(const std::filesystem::path& path) {
    const PnmData img = read_p5(path);
    GrayImage gray;
    gray.width = img.width;
    gray.height = img.height;
    gray.pixels.resize(img.bytes.size());
    for (std::size_t i = 0; i < img.bytes.size(); ++i)
        gray.pixels[i] = static_cast<float>(img.bytes[i]) / 255.0f;
    return gray;
}

Mask read_mask_pgm(const std::filesystem::path& path) {
    const PnmData img = read_p5(path);
    Mask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.in.resize(img.bytes.size());
    for (std::size_t i = 0; i < img.bytes.size(); ++i)
        mask.in[i] = img.bytes[i] > 127 ? 1 : 0;
    return mask;
}

// --- whole files ------------------------------------------------------------------

std::vector<std::byte> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open " + path.string() + " for reading");
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::byte> bytes(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size))
        fail("failed to read " + path.string());
    return bytes;
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot open " + path.string() + " for writing");
    if (!bytes.empty() &&
        !out.write(reinterpret_cast<const char*>(bytes.data()),
                   static_cast<std::streamsize>(bytes.size())))
        fail("failed to write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    const std::vector<std::byte> bytes = read_binary_file(path);
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    write_binary_file(path,
                      {reinterpret_cast<const std::byte*>(text.data()), text.size()});
}

}  // namespace evs
