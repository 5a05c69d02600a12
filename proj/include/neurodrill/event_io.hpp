#pragma once

#include <neurodrill/errors.hpp>
#include <neurodrill/event_sim.hpp>
#include <neurodrill/trajectory.hpp>

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace neurodrill {

// Binary event file, all fields little-endian:
//   0  char[4] magic "NDEV"
//   4  u16     version (1)
//   6  u16     sensor width
//   8  u16     sensor height
//  10  u32     timestamp unit in nanoseconds (1000: microseconds)
//  14  u64     record count
//  22  records of 13 bytes: u64 t, u16 u, u16 v, i8 p
namespace event_file {
constexpr std::array<char, 4> kMagic{'N', 'D', 'E', 'V'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint32_t kMicroseconds = 1000;
constexpr std::size_t kHeaderSize = 22;
constexpr std::size_t kRecordSize = 13;
}  // namespace event_file

namespace detail {

template <class T>
void put_le(std::string& out, T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<char>(u & 0xFF));
        u = static_cast<U>(u >> 8);
    }
}

template <class T>
T get_le(const std::string& in, std::size_t offset) {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
        u = static_cast<U>((u << 8) | static_cast<unsigned char>(in[offset + i]));
    }
    return static_cast<T>(u);
}

[[noreturn]] inline void corrupt(std::size_t offset, const std::string& what) {
    fail(ErrorCode::CorruptFile, what + " at byte offset " + std::to_string(offset));
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Writes `content` next to `path` and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        fail(ErrorCode::IoError, "cannot rename into " + path.string());
    }
}

inline std::string encode_events(const std::vector<Event>& events, int width, int height) {
    if (width <= 0 || height <= 0 || width > 65535 || height > 65535)
        fail(ErrorCode::InvalidArgument, "sensor size must fit in 16 bits");
    std::string out;
    out.reserve(event_file::kHeaderSize + events.size() * event_file::kRecordSize);
    out.append(event_file::kMagic.data(), event_file::kMagic.size());
    detail::put_le<std::uint16_t>(out, event_file::kVersion);
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(width));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(height));
    detail::put_le<std::uint32_t>(out, event_file::kMicroseconds);
    detail::put_le<std::uint64_t>(out, events.size());
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.t < prev) fail(ErrorCode::InvalidArgument, "event " + std::to_string(i) + " is out of time order");
        if (e.u >= width || e.v >= height)
            fail(ErrorCode::InvalidArgument, "event " + std::to_string(i) + " lies outside the sensor");
        prev = e.t;
        detail::put_le<std::uint64_t>(out, e.t);
        detail::put_le<std::uint16_t>(out, e.u);
        detail::put_le<std::uint16_t>(out, e.v);
        detail::put_le<std::int8_t>(out, e.p);
    }
    return out;
}

struct DecodedEvents {
    std::vector<Event> events;
    int width = 0;
    int height = 0;
};

inline DecodedEvents decode_events(const std::string& bytes) {
    using namespace event_file;
    if (bytes.size() < kHeaderSize) detail::corrupt(bytes.size(), "truncated header");
    if (bytes.compare(0, kMagic.size(), kMagic.data(), kMagic.size()) != 0) detail::corrupt(0, "bad magic");
    if (detail::get_le<std::uint16_t>(bytes, 4) != kVersion) detail::corrupt(4, "unsupported version");
    DecodedEvents out;
    out.width = detail::get_le<std::uint16_t>(bytes, 6);
    out.height = detail::get_le<std::uint16_t>(bytes, 8);
    if (out.width == 0 || out.height == 0) detail::corrupt(6, "zero sensor size");
    if (detail::get_le<std::uint32_t>(bytes, 10) != kMicroseconds) detail::corrupt(10, "unsupported timestamp unit");
    const auto count = detail::get_le<std::uint64_t>(bytes, 14);
    const std::size_t payload = bytes.size() - kHeaderSize;
    if (count > payload / kRecordSize) detail::corrupt(bytes.size(), "truncated records");
    if (payload != count * kRecordSize) detail::corrupt(kHeaderSize + count * kRecordSize, "trailing bytes");
    out.events.resize(count);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t off = kHeaderSize + i * kRecordSize;
        Event& e = out.events[i];
        e.t = detail::get_le<std::uint64_t>(bytes, off);
        e.u = detail::get_le<std::uint16_t>(bytes, off + 8);
        e.v = detail::get_le<std::uint16_t>(bytes, off + 10);
        e.p = detail::get_le<std::int8_t>(bytes, off + 12);
        if (e.t < prev) detail::corrupt(off, "non-monotone timestamp");
        if (e.u >= out.width || e.v >= out.height) detail::corrupt(off + 8, "pixel outside the sensor");
        if (e.p != 1 && e.p != -1) detail::corrupt(off + 12, "polarity must be +1 or -1");
        prev = e.t;
    }
    return out;
}

/// Pose log text: one line per sample, "t r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz".
inline std::string encode_pose_log(const PoseLog& log) {
    std::string out;
    char buf[64];
    for (const auto& s : log.samples) {
        out += std::to_string(s.t);
        const Mat3& r = s.t_bc.rotation();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                std::snprintf(buf, sizeof buf, " %.17g", r(i, j));
                out += buf;
            }
        for (int i = 0; i < 3; ++i) {
            std::snprintf(buf, sizeof buf, " %.17g", s.t_bc.translation()[i]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline PoseLog decode_pose_log(const std::string& text) {
    PoseLog log;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            std::istringstream in(line);
            PoseSample s;
            double v[12];
            if (!(in >> s.t)) detail::corrupt(pos, "bad pose timestamp");
            for (double& x : v)
                if (!(in >> x)) detail::corrupt(pos, "pose line needs 13 numbers");
            std::string extra;
            if (in >> extra) detail::corrupt(pos, "extra fields on pose line");
            Mat3 r;
            r << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
            s.t_bc = RigidTransform(r, Vec3(v[9], v[10], v[11]));
            if (!log.samples.empty() && s.t <= log.samples.back().t) detail::corrupt(pos, "non-monotone pose timestamp");
            log.samples.push_back(s);
        }
        pos = end + 1;
    }
    return log;
}

inline void save_events(const EventStream& stream, const std::filesystem::path& path) {
    write_atomic(path, encode_events(stream.events, stream.width, stream.height));
}

inline void save_pose_log(const PoseLog& log, const std::filesystem::path& path) {
    write_atomic(path, encode_pose_log(log));
}

/// Loads events and, when given, the companion pose log.
inline EventStream load_events(const std::filesystem::path& path, const std::filesystem::path& pose_path = {}) {
    auto decoded = decode_events(detail::read_file(path));
    EventStream s;
    s.events = std::move(decoded.events);
    s.width = decoded.width;
    s.height = decoded.height;
    if (!pose_path.empty()) s.poses = decode_pose_log(detail::read_file(pose_path));
    return s;
}

}  // namespace neurodrill
