#include "errdecode/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "errdecode/error.hpp"

namespace errdecode {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T, typename Bits>
void write_le(const fs::path& file, std::span<const T> values) {
    static_assert(sizeof(T) == sizeof(Bits));
    std::vector<unsigned char> bytes(values.size() * sizeof(T));
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto bits = std::bit_cast<Bits>(values[i]);
        for (std::size_t b = 0; b < sizeof(T); ++b) {
            bytes[i * sizeof(T) + b] = static_cast<unsigned char>(bits & 0xFFu);
            bits >>= 8;
        }
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error(fmt::format("cannot open {} for writing", file.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error(fmt::format("write failed: {}", file.string()));
}

template <typename T, typename Bits>
std::vector<T> read_le(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw format_error(fmt::format("missing payload {}", file.string()));
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % sizeof(T) != 0) {
        throw format_error(fmt::format("payload size mismatch: {} bytes is not a multiple of {}", bytes.size(),
                                       sizeof(T)));
    }
    std::vector<T> values(bytes.size() / sizeof(T));
    for (std::size_t i = 0; i < values.size(); ++i) {
        Bits bits = 0;
        for (std::size_t b = sizeof(T); b-- > 0;) bits = static_cast<Bits>((bits << 8) | bytes[i * sizeof(T) + b]);
        values[i] = std::bit_cast<T>(bits);
    }
    return values;
}

}  // namespace

void write_f32le(const fs::path& file, std::span<const float> values) { write_le<float, std::uint32_t>(file, values); }
void write_f64le(const fs::path& file, std::span<const double> values) { write_le<double, std::uint64_t>(file, values); }
std::vector<float> read_f32le(const fs::path& file) { return read_le<float, std::uint32_t>(file); }
std::vector<double> read_f64le(const fs::path& file) { return read_le<double, std::uint64_t>(file); }

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error(fmt::format("cannot open {} for writing", file.string()));
    out << text;
    if (!out) throw io_error(fmt::format("write failed: {}", file.string()));
}

std::string read_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw io_error(fmt::format("cannot read {}", file.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Recording load_recording(const fs::path& dir) {
    const auto header_path = dir / "header.json";
    if (!fs::exists(header_path)) throw format_error(fmt::format("missing header {}", header_path.string()));

    json header;
    try {
        header = json::parse(read_text(header_path));
    } catch (const json::exception& e) {
        throw format_error(fmt::format("malformed header {}: {}", header_path.string(), e.what()));
    }

    Recording rec;
    try {
        const int version = header.at("format_version").get<int>();
        if (version != kContainerFormatVersion) throw format_error(fmt::format("unknown format version {}", version));
        rec.sample_rate_hz = header.at("sample_rate_hz").get<double>();
        rec.channel_names = header.at("channel_names").get<std::vector<std::string>>();
        for (const auto& ev : header.at("events")) {
            EventMarker marker;
            marker.sample_index = ev.at("sample_index").get<std::int64_t>();
            marker.condition.outcome = parse_outcome(ev.at("outcome").get<std::string>());
            marker.condition.robot = parse_robot(ev.at("robot").get<std::string>());
            rec.events.push_back(marker);
        }
    } catch (const json::exception& e) {
        throw format_error(fmt::format("malformed header {}: {}", header_path.string(), e.what()));
    }
    if (!(rec.sample_rate_hz > 0.0)) throw format_error(fmt::format("invalid sample rate {}", rec.sample_rate_hz));

    const auto n_channels = rec.channel_names.size();
    if (header.contains("n_channels") && header["n_channels"].get<std::size_t>() != n_channels) {
        throw format_error("channel-count mismatch between n_channels and channel_names");
    }
    const auto payload = read_f32le(dir / "data.f32le");
    if (n_channels == 0) throw format_error("container declares no channels");
    std::size_t n_samples = payload.size() / n_channels;
    if (header.contains("n_samples")) n_samples = header["n_samples"].get<std::size_t>();
    if (payload.size() != n_channels * n_samples) {
        throw format_error(fmt::format("payload size mismatch: expected {} floats, found {}", n_channels * n_samples,
                                       payload.size()));
    }

    rec.data.resize(static_cast<Eigen::Index>(n_channels), static_cast<Eigen::Index>(n_samples));
    for (std::size_t i = 0; i < payload.size(); ++i) rec.data.data()[i] = static_cast<double>(payload[i]);
    rec.validate();
    return rec;
}

void save_recording(const Recording& rec, const fs::path& dir) {
    rec.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));

    json header;
    header["format_version"] = kContainerFormatVersion;
    header["sample_rate_hz"] = rec.sample_rate_hz;
    header["n_channels"] = rec.n_channels();
    header["n_samples"] = rec.n_samples();
    header["channel_names"] = rec.channel_names;
    header["events"] = json::array();
    for (const auto& ev : rec.events) {
        header["events"].push_back({{"sample_index", ev.sample_index},
                                    {"outcome", std::string(to_string(ev.condition.outcome))},
                                    {"robot", std::string(to_string(ev.condition.robot))}});
    }

    std::vector<float> payload(static_cast<std::size_t>(rec.data.size()));
    for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<float>(rec.data.data()[i]);
    write_f32le(dir / "data.f32le", payload);
    write_text(dir / "header.json", header.dump(2) + "\n");
}

}  // namespace errdecode
