#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "errdecode/container.hpp"
#include "errdecode/error.hpp"
#include "errdecode/interpret.hpp"

namespace errdecode::interpret {

namespace fs = std::filesystem;

namespace {

class PnmReader {
public:
    explicit PnmReader(std::string bytes) : data_(std::move(bytes)) {}

    long header_int(const fs::path& file) {
        skip_space_and_comments();
        std::size_t start = pos_;
        while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) ++pos_;
        if (start == pos_) throw format_error(fmt::format("{}: malformed header", file.string()));
        return std::stol(data_.substr(start, pos_ - start));
    }

    std::string magic() {
        if (data_.size() < 2) return {};
        pos_ = 2;
        return data_.substr(0, 2);
    }

    // Binary rasters start after exactly one whitespace byte following maxval.
    void end_header() { ++pos_; }

    bool has(std::size_t n) const { return pos_ + n <= data_.size(); }
    unsigned byte() { return static_cast<unsigned char>(data_[pos_++]); }

private:
    void skip_space_and_comments() {
        while (pos_ < data_.size()) {
            if (std::isspace(static_cast<unsigned char>(data_[pos_]))) {
                ++pos_;
            } else if (data_[pos_] == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace

Eigen::MatrixXd load_pnm(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw io_error(fmt::format("cannot open {}", file.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    PnmReader r(ss.str());

    const auto magic = r.magic();
    const bool ascii = magic == "P2" || magic == "P3";
    const bool colour = magic == "P3" || magic == "P6";
    if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
        throw format_error(fmt::format("{}: not a PGM/PPM image", file.string()));
    }
    const long width = r.header_int(file);
    const long height = r.header_int(file);
    const long maxval = r.header_int(file);
    if (width <= 0 || height <= 0) throw format_error(fmt::format("{}: empty image", file.string()));
    if (maxval <= 0 || maxval > 65535) throw format_error(fmt::format("{}: invalid maxval {}", file.string(), maxval));
    if (!ascii) r.end_header();

    const int channels = colour ? 3 : 1;
    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    auto next = [&]() -> double {
        long v = 0;
        if (ascii) {
            v = r.header_int(file);
        } else {
            if (!r.has(sample_bytes)) throw format_error(fmt::format("{}: truncated raster", file.string()));
            v = static_cast<long>(r.byte());
            if (sample_bytes == 2) v = (v << 8) | static_cast<long>(r.byte());
        }
        if (v > maxval) throw format_error(fmt::format("{}: sample {} exceeds maxval", file.string(), v));
        return static_cast<double>(v) / static_cast<double>(maxval);
    };

    Eigen::MatrixXd frame(height, width);
    for (long y = 0; y < height; ++y) {
        for (long x = 0; x < width; ++x) {
            if (channels == 1) {
                frame(y, x) = next();
            } else {
                const double red = next();
                const double green = next();
                const double blue = next();
                frame(y, x) = 0.299 * red + 0.587 * green + 0.114 * blue;
            }
        }
    }
    return frame;
}

void save_pgm(const fs::path& file, const Eigen::MatrixXd& frame) {
    std::string out = fmt::format("P5\n{} {}\n255\n", frame.cols(), frame.rows());
    for (Eigen::Index y = 0; y < frame.rows(); ++y) {
        for (Eigen::Index x = 0; x < frame.cols(); ++x) {
            const double v = std::clamp(frame(y, x), 0.0, 1.0);
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
        }
    }
    write_text(file, out);
}

FrameSequence load_frames(const fs::path& dir, double frame_rate_hz) {
    if (!(frame_rate_hz > 0.0)) throw invalid_argument("frame rate must be positive");
    if (!fs::is_directory(dir)) throw io_error(fmt::format("{} is not a directory", dir.string()));
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".pgm" || ext == ".ppm" || ext == ".pnm")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    FrameSequence seq;
    seq.frame_rate_hz = frame_rate_hz;
    for (const auto& f : files) seq.frames.push_back(load_pnm(f));
    return seq;
}

std::vector<double> l1_frame_distance(const FrameSequence& fs_in) {
    const auto& frames = fs_in.frames;
    if (frames.size() < 2) throw invalid_argument(fmt::format("need at least 2 frames, got {}", frames.size()));
    std::vector<double> out;
    out.reserve(frames.size() - 1);
    for (std::size_t t = 0; t + 1 < frames.size(); ++t) {
        const auto& a = frames[t];
        const auto& b = frames[t + 1];
        if (a.rows() != b.rows() || a.cols() != b.cols()) {
            throw invalid_argument(fmt::format("frame {} is {}x{} but frame {} is {}x{}", t, a.rows(), a.cols(), t + 1,
                                               b.rows(), b.cols()));
        }
        out.push_back((b - a).cwiseAbs().sum() / static_cast<double>(a.size()));
    }
    return out;
}

CsvTable l1_table(std::span<const double> distances, double frame_rate_hz) {
    CsvTable t;
    t.header = {"pair_index", "time_s", "delta_norm"};
    for (std::size_t i = 0; i < distances.size(); ++i) {
        t.rows.push_back({std::to_string(i), format_number(static_cast<double>(i + 1) / frame_rate_hz),
                          format_number(distances[i])});
    }
    return t;
}

}  // namespace errdecode::interpret
