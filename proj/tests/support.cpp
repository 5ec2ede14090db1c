#include "support.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <Eigen/Eigenvalues>

#include "errdecode/rng.hpp"

namespace support {

namespace fs = std::filesystem;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale) {
    errdecode::Rng rng(seed, 42);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
    }
    return m;
}

Recording random_recording(std::size_t channels, std::size_t samples, double fs, std::uint64_t seed) {
    Recording rec;
    rec.data = random_matrix(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(samples), seed, 10.0);
    rec.sample_rate_hz = fs;
    for (std::size_t c = 0; c < channels; ++c) rec.channel_names.push_back("Ch" + std::to_string(c));
    return rec;
}

errdecode::synth::SynthSpec erp_fixture(std::uint64_t seed) {
    errdecode::synth::SynthSpec spec;
    spec.kind = errdecode::synth::EffectKind::Erp;
    spec.seed = seed;
    spec.erp.amplitude_uv = 20.0;
    spec.erp.latency_s = 5.0;
    spec.erp.width_s = 0.5;
    spec.erp.channels = {3, 4, 5, 6};
    return spec;
}

errdecode::synth::SynthSpec bandpower_fixture(std::uint64_t seed) {
    errdecode::synth::SynthSpec spec;
    spec.kind = errdecode::synth::EffectKind::Bandpower;
    spec.seed = seed;
    spec.bandpower.band_hz = {8.0, 12.0};
    spec.bandpower.ratio = 4.0;
    spec.bandpower.base_uv = 4.0;
    spec.bandpower.channels = {3, 4, 5, 6};
    return spec;
}

errdecode::synth::SynthSpec null_fixture(std::uint64_t seed) {
    auto spec = erp_fixture(seed);
    spec.erp.amplitude_uv = 0.0;
    return spec;
}

LwOracle ledoit_wolf_oracle(const Eigen::MatrixXd& x, bool assume_centered) {
    const auto n = x.rows();
    const auto d = x.cols();
    Eigen::MatrixXd xc = x;
    if (!assume_centered) {
        for (Eigen::Index j = 0; j < d; ++j) {
            double m = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) m += x(i, j);
            m /= static_cast<double>(n);
            for (Eigen::Index i = 0; i < n; ++i) xc(i, j) -= m;
        }
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::VectorXd v = xc.row(k).transpose();
        s += v * v.transpose();
    }
    s /= static_cast<double>(n);
    const double mu = s.trace() / static_cast<double>(d);
    const Eigen::MatrixXd target = mu * Eigen::MatrixXd::Identity(d, d);
    const double d2 = (s - target).squaredNorm();
    double b2 = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::VectorXd v = xc.row(k).transpose();
        b2 += (v * v.transpose() - s).squaredNorm();
    }
    b2 /= static_cast<double>(n) * static_cast<double>(n);
    LwOracle out;
    out.gamma = d2 > 0.0 ? std::min(b2, d2) / d2 : 0.0;
    out.covariance = out.gamma * target + (1.0 - out.gamma) * s;
    return out;
}

Eigen::MatrixXd ewm_oracle(const Eigen::MatrixXd& x, double fs, double decay, double eps, double init_s) {
    const auto n = x.cols();
    const auto n_init = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(init_s * fs)), 1, n);
    Eigen::MatrixXd y(x.rows(), n);
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
        double m = 0.0;
        for (Eigen::Index t = 0; t < n_init; ++t) m += x(c, t);
        m /= static_cast<double>(n_init);
        double v = 0.0;
        for (Eigen::Index t = 0; t < n_init; ++t) v += (x(c, t) - m) * (x(c, t) - m);
        v /= static_cast<double>(n_init);
        for (Eigen::Index t = 0; t < n; ++t) {
            m = (1.0 - decay) * m + decay * x(c, t);
            v = (1.0 - decay) * v + decay * (x(c, t) - m) * (x(c, t) - m);
            y(c, t) = (x(c, t) - m) / std::max(std::sqrt(v), eps);
        }
    }
    return y;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> generalized_eigen_oracle(const Eigen::MatrixXd& c1,
                                                                     const Eigen::MatrixXd& c2) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(c1, c1 + c2);
    if (solver.info() != Eigen::Success) throw std::runtime_error("generalized eigen oracle failed");
    const auto d = c1.rows();
    Eigen::VectorXd values(d);
    Eigen::MatrixXd vectors(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        values(i) = solver.eigenvalues()(d - 1 - i);
        vectors.col(i) = solver.eigenvectors().col(d - 1 - i);
    }
    return {values, vectors};
}

double enumeration_p(const std::vector<int>& labels, std::size_t observed_agreement) {
    const auto n = labels.size();
    const auto ones = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    std::size_t total = 0;
    std::size_t extreme = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcountll(mask)) != ones) continue;
        std::size_t agree = 0;
        for (std::size_t i = 0; i < n; ++i) agree += static_cast<int>((mask >> i) & 1U) == labels[i];
        ++total;
        extreme += agree >= observed_agreement;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

double cascade_magnitude(const std::vector<errdecode::filters::Biquad>& sections, double f, double fs) {
    const double w = 2.0 * std::numbers::pi * f / fs;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    double mag = 1.0;
    for (const auto& s : sections) {
        mag *= std::abs((s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2));
    }
    return mag;
}

double relative_error(double analytic, double numeric, double floor) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

CliResult run_cli(const std::string& args) {
    const std::string command = std::string(ERRDECODE_CLI) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    if (pipe == nullptr) throw std::runtime_error("cannot start " + command);
    CliResult result;
    char buffer[4096];
    std::size_t got;
    while ((got = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) result.output.append(buffer, got);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("errdecode_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::map<std::string, fs::path> list_tree(const fs::path& root) {
    std::map<std::string, fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (entry.is_regular_file()) files[fs::relative(entry.path(), root).generic_string()] = entry.path();
    }
    return files;
}

}  // namespace

bool same_tree(const fs::path& a, const fs::path& b, std::string* difference) {
    const auto fa = list_tree(a);
    const auto fb = list_tree(b);
    auto report = [&](const std::string& what) {
        if (difference != nullptr) *difference = what;
        return false;
    };
    if (fa.size() != fb.size()) return report("file counts differ");
    for (const auto& [name, path] : fa) {
        const auto it = fb.find(name);
        if (it == fb.end()) return report(name + " missing");
        if (read_file(path) != read_file(it->second)) return report(name + " differs");
    }
    return true;
}

void write_json(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    out << text;
}

}  // namespace support
