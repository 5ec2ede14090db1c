#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errdecode/classical.hpp"
#include "errdecode/convnet/network.hpp"
#include "errdecode/core.hpp"
#include "errdecode/preprocess.hpp"
#include "errdecode/synth.hpp"

namespace support {

using errdecode::Recording;
using errdecode::Signal;

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0);
Recording random_recording(std::size_t channels, std::size_t samples, double fs, std::uint64_t seed);

/// Synthetic fixtures used across the suite.
errdecode::synth::SynthSpec erp_fixture(std::uint64_t seed);
errdecode::synth::SynthSpec bandpower_fixture(std::uint64_t seed);
errdecode::synth::SynthSpec null_fixture(std::uint64_t seed);

// Oracles ---------------------------------------------------------------------

struct LwOracle {
    Eigen::MatrixXd covariance;
    double gamma = 0.0;
};
/// Direct transcription of the shrinkage formula with explicit outer products.
LwOracle ledoit_wolf_oracle(const Eigen::MatrixXd& x, bool assume_centered);

/// y_t from the plain per-sample recursion, seeded by the first block.
Eigen::MatrixXd ewm_oracle(const Eigen::MatrixXd& x, double fs, double decay, double eps, double init_s);

/// Eigenpairs of C1 w = lambda (C1 + C2) w via a dense generalized solver,
/// sorted by descending eigenvalue, each vector scaled to w^T (C1+C2) w = 1.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> generalized_eigen_oracle(const Eigen::MatrixXd& c1,
                                                                     const Eigen::MatrixXd& c2);

/// Exact P(agreement >= observed) over all distinct arrangements of the labels.
double enumeration_p(const std::vector<int>& labels, std::size_t observed_agreement);

/// Magnitude of a biquad cascade evaluated directly from its coefficients.
double cascade_magnitude(const std::vector<errdecode::filters::Biquad>& sections, double f, double fs);

/// max |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor = 1e-6);

// Processes and files ---------------------------------------------------------

struct CliResult {
    int exit_code = 0;
    std::string output;
};
CliResult run_cli(const std::string& args);

class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& file);
/// Byte-wise comparison of two directory trees (names and contents).
bool same_tree(const std::filesystem::path& a, const std::filesystem::path& b, std::string* difference = nullptr);
void write_json(const std::filesystem::path& file, const std::string& text);

}  // namespace support
