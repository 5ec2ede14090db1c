#include <fmt/format.h>

#include "errdecode/classical.hpp"
#include "errdecode/error.hpp"

namespace errdecode::classical {

std::vector<int> RLDAModel::predict(const Eigen::MatrixXd& features) const {
    if (features.cols() != weights.size()) {
        throw invalid_argument(fmt::format("rLDA expects {} features, got {}", weights.size(), features.cols()));
    }
    const Eigen::VectorXd scores = features * weights;
    std::vector<int> out(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index i = 0; i < features.rows(); ++i) out[static_cast<std::size_t>(i)] = scores(i) + bias > 0.0;
    return out;
}

RLDAModel fit_rlda(const Eigen::MatrixXd& features, std::span<const int> labels, std::optional<double> fixed_gamma) {
    const auto n = features.rows();
    const auto d = features.cols();
    if (static_cast<std::size_t>(n) != labels.size()) throw invalid_argument("fit_rlda: label count mismatch");
    if (!features.allFinite()) throw data_error("fit_rlda: non-finite features");

    Eigen::VectorXd sum0 = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sum1 = Eigen::VectorXd::Zero(d);
    Eigen::Index n0 = 0;
    Eigen::Index n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == 1) {
            sum1 += features.row(i).transpose();
            ++n1;
        } else {
            sum0 += features.row(i).transpose();
            ++n0;
        }
    }
    if (n0 == 0 || n1 == 0) throw data_error("fit_rlda: single class");
    if (n0 < 2 || n1 < 2) throw data_error("fit_rlda: need at least 2 samples per class");
    const Eigen::VectorXd mu0 = sum0 / static_cast<double>(n0);
    const Eigen::VectorXd mu1 = sum1 / static_cast<double>(n1);

    Eigen::MatrixXd centered = features;
    for (Eigen::Index i = 0; i < n; ++i) {
        centered.row(i) -= (labels[static_cast<std::size_t>(i)] == 1 ? mu1 : mu0).transpose();
    }

    ShrinkageEstimate est;
    if (fixed_gamma) {
        if (!(*fixed_gamma >= 0.0 && *fixed_gamma <= 1.0)) throw invalid_argument("fit_rlda: gamma outside [0, 1]");
        const Eigen::MatrixXd s = centered.transpose() * centered / static_cast<double>(n);
        est.gamma = *fixed_gamma;
        est.covariance = (1.0 - est.gamma) * s;
        est.covariance.diagonal().array() += est.gamma * s.trace() / static_cast<double>(d);
    } else {
        est = ledoit_wolf(centered, /*assume_centered=*/true);
    }

    RLDAModel model;
    model.shrinkage_gamma = est.gamma;
    const Eigen::LDLT<Eigen::MatrixXd> solver(est.covariance);
    model.weights = solver.solve(mu1 - mu0);
    if (solver.info() != Eigen::Success || !model.weights.allFinite()) {
        throw numerical_error("fit_rlda: singular shrunk covariance");
    }
    model.bias = -model.weights.dot(mu1 + mu0) / 2.0;
    return model;
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
    if (predicted.size() != labels.size()) throw invalid_argument("accuracy: size mismatch");
    if (labels.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace errdecode::classical
