#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "errdecode/classical.hpp"
#include "errdecode/error.hpp"

namespace errdecode::classical {

Eigen::MatrixXd CSPModel::selected_filters() const {
    const auto n = filters.cols();
    const auto m = std::min<Eigen::Index>(n_pairs, n / 2);
    Eigen::MatrixXd out(filters.rows(), 2 * m);
    out.leftCols(m) = filters.leftCols(m);
    out.rightCols(m) = filters.rightCols(m);
    return out;
}

Eigen::MatrixXd normalized_covariance(const Signal& trial) {
    const Eigen::MatrixXd centered = trial.colwise() - trial.rowwise().mean();
    Eigen::MatrixXd cov = centered * centered.transpose();
    const double tr = cov.trace();
    if (!(tr > 0.0)) throw data_error("zero variance trial in covariance estimate");
    return cov / tr;
}

CSPModel csp_from_covariances(const Eigen::MatrixXd& c1, const Eigen::MatrixXd& c2, int n_pairs) {
    const auto d = c1.rows();
    if (c1.cols() != d || c2.rows() != d || c2.cols() != d) throw invalid_argument("CSP covariances must be square and equal-sized");
    if (n_pairs < 1 || 2 * n_pairs > d) {
        throw invalid_argument(fmt::format("CSP needs 1 <= pairs <= channels/2 (pairs {}, channels {})", n_pairs, d));
    }

    Eigen::MatrixXd composite = c1 + c2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> comp_eig(composite);
    const double tr = composite.trace();
    if (comp_eig.eigenvalues().minCoeff() <= 1e-12 * tr) {
        composite.diagonal().array() += 1e-10 * tr / static_cast<double>(d);
        comp_eig.compute(composite);
        if (comp_eig.eigenvalues().minCoeff() <= 0.0) throw numerical_error("singular composite covariance");
    }

    // P = D^{-1/2} U^T whitens the composite; the class-1 covariance is then
    // diagonalized in the whitened space.
    const Eigen::MatrixXd whitening =
        comp_eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * comp_eig.eigenvectors().transpose();
    const Eigen::MatrixXd s1 = whitening * c1 * whitening.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s1_eig(0.5 * (s1 + s1.transpose()));

    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return s1_eig.eigenvalues()(a) > s1_eig.eigenvalues()(b);
    });

    CSPModel model;
    model.n_pairs = n_pairs;
    model.filters.resize(d, d);
    model.eigenvalues.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto src = order[static_cast<std::size_t>(j)];
        Eigen::VectorXd w = whitening.transpose() * s1_eig.eigenvectors().col(src);
        Eigen::Index peak = 0;
        w.cwiseAbs().maxCoeff(&peak);
        if (w(peak) < 0.0) w = -w;
        model.filters.col(j) = w;
        model.eigenvalues(j) = std::clamp(s1_eig.eigenvalues()(src), 0.0, 1.0);
    }
    return model;
}

CSPModel fit_csp(const TrialSet& ts, int n_pairs) {
    ts.require_both_classes("fit_csp");
    const auto d = static_cast<Eigen::Index>(ts.n_channels());
    Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(d, d);
    const auto [n0, n1] = ts.class_counts();
    for (std::size_t k = 0; k < ts.size(); ++k) {
        (ts.labels[k] == 1 ? c1 : c0) += normalized_covariance(ts.trials[k]);
    }
    c0 /= static_cast<double>(n0);
    c1 /= static_cast<double>(n1);
    return csp_from_covariances(c1, c0, n_pairs);
}

Eigen::MatrixXd csp_features(const CSPModel& model, const TrialSet& ts) {
    if (ts.n_channels() != static_cast<std::size_t>(model.filters.rows())) {
        throw invalid_argument(fmt::format("CSP model has {} channels, trials have {}", model.filters.rows(),
                                           ts.n_channels()));
    }
    const Eigen::MatrixXd w = model.selected_filters();
    Eigen::MatrixXd features(static_cast<Eigen::Index>(ts.size()), w.cols());
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const Eigen::MatrixXd projected = w.transpose() * ts.trials[k];
        const Eigen::MatrixXd centered = projected.colwise() - projected.rowwise().mean();
        const Eigen::VectorXd var = centered.rowwise().squaredNorm();
        const double total = var.sum();
        if (!(var.minCoeff() > 0.0)) throw data_error(fmt::format("zero variance in projected trial {}", k));
        features.row(static_cast<Eigen::Index>(k)) = (var / total).array().log().transpose();
    }
    return features;
}

}  // namespace errdecode::classical
