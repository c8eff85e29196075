#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace deflect {

/// Cubic B-spline smoother for rows of length m, sampled at t = 1..m.
///
/// Holds the design matrix X (m x q), the integrated squared second-derivative
/// penalty S (q x q), and a spectral factorization of the penalized normal
/// equations. With X = QR and R^{-T} S R^{-1} = U diag(s) U^T, every fit reduces
/// to a diagonal shrinkage of y = U^T Q^T z:
///
///     beta(lambda) = R^{-1} U diag(1 / (1 + lambda s)) y
///     edf(lambda)  = sum_i 1 / (1 + lambda s_i)
///
/// so a whole lambda search costs O(q) per candidate after one O(mq) projection.
/// Immutable after construction; share freely between threads.
class SplineModel {
public:
    int sites() const noexcept { return sites_; }
    int basis_size() const noexcept { return basis_size_; }

    /// Full knot vector, q + 4 entries, with 4-fold repetition at 1 and m.
    const std::vector<double>& knots() const noexcept { return knots_; }
    const Eigen::MatrixXd& design() const noexcept { return design_; }
    const Eigen::MatrixXd& penalty() const noexcept { return penalty_; }

    /// Eigenvalues s_i of R^{-T} S R^{-1}, ascending. The two null-space
    /// values (affine functions) are stored as exact zeros.
    const Eigen::VectorXd& spectrum() const noexcept { return spectrum_; }

    /// Values of the q basis functions at t (zero outside their support).
    Eigen::VectorXd evaluate_basis(double t, int derivative = 0) const;

private:
    friend SplineModel build_spline_model(int m, int q);
    friend class RowProjection;

    int sites_ = 0;
    int basis_size_ = 0;
    std::vector<double> knots_;
    Eigen::MatrixXd design_;
    Eigen::MatrixXd penalty_;

    Eigen::MatrixXd orthonormal_;   // QU, m x q
    Eigen::MatrixXd coef_map_;      // R^{-1} U, q x q
    Eigen::VectorXd spectrum_;
};

struct PenalizedFit {
    Eigen::VectorXd coefficients;
    double lambda = 0.0;
    Eigen::VectorXd fitted;
    double edf = 0.0;
    double gcv = 0.0;
    double rss = 0.0;
};

/// Generalized cross-validation score m * rss / (m - edf)^2.
/// Throws DegenerateGcvError when m - edf < 1e-8.
double gcv_score(int m, double rss, double edf);

/// Requires 4 <= q <= m; otherwise throws InvalidBasisError.
SplineModel build_spline_model(int m, int q);

/// Trace of the influence matrix at lambda. Independent of the data.
double effective_dof(const SplineModel& model, double lambda);

/// Minimizes ||z - X beta||^2 + lambda beta^T S beta.
PenalizedFit fit_penalized(const SplineModel& model, std::span<const double> z, double lambda);

/// GCV search settings. Defaults give the geometric grid 1e-6..1e6 with
/// 7 points per decade and one golden-section pass around the grid minimizer.
struct LambdaSearch {
    double log10_min = -6.0;
    double log10_max = 6.0;
    int points_per_decade = 7;
    bool refine = true;
};

/// Lambda minimizing the GCV score. Ties (within roundoff) go to the larger
/// lambda. Throws DegenerateGcvError if every grid point is degenerate.
PenalizedFit select_lambda(const SplineModel& model, std::span<const double> z,
                           const LambdaSearch& search = {});

/// Candidate lambdas visited by the grid phase of select_lambda.
std::vector<double> lambda_grid(const LambdaSearch& search);

}  // namespace deflect
