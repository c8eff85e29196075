#include "deflect/splinefit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "deflect/error.hpp"

namespace deflect {

namespace {

constexpr int kDegree = 3;
constexpr int kOrder = kDegree + 1;
constexpr double kDegenerateGap = 1e-8;

// Index i of the knot span [U_i, U_{i+1}) holding t, restricted to the
// q - 3 spans covering [U_3, U_q]. The right end maps to the last span.
int find_span(const std::vector<double>& knots, int q, double t) {
    if (t >= knots[q]) return q - 1;
    if (t <= knots[kDegree]) return kDegree;
    auto it = std::upper_bound(knots.begin() + kDegree, knots.begin() + q + 1, t);
    return static_cast<int>(it - knots.begin()) - 1;
}

// Nonzero basis functions N_{span-3..span} and their derivatives up to
// order 2 at t (Piegl & Tiller, algorithm A2.3).
std::array<std::array<double, kOrder>, 3> basis_derivatives(const std::vector<double>& knots,
                                                            int span, double t) {
    std::array<std::array<double, kOrder>, kOrder> ndu{};
    std::array<double, kOrder> left{}, right{};
    ndu[0][0] = 1.0;
    for (int j = 1; j <= kDegree; ++j) {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    std::array<std::array<double, kOrder>, 3> ders{};
    for (int j = 0; j <= kDegree; ++j) ders[0][j] = ndu[j][kDegree];

    std::array<std::array<double, kOrder>, 2> a{};
    for (int r = 0; r <= kDegree; ++r) {
        int s1 = 0, s2 = 1;
        a[0] = {};
        a[0][0] = 1.0;
        for (int k = 1; k <= 2; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = kDegree - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : kDegree - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double factor = kDegree;
    for (int k = 1; k <= 2; ++k) {
        for (int j = 0; j <= kDegree; ++j) ders[k][j] *= factor;
        factor *= kDegree - k;
    }
    return ders;
}

void require_finite(std::span<const double> z, int m) {
    if (static_cast<int>(z.size()) != m) {
        throw DimensionMismatchError("row has " + std::to_string(z.size()) + " values, model expects " +
                                     std::to_string(m));
    }
    for (double v : z) {
        if (!std::isfinite(v)) throw DataError("row contains a non-finite value");
    }
}

}  // namespace

double gcv_score(int m, double rss, double edf) {
    const double gap = m - edf;
    if (gap < kDegenerateGap) {
        throw DegenerateGcvError("GCV denominator vanishes (m - edf = " + std::to_string(gap) + ")");
    }
    return m * rss / (gap * gap);
}

// Data-dependent part of a fit: y = (QU)^T z plus the residual outside the
// spline space. Everything else is a function of lambda alone.
class RowProjection {
public:
    RowProjection(const SplineModel& model, std::span<const double> z)
        : model_(model), z_(Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()))) {
        const Eigen::MatrixXd& qu = model.orthonormal_;
        y_ = qu.transpose() * z_;
        outside_ = (z_ - qu * y_).squaredNorm();
        scale_ = z_.squaredNorm() / model.sites_;
    }

    double edf(double lambda) const { return effective_dof(model_, lambda); }

    double rss(double lambda) const {
        double sum = outside_;
        const Eigen::VectorXd& s = model_.spectrum_;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double shrink = lambda * s[i] / (1.0 + lambda * s[i]);
            sum += shrink * shrink * y_[i] * y_[i];
        }
        return sum;
    }

    // +inf marks a degenerate candidate.
    double gcv(double lambda) const {
        const double e = edf(lambda);
        if (model_.sites_ - e < kDegenerateGap) return std::numeric_limits<double>::infinity();
        return gcv_score(model_.sites_, rss(lambda), e);
    }

    Eigen::VectorXd coefficients(double lambda) const {
        const Eigen::VectorXd& s = model_.spectrum_;
        Eigen::VectorXd shrunk(y_.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) shrunk[i] = y_[i] / (1.0 + lambda * s[i]);
        return model_.coef_map_ * shrunk;
    }

    const Eigen::VectorXd& data() const { return z_; }
    double scale() const { return scale_; }

private:
    const SplineModel& model_;
    Eigen::VectorXd z_;
    Eigen::VectorXd y_;
    double outside_ = 0.0;
    double scale_ = 0.0;
};

Eigen::VectorXd SplineModel::evaluate_basis(double t, int derivative) const {
    Eigen::VectorXd values = Eigen::VectorXd::Zero(basis_size_);
    if (derivative < 0 || derivative > 2) throw UsageError("basis derivative order must be 0, 1 or 2");
    if (t < knots_.front() || t > knots_.back()) return values;
    const int span = find_span(knots_, basis_size_, t);
    const auto ders = basis_derivatives(knots_, span, t);
    for (int j = 0; j <= kDegree; ++j) values[span - kDegree + j] = ders[derivative][j];
    return values;
}

SplineModel build_spline_model(int m, int q) {
    if (q < kOrder || q > m) {
        throw InvalidBasisError("basis dimension q=" + std::to_string(q) + " must satisfy 4 <= q <= m=" +
                                std::to_string(m));
    }

    SplineModel model;
    model.sites_ = m;
    model.basis_size_ = q;

    // q - 2 evenly spaced breakpoints on [1, m], boundary knots repeated 4 times.
    const int breakpoints = q - 2;
    const double spacing = static_cast<double>(m - 1) / (breakpoints - 1);
    model.knots_.reserve(q + 4);
    for (int i = 0; i < kDegree; ++i) model.knots_.push_back(1.0);
    for (int i = 0; i < breakpoints; ++i) {
        model.knots_.push_back(i == breakpoints - 1 ? static_cast<double>(m) : 1.0 + i * spacing);
    }
    for (int i = 0; i < kDegree; ++i) model.knots_.push_back(static_cast<double>(m));

    model.design_ = Eigen::MatrixXd::Zero(m, q);
    for (int j = 0; j < m; ++j) {
        const double t = j + 1.0;
        const int span = find_span(model.knots_, q, t);
        const auto ders = basis_derivatives(model.knots_, span, t);
        for (int k = 0; k <= kDegree; ++k) model.design_(j, span - kDegree + k) = ders[0][k];
    }

    // b'' is linear on each span, so two Gauss-Legendre nodes integrate b_k'' b_l'' exactly.
    model.penalty_ = Eigen::MatrixXd::Zero(q, q);
    const double node = 1.0 / std::sqrt(3.0);
    for (int span = kDegree; span < q; ++span) {
        const double lo = model.knots_[span];
        const double hi = model.knots_[span + 1];
        const double half = 0.5 * (hi - lo);
        if (half <= 0.0) continue;
        for (double g : {-node, node}) {
            const auto ders = basis_derivatives(model.knots_, span, lo + half * (1.0 + g));
            for (int a = 0; a <= kDegree; ++a) {
                for (int b = 0; b <= kDegree; ++b) {
                    model.penalty_(span - kDegree + a, span - kDegree + b) += half * ders[2][a] * ders[2][b];
                }
            }
        }
    }
    // Accumulation order differs between (a, b) and (b, a) only in rounding.
    model.penalty_ = 0.5 * (model.penalty_ + model.penalty_.transpose()).eval();

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(model.design_);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv[q - 1] <= 1e-10 * sv[0]) {
        throw IllPosedFitError("spline design matrix is rank deficient");
    }
    const Eigen::MatrixXd thin_q = qr.householderQ() * Eigen::MatrixXd::Identity(m, q);
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(q, q));

    Eigen::MatrixXd scaled_penalty = r_inv.transpose() * model.penalty_ * r_inv;
    scaled_penalty = 0.5 * (scaled_penalty + scaled_penalty.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled_penalty);
    model.spectrum_ = eig.eigenvalues();
    // The penalty annihilates exactly the affine functions.
    model.spectrum_[0] = 0.0;
    model.spectrum_[1] = 0.0;
    for (Eigen::Index i = 2; i < model.spectrum_.size(); ++i) {
        model.spectrum_[i] = std::max(model.spectrum_[i], 0.0);
    }
    model.orthonormal_ = thin_q * eig.eigenvectors();
    model.coef_map_ = r_inv * eig.eigenvectors();
    return model;
}

double effective_dof(const SplineModel& model, double lambda) {
    double edf = 0.0;
    for (double s : model.spectrum()) edf += 1.0 / (1.0 + lambda * s);
    return edf;
}

PenalizedFit fit_penalized(const SplineModel& model, std::span<const double> z, double lambda) {
    require_finite(z, model.sites());
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw UsageError("smoothing parameter must be finite and non-negative");
    }
    const RowProjection row(model, z);

    PenalizedFit fit;
    fit.lambda = lambda;
    fit.coefficients = row.coefficients(lambda);
    fit.fitted = model.design() * fit.coefficients;
    fit.rss = (row.data() - fit.fitted).squaredNorm();
    fit.edf = effective_dof(model, lambda);
    fit.gcv = gcv_score(model.sites(), fit.rss, fit.edf);
    return fit;
}

std::vector<double> lambda_grid(const LambdaSearch& search) {
    const int steps = static_cast<int>(
        std::lround((search.log10_max - search.log10_min) * search.points_per_decade));
    std::vector<double> grid;
    grid.reserve(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        grid.push_back(std::pow(10.0, search.log10_min + static_cast<double>(i) / search.points_per_decade));
    }
    return grid;
}

PenalizedFit select_lambda(const SplineModel& model, std::span<const double> z, const LambdaSearch& search) {
    require_finite(z, model.sites());
    const RowProjection row(model, z);
    const std::vector<double> grid = lambda_grid(search);

    std::vector<double> scores(grid.size());
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        scores[i] = row.gcv(grid[i]);
        best_score = std::min(best_score, scores[i]);
    }
    if (!std::isfinite(best_score)) {
        throw DegenerateGcvError("every lambda on the search grid gives a degenerate GCV score");
    }

    // Scores within roundoff of the minimum count as ties; the largest lambda wins.
    const double tie = 1e-10 * best_score + 1e-15 * row.scale();
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (scores[i] <= best_score + tie) best = i;
    }
    double best_lambda = grid[best];
    best_score = scores[best];

    if (search.refine && grid.size() > 1) {
        double lo = std::log(grid[best == 0 ? 0 : best - 1]);
        double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
        const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - ratio * (hi - lo);
        double x2 = lo + ratio * (hi - lo);
        double f1 = row.gcv(std::exp(x1));
        double f2 = row.gcv(std::exp(x2));
        while (hi - lo > 1e-7) {
            // Ties move the bracket toward larger lambda.
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = row.gcv(std::exp(x1));
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = row.gcv(std::exp(x2));
            }
        }
        // Snap to a lattice 1000 times finer than the grid. Roundoff in the data
        // (e.g. after an affine rescaling) shifts the golden-section optimum by
        // ~1e-7, but almost never changes which lattice point scores best, so
        // the selected lambda is reproducible bit for bit.
        const double step = 1.0 / (1000.0 * search.points_per_decade);
        const double k = std::round((0.5 * (lo + hi) / std::log(10.0) - search.log10_min) / step);
        double candidate = best_lambda, candidate_score = std::numeric_limits<double>::infinity();
        for (double dk = -1.0; dk <= 1.0; dk += 1.0) {
            const double lambda = std::pow(10.0, search.log10_min + (k + dk) * step);
            const double score = row.gcv(lambda);
            if (score <= candidate_score) {
                candidate = lambda;
                candidate_score = score;
            }
        }
        if (candidate_score < best_score - tie) best_lambda = candidate;
    }
    return fit_penalized(model, z, best_lambda);
}

}  // namespace deflect
