#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace faraday::fit {

/// Cubic interpolating spline on a uniform grid r_i = i * dr. Evaluation
/// clamps outside [0, (n-1) dr] (value held, derivative zero). With
/// zero_slope_left the left end is clamped to S'(0) = 0, which keeps radial
/// profiles smooth through the axis.
class UniformSpline {
public:
    UniformSpline() = default;
    UniformSpline(std::vector<double> y, double dr, bool zero_slope_left = false);

    double value(double r) const;
    double derivative(double r) const;
    double max_value() const;
    double dr() const { return dr_; }
    std::size_t size() const { return y_.size(); }
    double domain_end() const { return dr_ * double(y_.empty() ? 0 : y_.size() - 1); }

private:
    std::vector<double> y_;
    std::vector<double> m_; // second derivatives at knots
    double dr_ = 1.0;
};

using ResidualFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
using JacobianFn = std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)>;

struct LmOptions {
    int max_iterations = 100;
    double step_tol = 1e-8;     // relative parameter step
    double lambda_init = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 0.25;
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // sigma^2 (J^T J)^-1
    double rms = 0;              // residual RMS at solution
    int iterations = 0;
    bool converged = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt). Jacobian is forward-difference
/// unless an analytic one is supplied.
LmResult levenberg_marquardt(const ResidualFn& residual, int n_residuals,
                             const Eigen::VectorXd& p0, const LmOptions& opts = {},
                             const JacobianFn* jacobian = nullptr);

struct LinearLsResult {
    Eigen::VectorXd x;
    Eigen::MatrixXd covariance;  // sigma^2 (A^T A)^-1, sigma^2 from residuals
    double rss = 0;
    double condition = 0;        // diag(R) ratio from column-pivoted QR
    int rank = 0;
};

/// Least squares min ||A x - b||; rows may be pre-weighted by the caller.
LinearLsResult linear_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Golden-section minimum of f on [a, b].
double golden_section_min(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_iter = 200);

/// tau of y ~ A exp(-t/tau) via LM on (t, y) pairs; returns (A, tau).
std::pair<double, double> fit_exponential(const std::vector<double>& t,
                                          const std::vector<double>& y);

} // namespace faraday::fit
