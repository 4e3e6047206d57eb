#include "faraday/fit.hpp"

#include <algorithm>
#include <cmath>

#include "faraday/errors.hpp"

namespace faraday::fit {

UniformSpline::UniformSpline(std::vector<double> y, double dr, bool zero_slope_left)
    : y_(std::move(y)), dr_(dr) {
    const std::size_t n = y_.size();
    if (n < 3) throw numerical_error("UniformSpline: need at least 3 points");
    if (dr <= 0) throw numerical_error("UniformSpline: dr must be > 0");

    // Tridiagonal system for knot second derivatives. Natural right end;
    // left end either natural or clamped to zero slope.
    std::vector<double> a(n, 0), b(n, 0), c(n, 0), d(n, 0);
    const double h = dr_;
    if (zero_slope_left) {
        b[0] = 2.0 * h;
        c[0] = h;
        d[0] = 6.0 * ((y_[1] - y_[0]) / h);
    } else {
        b[0] = 1.0;
        d[0] = 0.0;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        a[i] = h;
        b[i] = 4.0 * h;
        c[i] = h;
        d[i] = 6.0 * ((y_[i + 1] - y_[i]) / h - (y_[i] - y_[i - 1]) / h);
    }
    b[n - 1] = 1.0;
    d[n - 1] = 0.0;

    // Thomas algorithm
    m_.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
}

double UniformSpline::value(double r) const {
    const std::size_t n = y_.size();
    if (r <= 0) return y_.front();
    const double end = dr_ * double(n - 1);
    if (r >= end) return y_.back();
    const double s = r / dr_;
    std::size_t i = std::min(std::size_t(s), n - 2);
    const double t = s - double(i);
    const double u = 1.0 - t;
    return y_[i] * u + y_[i + 1] * t +
           dr_ * dr_ / 6.0 * ((u * u * u - u) * m_[i] + (t * t * t - t) * m_[i + 1]);
}

double UniformSpline::derivative(double r) const {
    const std::size_t n = y_.size();
    const double end = dr_ * double(n - 1);
    if (r <= 0 || r >= end) return 0.0;
    const double s = r / dr_;
    std::size_t i = std::min(std::size_t(s), n - 2);
    const double t = s - double(i);
    const double u = 1.0 - t;
    return (y_[i + 1] - y_[i]) / dr_ +
           dr_ / 6.0 * ((1.0 - 3.0 * u * u) * m_[i] + (3.0 * t * t - 1.0) * m_[i + 1]);
}

double UniformSpline::max_value() const { return *std::max_element(y_.begin(), y_.end()); }

namespace {

void numeric_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                      const Eigen::VectorXd& r0, Eigen::MatrixXd& jac) {
    const int m = int(r0.size());
    const int np = int(p.size());
    jac.resize(m, np);
    Eigen::VectorXd pp = p, r1(m);
    for (int j = 0; j < np; ++j) {
        const double h = 1e-7 * std::max(std::abs(p[j]), 1e-12);
        pp[j] = p[j] + h;
        residual(pp, r1);
        jac.col(j) = (r1 - r0) / h;
        pp[j] = p[j];
    }
}

} // namespace

LmResult levenberg_marquardt(const ResidualFn& residual, int n_residuals,
                             const Eigen::VectorXd& p0, const LmOptions& opts,
                             const JacobianFn* jacobian) {
    LmResult out;
    const int np = int(p0.size());
    Eigen::VectorXd p = p0, r(n_residuals), r_try(n_residuals);
    residual(p, r);
    double cost = r.squaredNorm();
    double lambda = opts.lambda_init;
    Eigen::MatrixXd jac;

    for (out.iterations = 1; out.iterations <= opts.max_iterations; ++out.iterations) {
        if (jacobian)
            (*jacobian)(p, jac);
        else
            numeric_jacobian(residual, p, r, jac);
        Eigen::MatrixXd jtj = jac.transpose() * jac;
        Eigen::VectorXd jtr = jac.transpose() * r;

        bool stepped = false;
        for (int tries = 0; tries < 24; ++tries) {
            Eigen::MatrixXd damped = jtj;
            for (int k = 0; k < np; ++k)
                damped(k, k) += lambda * std::max(jtj(k, k), 1e-30);
            Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            if (!step.allFinite()) {
                lambda *= opts.lambda_up;
                continue;
            }
            Eigen::VectorXd p_try = p + step;
            residual(p_try, r_try);
            const double cost_try = r_try.squaredNorm();
            if (std::isfinite(cost_try) && cost_try <= cost) {
                const double rel_step =
                    step.norm() / std::max(p.norm(), 1e-30);
                p = p_try;
                r = r_try;
                cost = cost_try;
                lambda = std::max(lambda * opts.lambda_down, 1e-14);
                stepped = true;
                if (rel_step < opts.step_tol) {
                    out.converged = true;
                }
                break;
            }
            lambda *= opts.lambda_up;
        }
        if (!stepped) {
            // No downhill step found at any damping: local minimum.
            out.converged = true;
        }
        if (out.converged) break;
    }

    out.params = p;
    const int dof = std::max(n_residuals - np, 1);
    const double sigma2 = cost / dof;
    out.rms = std::sqrt(cost / n_residuals);
    Eigen::MatrixXd jtj = jac.size() ? Eigen::MatrixXd(jac.transpose() * jac)
                                     : Eigen::MatrixXd::Identity(np, np);
    Eigen::MatrixXd inv = jtj.completeOrthogonalDecomposition().pseudoInverse();
    out.covariance = sigma2 * inv;
    return out;
}

LinearLsResult linear_least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    LinearLsResult out;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    out.x = qr.solve(b);
    out.rank = int(qr.rank());
    const auto& R = qr.matrixR();
    double dmax = 0, dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < A.cols(); ++i) {
        const double d = std::abs(R(i, i));
        dmax = std::max(dmax, d);
        dmin = std::min(dmin, d);
    }
    out.condition = dmin > 0 ? dmax / dmin : std::numeric_limits<double>::infinity();
    Eigen::VectorXd resid = A * out.x - b;
    out.rss = resid.squaredNorm();
    const int dof = std::max(int(A.rows() - A.cols()), 1);
    Eigen::MatrixXd jtj = A.transpose() * A;
    out.covariance = (out.rss / dof) * jtj.completeOrthogonalDecomposition().pseudoInverse();
    return out;
}

double golden_section_min(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_iter) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

std::pair<double, double> fit_exponential(const std::vector<double>& t,
                                          const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 3)
        throw numerical_error("fit_exponential: need >= 3 points");
    // Log-linear seed over the positive samples, then LM on the raw values.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (y[i] <= 0) continue;
        const double ly = std::log(y[i]);
        sx += t[i];
        sy += ly;
        sxx += t[i] * t[i];
        sxy += t[i] * ly;
        ++n;
    }
    if (n < 3) throw numerical_error("fit_exponential: too few positive samples");
    const double denom = n * sxx - sx * sx;
    double slope = denom != 0 ? (n * sxy - sx * sy) / denom : 0.0;
    double icept = (sy - slope * sx) / n;
    if (slope >= 0) slope = -1.0 / (t.back() - t.front() + 1e-30);

    Eigen::VectorXd p0(2);
    p0 << std::exp(icept), -1.0 / slope;
    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        for (size_t i = 0; i < t.size(); ++i)
            r[long(i)] = p[0] * std::exp(-t[i] / p[1]) - y[i];
    };
    LmResult res = levenberg_marquardt(residual, int(t.size()), p0);
    return {res.params[0], res.params[1]};
}

} // namespace faraday::fit
