#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace zk::detail {

// Quintic Hermite interpolant on a uniform grid x0 + k h from values and two
// derivatives. Boost 1.74's cardinal_quintic_hermite drops a 1/h^2 factor in
// its second derivative, hence this local copy.
class UniformQuinticHermite {
public:
    UniformQuinticHermite() = default;
    UniformQuinticHermite(std::vector<double> y, std::vector<double> dy, std::vector<double> d2y,
                          double x0, double h)
        : y_(std::move(y)), dy_(std::move(dy)), d2y_(std::move(d2y)), x0_(x0), h_(h) {
        if (y_.size() < 2 || dy_.size() != y_.size() || d2y_.size() != y_.size() || !(h_ > 0.0))
            throw std::invalid_argument("UniformQuinticHermite: bad data");
    }

    double x_end() const { return x0_ + h_ * static_cast<double>(y_.size() - 1); }

    double operator()(double x) const { return eval(x, 0); }
    double prime(double x) const { return eval(x, 1); }
    double double_prime(double x) const { return eval(x, 2); }

    double eval(double x, int deriv) const {
        if (x < x0_ || x > x_end()) throw std::domain_error("UniformQuinticHermite: outside range");
        const double s = (x - x0_) / h_;
        std::size_t i = static_cast<std::size_t>(std::floor(s));
        if (i >= y_.size() - 1) i = y_.size() - 2;
        const double t = s - static_cast<double>(i);
        const double y0 = y_[i], y1 = y_[i + 1];
        const double d0 = h_ * dy_[i], d1 = h_ * dy_[i + 1];
        const double e0 = h_ * h_ * d2y_[i], e1 = h_ * h_ * d2y_[i + 1];
        const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
        switch (deriv) {
            case 0:
                return (1 - 10 * t3 + 15 * t4 - 6 * t5) * y0 + (10 * t3 - 15 * t4 + 6 * t5) * y1 +
                       (t - 6 * t3 + 8 * t4 - 3 * t5) * d0 + (-4 * t3 + 7 * t4 - 3 * t5) * d1 +
                       0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * e0 + 0.5 * (t3 - 2 * t4 + t5) * e1;
            case 1:
                return ((-30 * t2 + 60 * t3 - 30 * t4) * (y0 - y1) +
                        (1 - 18 * t2 + 32 * t3 - 15 * t4) * d0 + (-12 * t2 + 28 * t3 - 15 * t4) * d1 +
                        0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4) * e0 +
                        0.5 * (3 * t2 - 8 * t3 + 5 * t4) * e1) /
                       h_;
            default:
                return ((-60 * t + 180 * t2 - 120 * t3) * (y0 - y1) +
                        (-36 * t + 96 * t2 - 60 * t3) * d0 + (-24 * t + 84 * t2 - 60 * t3) * d1 +
                        (1 - 9 * t + 18 * t2 - 10 * t3) * e0 + (3 * t - 12 * t2 + 10 * t3) * e1) /
                       (h_ * h_);
        }
    }

private:
    std::vector<double> y_, dy_, d2y_;
    double x0_ = 0.0, h_ = 1.0;
};

}  // namespace zk::detail
