#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace zk {

template <class F>
double radial_integral(F&& f, double R) {
    using boost::math::quadrature::gauss_kronrod;
    auto g = [&](double r) { return f(r) * r; };
    double err = 0.0;
    const double sum = gauss_kronrod<double, 61>::integrate(g, 0.0, R, 20, 1e-13, &err);
    if (!std::isfinite(sum)) throw std::runtime_error("radial_integral: quadrature did not converge");
    return 2.0 * std::numbers::pi * sum;
}

}  // namespace zk
