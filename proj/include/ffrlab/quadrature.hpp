#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ffrlab {

struct QuadratureError : std::runtime_error {
    explicit QuadratureError(const std::string& msg) : std::runtime_error(msg) {}
};

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_segments = 256;
};

namespace detail {

// Gauss-Kronrod 15/7 nodes and weights on [-1, 1] (positive half).
inline constexpr double gk_nodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double gk_weights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gauss_weights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Panel {
    double a, b;
    double integral;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b, std::string_view label) {
    const double half = 0.5 * (b - a);
    const double center = 0.5 * (a + b);
    const double fc = f(center);
    double resg = gauss_weights[3] * fc;
    double resk = gk_weights[7] * fc;
    double resabs = gk_weights[7] * std::fabs(fc);
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * gk_nodes[j];
        fv1[j] = f(center - dx);
        fv2[j] = f(center + dx);
        const double sum = fv1[j] + fv2[j];
        resk += gk_weights[j] * sum;
        resabs += gk_weights[j] * (std::fabs(fv1[j]) + std::fabs(fv2[j]));
        if (j % 2 == 1) resg += gauss_weights[j / 2] * sum;
    }
    const double reskh = 0.5 * resk;
    double resasc = gk_weights[7] * std::fabs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += gk_weights[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));
    const double ah = std::fabs(half);
    resasc *= ah;
    resabs *= ah;
    double err = std::fabs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps = std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(eps * 50.0 * resabs, err);
    const double result = resk * half;
    if (!std::isfinite(result))
        throw QuadratureError(std::string("non-finite integrand value in ") + std::string(label));
    return Panel{a, b, result, err};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration on a finite interval. The worst
// panel is bisected until the summed error estimate meets the tolerance.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {},
                 std::string_view label = "integrand") {
    if (a == b) return 0.0;
    std::vector<detail::Panel> heap;
    heap.reserve(64);
    heap.push_back(detail::gk15(f, a, b, label));
    double total = heap[0].integral;
    double total_err = heap[0].error;
    const auto tol = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::fabs(total)); };
    while (total_err > tol()) {
        if (static_cast<int>(heap.size()) >= opt.max_segments)
            throw QuadratureError(std::string("quadrature did not converge for ") +
                                  std::string(label) + ": error " + std::to_string(total_err));
        std::pop_heap(heap.begin(), heap.end());
        const detail::Panel worst = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= std::min(worst.a, worst.b) || mid >= std::max(worst.a, worst.b))
            throw QuadratureError(std::string("interval too small to subdivide in ") +
                                  std::string(label));
        detail::Panel left = detail::gk15(f, worst.a, mid, label);
        detail::Panel right = detail::gk15(f, mid, worst.b, label);
        total += left.integral + right.integral - worst.integral;
        total_err += left.error + right.error - worst.error;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end());
    }
    // Refresh the running sums to shed accumulated cancellation.
    total = 0.0;
    for (const auto& p : heap) total += p.integral;
    return total;
}

}  // namespace ffrlab
