#include "preddf/parallel.hpp"

#include <cmath>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace preddf::par {

bool compiled_with_openmp() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

Mode default_mode() {
#ifdef _OPENMP
    if (std::getenv("PREDDF_SERIAL") != nullptr) return Mode::serial;
    return Mode::openmp;
#else
    return Mode::serial;
#endif
}

void for_index(std::size_t n, Mode mode, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
    if (mode == Mode::openmp) {
        const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
        for (long long i = 0; i < nn; ++i) fn(static_cast<std::size_t>(i));
        return;
    }
#else
    (void)mode;
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

MeanSe mean_se(const std::vector<double>& v) {
    MeanSe out;
    const std::size_t n = v.size();
    if (n == 0) return out;
    out.mean = pairwise_sum(v) / static_cast<double>(n);
    if (n < 2) return out;
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = v[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
    out.sd = std::sqrt(var);
    out.se = out.sd / std::sqrt(static_cast<double>(n));
    return out;
}

}  // namespace preddf::par
