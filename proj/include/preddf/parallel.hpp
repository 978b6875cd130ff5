#ifndef PREDDF_PARALLEL_HPP
#define PREDDF_PARALLEL_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace preddf::par {

enum class Mode { serial, openmp };

// openmp when compiled with it and PREDDF_SERIAL is unset, serial otherwise.
Mode default_mode();

bool compiled_with_openmp();

// Applies fn(i) for i in [0, n). Iterations must be independent; results are
// written into caller-owned slots so both modes produce identical bytes.
void for_index(std::size_t n, Mode mode, const std::function<void(std::size_t)>& fn);

// Fixed-tree pairwise summation; value does not depend on thread count.
double pairwise_sum(const double* v, std::size_t n);
double pairwise_sum(const std::vector<double>& v);

struct MeanSe {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v);

}  // namespace preddf::par

#endif
