#pragma once

#include <vector>

namespace mssf {

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b| (inputs are
/// copied and sorted).
double ks_two_sample(std::vector<double> a, std::vector<double> b);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);

}  // namespace mssf
