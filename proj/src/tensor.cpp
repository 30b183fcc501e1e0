#include "csiloc/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace csiloc {

int64_t shape_size(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d < 0) throw std::invalid_argument("tensor dimension must be nonnegative");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(shape_size(shape)), 0.0);
}

Tensor Tensor::scalar(double v) {
    Tensor t(std::vector<int>{});
    t.data.assign(1, v);
    return t;
}

Tensor Tensor::from(std::vector<int> s, std::vector<double> values) {
    if (shape_size(s) != static_cast<int64_t>(values.size()))
        throw std::invalid_argument("tensor data length does not match shape");
    Tensor t;
    t.shape = std::move(s);
    t.data = std::move(values);
    return t;
}

double& Tensor::at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
double& Tensor::at(int i, int j, int k) {
    return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
}
double& Tensor::at(int i, int j, int k, int l) {
    return data[((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
}
double Tensor::at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }
double Tensor::at(int i, int j, int k) const {
    return data[(static_cast<size_t>(i) * shape[1] + j) * shape[2] + k];
}
double Tensor::at(int i, int j, int k, int l) const {
    return data[((static_cast<size_t>(i) * shape[1] + j) * shape[2] + k) * shape[3] + l];
}

void Tensor::fill(double v) {
    for (auto& x : data) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data)
        if (!std::isfinite(x)) return false;
    return true;
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double x : data) m = std::max(m, std::fabs(x));
    return m;
}

}  // namespace csiloc
