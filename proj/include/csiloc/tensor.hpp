#pragma once

#include <cstdint>
#include <vector>

namespace csiloc {

/// Dense row-major tensor of 64-bit floats.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s);

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor scalar(double v);
    static Tensor from(std::vector<int> s, std::vector<double> values);

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    double& at(int i, int j);              // 2-d
    double& at(int i, int j, int k);       // 3-d
    double& at(int i, int j, int k, int l);  // 4-d
    double at(int i, int j) const;
    double at(int i, int j, int k) const;
    double at(int i, int j, int k, int l) const;

    void fill(double v);
    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
    double max_abs() const;
};

int64_t shape_size(const std::vector<int>& s);

}  // namespace csiloc
