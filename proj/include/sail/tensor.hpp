#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sail {

/// Dense row-major array of doubles.
///
/// Sequences are stored position-major: a sequence of n feature vectors of
/// width d is an n x d tensor, one row per frame or region.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0);
    Tensor(std::vector<std::size_t> dims, std::vector<double> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor({rows, cols}, fill);
    }
    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor vector(std::vector<double> values);
    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

    const std::vector<std::size_t>& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    // Rank-2 helpers; rank-1 tensors behave as a single row.
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    double* ptr() noexcept { return data_.data(); }
    const double* ptr() const noexcept { return data_.data(); }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols(), cols()}; }

    Tensor reshaped(std::vector<std::size_t> dims) const;
    Tensor transposed() const;
    Tensor rows_slice(std::size_t begin, std::size_t end) const;

    void fill(double v);
    bool all_finite() const noexcept;
    bool same_dims(const Tensor& other) const noexcept { return dims_ == other.dims_; }

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

std::string dims_string(const std::vector<std::size_t>& dims);

/// Max absolute elementwise difference; dims must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace sail
