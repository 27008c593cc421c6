#include "sail/tensor.hpp"

#include "sail/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace sail {

namespace {

std::size_t element_count(const std::vector<std::size_t>& dims) {
    require(!dims.empty(), ErrorKind::invalid_argument, "tensor needs at least one dimension");
    for (auto d : dims) require(d > 0, ErrorKind::invalid_argument, "tensor dims must be positive, got " + dims_string(dims));
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

std::string dims_string(const std::vector<std::size_t>& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> dims, double fill)
    : dims_(std::move(dims)), data_(element_count(dims_), fill) {}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
    require(element_count(dims_) == data_.size(), ErrorKind::dimension_mismatch,
            "tensor data length " + std::to_string(data_.size()) + " does not match dims " + dims_string(dims_));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
    return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) { return Tensor({values.size()}, std::vector<double>(values)); }

Tensor Tensor::vector(std::vector<double> values) {
    const auto n = values.size();
    return Tensor({n}, std::move(values));
}

std::size_t Tensor::rows() const noexcept {
    if (dims_.size() < 2) return dims_.empty() ? 0 : 1;
    return dims_[0];
}

std::size_t Tensor::cols() const noexcept {
    if (dims_.empty()) return 0;
    return dims_.back();
}

Tensor Tensor::reshaped(std::vector<std::size_t> dims) const { return Tensor(std::move(dims), data_); }

Tensor Tensor::transposed() const {
    const std::size_t r = rows(), c = cols();
    Tensor out = matrix(c, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out(j, i) = (*this)(i, j);
    return out;
}

Tensor Tensor::rows_slice(std::size_t begin, std::size_t end) const {
    require(begin < end && end <= rows(), ErrorKind::invalid_argument, "row slice out of range");
    const std::size_t c = cols();
    std::vector<double> d(data_.begin() + static_cast<std::ptrdiff_t>(begin * c), data_.begin() + static_cast<std::ptrdiff_t>(end * c));
    return Tensor({end - begin, c}, std::move(d));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require(a.same_dims(b), ErrorKind::dimension_mismatch, "max_abs_diff: " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace sail
