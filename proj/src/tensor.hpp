#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace svq {

// Dense row-major matrix of doubles. Vectors are 1×n rows.
class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);

    // Rejects NaN/Inf; used at every boundary where values come from outside.
    static Tensor2 from_external(std::size_t rows, std::size_t cols, std::vector<double> data);
    static Tensor2 row(std::vector<double> values);
    static Tensor2 identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row_span(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;
    std::string shape_str() const;

    friend bool operator==(const Tensor2&, const Tensor2&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 transpose(const Tensor2& a);

// Numerically stable softmax of each row.
Tensor2 softmax_rows(const Tensor2& a);

double squared_distance(std::span<const double> a, std::span<const double> b);

// Rounds every value to the nearest float32, the precision of persisted artifacts.
void round_to_float(Tensor2& t);
void round_to_float(std::vector<double>& v);

}  // namespace svq
