#include "tensor.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace svq {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(data_.size() == rows_ * cols_, ErrorKind::Shape,
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " + shape_str());
}

Tensor2 Tensor2::from_external(std::size_t rows, std::size_t cols, std::vector<double> data) {
    Tensor2 t(rows, cols, std::move(data));
    require(t.all_finite(), ErrorKind::Numeric, "non-finite value in external tensor " + t.shape_str());
    return t;
}

Tensor2 Tensor2::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor2(1, n, std::move(values));
}

Tensor2 Tensor2::identity(std::size_t n) {
    Tensor2 t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

bool Tensor2::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor2::shape_str() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    require(a.cols() == b.rows(), ErrorKind::Shape,
            "matmul shape mismatch: " + a.shape_str() + " x " + b.shape_str());
    Tensor2 out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    const std::size_t inner = a.cols();
    // i-k-j order keeps each output element's accumulation in ascending k.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* o = out.data().data() + i * n;
        const double* ar = a.data().data() + i * inner;
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = ar[k];
            const double* br = b.data().data() + k * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += aik * br[j];
        }
    }
    return out;
}

Tensor2 transpose(const Tensor2& a) {
    Tensor2 out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Tensor2 softmax_rows(const Tensor2& a) {
    Tensor2 out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto in = a.row_span(i);
        auto o = out.row_span(i);
        const double mx = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            o[j] = std::exp(in[j] - mx);
            sum += o[j];
        }
        for (double& v : o) v /= sum;
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

void round_to_float(Tensor2& t) { round_to_float(t.data()); }

void round_to_float(std::vector<double>& v) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

}  // namespace svq
