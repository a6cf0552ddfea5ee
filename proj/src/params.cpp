#include "params.hpp"

#include <cmath>

#include "error.hpp"
#include "io.hpp"

namespace svq {

Param& ParamStore::add(const std::string& name, Tensor2 init) {
    require(!contains(name), ErrorKind::InvalidArgument, "duplicate parameter '" + name + "'");
    Param p;
    p.grad = Tensor2(init.rows(), init.cols());
    p.m = Tensor2(init.rows(), init.cols());
    p.v = Tensor2(init.rows(), init.cols());
    p.value = std::move(init);
    return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    require(it != params_.end(), ErrorKind::InvalidArgument, "unknown parameter '" + name + "'");
    return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    require(it != params_.end(), ErrorKind::InvalidArgument, "unknown parameter '" + name + "'");
    return it->second;
}

void ParamStore::zero_grad() {
    for (auto& [_, p] : params_) std::fill(p.grad.data().begin(), p.grad.data().end(), 0.0);
}

std::size_t ParamStore::count() const {
    std::size_t n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
}

void AdamOptimizer::step(ParamStore& store, const AdamConfig& cfg) {
    for (const auto& [name, p] : store.params_)
        require(p.grad.all_finite(), ErrorKind::Numeric, "non-finite gradient in parameter '" + name + "'");

    ++store.step_;
    const double t = static_cast<double>(store.step_);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (auto& [_, p] : store.params_) {
        auto& val = p.value.data();
        auto& g = p.grad.data();
        auto& m = p.m.data();
        auto& v = p.v.data();
        for (std::size_t i = 0; i < val.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            val[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
            g[i] = 0.0;
        }
    }
}

Tensor2 init_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor2 t(rows, cols);
    for (double& x : t.data()) x = uniform(rng, -bound, bound);
    return t;
}

void write_param_blocks(ByteWriter& w, const ParamStore& store, const std::vector<std::string>& names) {
    w.u32(static_cast<std::uint32_t>(names.size()));
    for (const auto& name : names) {
        const Tensor2& t = store.at(name).value;
        w.str(name);
        w.u32(static_cast<std::uint32_t>(t.rows()));
        w.u32(static_cast<std::uint32_t>(t.cols()));
        for (double v : t.data()) w.f32_from(v);
    }
}

void read_param_blocks(ByteReader& r, ParamStore& store, const std::vector<std::string>& names) {
    const std::size_t at = r.offset();
    const std::uint32_t n = r.u32();
    if (n != names.size())
        r.corrupt_at(at, "file has " + std::to_string(n) + " tensors, config implies " + std::to_string(names.size()));
    for (const auto& expected : names) {
        const std::size_t name_at = r.offset();
        const std::string name = r.str();
        if (name != expected) r.corrupt_at(name_at, "expected tensor '" + expected + "', found '" + name + "'");
        Param& p = store.at(name);
        const std::uint32_t rows = r.u32(), cols = r.u32();
        if (rows != p.value.rows() || cols != p.value.cols())
            r.corrupt_at(name_at, "tensor '" + name + "' has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                                      ", expected " + p.value.shape_str());
        for (double& v : p.value.data()) v = r.f32();
    }
}

}  // namespace svq
