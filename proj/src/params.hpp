#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace svq {

class ByteWriter;
class ByteReader;

struct Param {
    Tensor2 value;
    mutable Tensor2 grad;  // accumulation buffer written by Tape::backward
    Tensor2 m;  // Adam first moment
    Tensor2 v;  // Adam second moment
};

// Named trainable tensors with their gradient accumulators and optimizer state.
// Iteration order is by name, which keeps every traversal deterministic.
class ParamStore {
public:
    Param& add(const std::string& name, Tensor2 init);
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    std::map<std::string, Param>& params() { return params_; }
    const std::map<std::string, Param>& params() const { return params_; }

    void zero_grad();
    std::int64_t step() const { return step_; }

    // Number of scalar parameters.
    std::size_t count() const;

private:
    friend struct AdamOptimizer;
    std::map<std::string, Param> params_;
    std::int64_t step_ = 0;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamOptimizer {
    // Bias-corrected Adam update of every parameter, then clears gradients.
    // Throws (naming the parameter) before touching anything if a gradient is non-finite.
    static void step(ParamStore& store, const AdamConfig& cfg);
};

inline void adam_step(ParamStore& store, const AdamConfig& cfg) { AdamOptimizer::step(store, cfg); }

// Named float32 tensor blocks: u32 count, then per tensor name, rows u32, cols u32, values.
void write_param_blocks(ByteWriter& w, const ParamStore& store, const std::vector<std::string>& names);
// Reads blocks into an already laid-out store; names and shapes must match `names` exactly.
void read_param_blocks(ByteReader& r, ParamStore& store, const std::vector<std::string>& names);

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor2 init_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

}  // namespace svq
