#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "flowdetect/errors.hpp"

namespace flowdetect {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of 64-bit floats.
///
/// Every public operation either produces all-finite values or throws, and
/// all reductions use a fixed accumulation order, so repeated evaluation of
/// the same expression is bitwise reproducible.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor. Every dimension must be positive.
    explicit Tensor(Shape shape);

    /// Takes ownership of `values`; checks size and finiteness.
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_[axis]; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& at(std::size_t i) { return data_[i]; }
    double at(std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// Throws ContractError when any element is NaN or infinite.
    void ensure_finite(const char* what) const;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// xoshiro256++ 1.0 (Blackman & Vigna) seeded by splitmix64 expansion of a
/// 64-bit seed. Both algorithms are fixed here on purpose: the same seed
/// must yield the same stream on every platform and in every build.
/// Single-owner mutable state; never share one instance across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform on [0,1) with 53 random bits.
    double next_double();

    double uniform(double lo, double hi);

    /// Box-Muller transform; consumes exactly two uniforms per call.
    double normal(double mean, double stddev);

    /// Uniform integer in [0, bound). Modulo reduction; bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound);

private:
    std::uint64_t state_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Matrix product a[m x k] * b[k x p]. Each output element accumulates in
/// ascending-k order, left to right, so results are bitwise deterministic.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& t);
Tensor tanh(const Tensor& t);
Tensor relu(const Tensor& t);

Tensor transpose(const Tensor& m);

double sigmoid_scalar(double x);

/// Default weight-initialization bound: 1/sqrt(fan_in). Kept in one place so
/// the rule can be swapped without touching the layers.
double uniform_init_bound(std::size_t fan_in);

/// I.i.d. uniform on [-bound, +bound]; consumes `rng` deterministically in
/// row-major element order.
Tensor init_uniform(Rng& rng, const Shape& shape, double bound);

}  // namespace flowdetect
