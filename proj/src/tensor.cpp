#include "flowdetect/tensor.hpp"

#include <cmath>
#include <utility>

namespace flowdetect {

std::string shape_to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    out += "]";
    return out;
}

namespace {

std::size_t checked_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw DimensionError("tensor shape " + shape_to_string(shape) + " has a zero dimension");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    data_.assign(checked_numel(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_numel(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + shape_to_string(shape_) + " does not match " +
                             std::to_string(data_.size()) + " values");
    }
    ensure_finite("tensor construction");
}

void Tensor::ensure_finite(const char* what) const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            throw ContractError(std::string("non-finite value produced by ") + what);
        }
    }
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double Rng::normal(double mean, double stddev) {
    // 1-u maps [0,1) to (0,1] so the log is always defined.
    const double u1 = 1.0 - next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
    if (bound == 0) throw ContractError("Rng::next_below requires bound > 0");
    return next_u64() % bound;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul shape mismatch: " + shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
    Tensor y({m, p});
    // i-k-j loop order: each y(i,j) still accumulates in ascending k.
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = a.at(i, kk);
            for (std::size_t j = 0; j < p; ++j) {
                y.at(i, j) += av * b.at(kk, j);
            }
        }
    }
    y.ensure_finite("matmul");
    return y;
}

namespace {

template <typename F>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, F f) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(name) + " shape mismatch: " + shape_to_string(a.shape()) +
                             " vs " + shape_to_string(b.shape()));
    }
    Tensor y(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) y.at(i) = f(a.at(i), b.at(i));
    y.ensure_finite(name);
    return y;
}

template <typename F>
Tensor unary_op(const Tensor& a, const char* name, F f) {
    Tensor y(a.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) y.at(i) = f(a.at(i));
    y.ensure_finite(name);
    return y;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(a, b, "mul", [](double x, double y) { return x * y; });
}

double sigmoid_scalar(double x) {
    // Split form avoids overflow of exp for large |x|.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& t) {
    return unary_op(t, "sigmoid", sigmoid_scalar);
}

Tensor tanh(const Tensor& t) {
    return unary_op(t, "tanh", [](double x) { return std::tanh(x); });
}

Tensor relu(const Tensor& t) {
    return unary_op(t, "relu", [](double x) { return x > 0.0 ? x : 0.0; });
}

Tensor transpose(const Tensor& m) {
    if (m.rank() != 2) {
        throw DimensionError("transpose expects a rank-2 tensor, got " + shape_to_string(m.shape()));
    }
    Tensor y({m.dim(1), m.dim(0)});
    for (std::size_t i = 0; i < m.dim(0); ++i)
        for (std::size_t j = 0; j < m.dim(1); ++j) y.at(j, i) = m.at(i, j);
    return y;
}

double uniform_init_bound(std::size_t fan_in) {
    if (fan_in == 0) throw ConfigError("uniform_init_bound requires fan_in > 0");
    return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

Tensor init_uniform(Rng& rng, const Shape& shape, double bound) {
    if (!(bound > 0.0)) throw ConfigError("init_uniform requires bound > 0");
    Tensor y(shape);
    for (std::size_t i = 0; i < y.numel(); ++i) y.at(i) = rng.uniform(-bound, bound);
    y.ensure_finite("init_uniform");
    return y;
}

}  // namespace flowdetect
