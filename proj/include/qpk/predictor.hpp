#pragma once

#include <span>
#include <vector>

namespace qpk {

/// A differentiable scalar predictor f(x; theta) with a flat parameter
/// vector. Implementations must be pure functions of (x, theta) so that
/// batches can be evaluated concurrently.
class Predictor {
  public:
    virtual ~Predictor() = default;

    virtual int input_dim() const = 0;
    virtual int param_count() const = 0;

    virtual double predict(std::span<const double> x, std::span<const double> theta) const = 0;

    /// Exact gradient of predict with respect to theta.
    virtual std::vector<double> gradient(std::span<const double> x,
                                         std::span<const double> theta) const = 0;
};

} // namespace qpk
