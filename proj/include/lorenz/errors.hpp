#pragma once

#include <stdexcept>
#include <string>

namespace lorenz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class CriticalPointEval : public Error {
public:
    CriticalPointEval() : Error("map evaluated at the critical point") {}
};

class NoiseOutOfRange : public Error {
public:
    NoiseOutOfRange(double t, double eps_max)
        : Error("noise value " + std::to_string(t) + " exceeds eps_max " + std::to_string(eps_max))
    {
    }
};

class OutOfBranchRange : public Error {
public:
    using Error::Error;
};

/// An orbit landed on the critical point (to the configured guard).
class CriticalHit : public Error {
public:
    explicit CriticalHit(std::size_t step)
        : Error("orbit hit the critical point at step " + std::to_string(step)), step_(step)
    {
    }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class PartitionTooCoarse : public Error {
public:
    using Error::Error;
};

class PartitionMismatch : public Error {
public:
    PartitionMismatch() : Error("densities live on different partitions") {}
};

class NoConvergence : public Error {
public:
    NoConvergence(std::size_t iters, double residual)
        : Error("power iteration did not converge after " + std::to_string(iters) +
                " iterations (residual " + std::to_string(residual) + ")"),
          iterations_(iters), residual_(residual)
    {
    }
    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

class DeltaOutOfRange : public Error {
public:
    using Error::Error;
};

class EmptyPullback : public Error {
public:
    explicit EmptyPullback(std::size_t step)
        : Error("pullback component vanished at chain index " + std::to_string(step))
    {
    }
};

class NotDiffeomorphic : public Error {
public:
    NotDiffeomorphic() : Error("pullback chain has positive order") {}
};

class NicenessViolated : public Error {
public:
    NicenessViolated(std::size_t k, int side)
        : Error("boundary orbit re-entered the nice set at k=" + std::to_string(k) +
                (side < 0 ? " (left boundary)" : " (right boundary)")),
          k_(k), side_(side)
    {
    }
    std::size_t k() const noexcept { return k_; }
    int side() const noexcept { return side_; }

private:
    std::size_t k_;
    int side_;
};

class ConfigInvalid : public Error {
public:
    using Error::Error;
};

} // namespace lorenz
