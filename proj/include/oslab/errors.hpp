#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oslab {

// Base of every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller passed something outside an operation's preconditions.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// A compound matrix (or other derived object) would exceed the configured size cap.
class CapacityError : public Error {
public:
    CapacityError(std::size_t required, std::size_t cap)
        : Error("capacity exceeded: required dimension " + std::to_string(required) +
                " > cap " + std::to_string(cap)),
          required_(required), cap_(cap) {}

    std::size_t required() const noexcept { return required_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t required_;
    std::size_t cap_;
};

// Raw products left the representable range; the scaled QR path must be used instead.
class NumericOverflow : public Error {
public:
    using Error::Error;
};

// No spectral gap at the requested index.
class GapMissing : public Error {
public:
    GapMissing(int p, double gap)
        : Error("no spectral gap at index " + std::to_string(p) +
                " (measured lambda_p - lambda_{p+1} = " + std::to_string(gap) + ")"),
          gap_(gap) {}

    double gap() const noexcept { return gap_; }

private:
    double gap_;
};

// Requested rotation exceeds what the distance budget allows.
class AngleTooLarge : public Error {
public:
    explicit AngleTooLarge(double max_angle)
        : Error("rotation angle exceeds admissible bound xi_0 = " + std::to_string(max_angle)),
          max_angle_(max_angle) {}

    double max_angle() const noexcept { return max_angle_; }

private:
    double max_angle_;
};

// kill_direction found no orbit point where E1 is almost annihilated.
class NbNotPresent : public Error {
public:
    using Error::Error;
};

// The mixing hypothesis ratio is below 1/2.
class HypothesisFailed : public Error {
public:
    explicit HypothesisFailed(double ratio)
        : Error("mixing hypothesis failed: ratio " + std::to_string(ratio) + " < 1/2"),
          ratio_(ratio) {}

    double ratio() const noexcept { return ratio_; }

private:
    double ratio_;
};

// The per-step rotation budget cannot complete the turn within m steps.
class NeedsLargerM : public Error {
public:
    explicit NeedsLargerM(int minimal_m)
        : Error("rotation schedule infeasible; minimal feasible m = " +
                (minimal_m > 0 ? std::to_string(minimal_m) : std::string("none found"))),
          minimal_m_(minimal_m) {}

    // 0 when no feasible m was found within the search cap.
    int minimal_m() const noexcept { return minimal_m_; }

private:
    int minimal_m_;
};

}  // namespace oslab
