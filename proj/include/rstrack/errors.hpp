#pragma once

#include <stdexcept>
#include <string>

namespace rstrack {

// Raised when an input carries no usable spectral signal (e.g. constant images).
class NoSignalError : public std::runtime_error {
  public:
    explicit NoSignalError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when iterative training produces a non-finite loss.
class DivergenceError : public std::runtime_error {
  public:
    DivergenceError(const std::string& what, int epoch)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const { return epoch_; }

  private:
    int epoch_;
};

}  // namespace rstrack
