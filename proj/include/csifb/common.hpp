#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace csifb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Bits = std::vector<std::uint8_t>;
using cplx = std::complex<double>;

// Signals that the paper-style math writes as row vectors (x, w, d, ...)
// are stored as Eigen column vectors; batches are feature x sample
// matrices (one sample per column).

/// Invalid or inconsistent configuration (bad field values, unknown keys).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Broken or missing external data: files, checkpoints, datasets.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric breakdown (NaN loss, divergence) with diagnostic context.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace csifb
