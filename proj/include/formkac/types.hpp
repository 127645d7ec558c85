#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace formkac {

/// Largest manifold dimension handled by the library.
inline constexpr int kMaxDim = 6;
/// Largest exterior power dimension, C(6,3).
inline constexpr int kMaxForm = 20;
/// Largest spinor dimension, 2^(6/2).
inline constexpr int kMaxSpinor = 8;

// Dynamic sizes with a compile-time cap keep every per-step object on the stack.
template <typename Scalar>
using VecN = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
template <typename Scalar>
using MatN = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
template <typename Scalar>
using FormVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxForm, 1>;
template <typename Scalar>
using FormMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxForm, kMaxForm>;

using Vec = VecN<double>;
using Mat = MatN<double>;
using FVec = FormVec<double>;
using FMat = FormMat<double>;

using Complex = std::complex<double>;
using SpinVec = Eigen::Matrix<Complex, Eigen::Dynamic, 1, 0, kMaxSpinor, 1>;
using SpinMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxSpinor, kMaxSpinor>;

/// A point outside the valid chart domain of a model.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An argument that violates an operation's stated contract.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A precondition on the state of the inputs (not their shape) failed.
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Bad user-supplied data, e.g. a field that evaluates to NaN.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A simulation step that could not be completed even after refinement.
class StepFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace formkac
