///
/// \file common.hpp
///
/// Shared type aliases and the exception hierarchy used throughout scalht.
///
#ifndef SCALHT_COMMON_HPP
#define SCALHT_COMMON_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace scalht
{

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RealOf = typename Eigen::NumTraits<Scalar>::Real;

using cdouble = std::complex<double>;
using MatrixXcd = Matrix<cdouble>;

///
/// Base class of every error raised by the library.
///
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Shapes, indices or ranks that do not fit together.
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// Invalid parameter value (negative sigma, step size out of range, ...).
class ConfigError : public Error
{
public:
    using Error::Error;
};

///
/// Numerical breakdown: non-finite data or a Gram matrix whose condition
/// number exceeds the solver limit. `what()` names the offending factor.
///
class NumericalError : public Error
{
public:
    using Error::Error;
};

namespace detail
{

inline void require(bool cond, const std::string& msg)
{
    if (!cond)
    {
        throw DimensionError(msg);
    }
}

inline void require_config(bool cond, const std::string& msg)
{
    if (!cond)
    {
        throw ConfigError(msg);
    }
}

} // namespace detail

} // namespace scalht

#endif /* SCALHT_COMMON_HPP */
