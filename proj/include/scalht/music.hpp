///
/// \file music.hpp
///
/// MUSIC direction-of-arrival estimation for a half-wavelength uniform linear
/// array, with steering vector `a(theta) = [1, p, ..., p^{n-1}]`,
/// `p = exp(i pi sin(theta))`.
///
#ifndef SCALHT_MUSIC_HPP
#define SCALHT_MUSIC_HPP

#include <vector>

#include <Eigen/Dense>

#include <scalht/common.hpp>

namespace scalht
{

/// Raised when the pseudo-spectrum has fewer local maxima than sources.
class PeakDetectionError : public NumericalError
{
public:
    using NumericalError::NumericalError;
};

struct MusicOptions
{
    double grid_step_deg = 0.01;
    double min_deg = -90.0;
    double max_deg = 90.0;
};

struct MusicSpectrum
{
    Eigen::VectorXd grid_deg;
    /// Pseudo-spectrum `1 / ||E_n^H a(theta)||^2`.
    Eigen::VectorXd power;
};

/// Steering vector of an n-element array.
Eigen::VectorXcd steering_vector(double theta_deg, Index n);

/// Spatial covariance `(1/s) X^T conj(X)` of an `s x n` snapshot matrix.
Eigen::MatrixXcd spatial_covariance(const Eigen::MatrixXcd& x);

/// Pseudo-spectrum on the grid for `r` sources.
MusicSpectrum music_spectrum(const Eigen::MatrixXcd& x, Index r,
                             const MusicOptions& opts = {});

///
/// The `r` largest local maxima of the pseudo-spectrum, refined by 3-point
/// parabolic interpolation of the spectrum in dB, sorted ascending (degrees).
///
/// \throw DimensionError      if `r < 1` or `r >= n`
/// \throw PeakDetectionError  if fewer than `r` local maxima exist
///
std::vector<double> music_estimate(const Eigen::MatrixXcd& x, Index r,
                                   const MusicOptions& opts = {});

} // namespace scalht

#endif /* SCALHT_MUSIC_HPP */
