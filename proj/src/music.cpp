#include <scalht/music.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace scalht
{

Eigen::VectorXcd steering_vector(double theta_deg, Index n)
{
    const double phase = std::numbers::pi * std::sin(theta_deg * std::numbers::pi / 180.0);
    Eigen::VectorXcd a(n);
    for (Index j = 0; j < n; ++j)
        a[j] = std::polar(1.0, phase * double(j));
    return a;
}

Eigen::MatrixXcd spatial_covariance(const Eigen::MatrixXcd& x)
{
    detail::require(x.rows() >= 1, "spatial_covariance: no snapshots");
    return x.transpose() * x.conjugate() / double(x.rows());
}

MusicSpectrum music_spectrum(const Eigen::MatrixXcd& x, Index r, const MusicOptions& opts)
{
    const Index n = x.cols();
    detail::require(r >= 1 && r < n, "MUSIC: number of sources must be in [1, n)");
    detail::require_config(opts.grid_step_deg > 0.0 && opts.max_deg > opts.min_deg,
                           "MUSIC: invalid angle grid");
    if (!x.allFinite())
        throw NumericalError("MUSIC: snapshot matrix has non-finite entries");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(spatial_covariance(x));
    // Eigenvalues ascending: the first n - r eigenvectors span the noise subspace.
    const Eigen::MatrixXcd en_h = es.eigenvectors().leftCols(n - r).adjoint();

    const Index count =
        static_cast<Index>(std::floor((opts.max_deg - opts.min_deg) / opts.grid_step_deg + 1e-9)) + 1;
    MusicSpectrum out;
    out.grid_deg.resize(count);
    out.power.resize(count);
    for (Index i = 0; i < count; ++i)
    {
        const double theta = opts.min_deg + double(i) * opts.grid_step_deg;
        out.grid_deg[i] = theta;
        out.power[i]    = 1.0 / std::max((en_h * steering_vector(theta, n)).squaredNorm(), 1e-300);
    }
    return out;
}

std::vector<double> music_estimate(const Eigen::MatrixXcd& x, Index r, const MusicOptions& opts)
{
    const MusicSpectrum sp = music_spectrum(x, r, opts);
    const Index count = sp.power.size();
    std::vector<Index> peaks;
    for (Index i = 1; i + 1 < count; ++i)
    {
        if (sp.power[i] > sp.power[i - 1] && sp.power[i] >= sp.power[i + 1])
            peaks.push_back(i);
    }
    if (static_cast<Index>(peaks.size()) < r)
    {
        throw PeakDetectionError("MUSIC: found " + std::to_string(peaks.size()) +
                                 " spectral peaks for " + std::to_string(r) + " sources");
    }
    std::partial_sort(peaks.begin(), peaks.begin() + r, peaks.end(),
                      [&](Index a, Index b) { return sp.power[a] > sp.power[b]; });

    std::vector<double> angles;
    for (Index j = 0; j < r; ++j)
    {
        const Index i   = peaks[static_cast<std::size_t>(j)];
        const double y0 = 10.0 * std::log10(sp.power[i - 1]);
        const double y1 = 10.0 * std::log10(sp.power[i]);
        const double y2 = 10.0 * std::log10(sp.power[i + 1]);
        const double den = y0 - 2.0 * y1 + y2;
        double delta = den < 0.0 ? 0.5 * (y0 - y2) / den : 0.0;
        delta = std::clamp(delta, -0.5, 0.5);
        angles.push_back(sp.grid_deg[i] + delta * opts.grid_step_deg);
    }
    std::sort(angles.begin(), angles.end());
    return angles;
}

} // namespace scalht
