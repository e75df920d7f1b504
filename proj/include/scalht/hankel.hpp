///
/// \file hankel.hpp
///
/// Hankel lifting of an `s x n` signal matrix into an `n1 x n2 x s` tensor,
/// the skew-diagonal reweighting, and the observation model.
///
/// With `w_a` the number of pairs `(i, j)` with `i + j = a`:
///
///  - `H(X)(i, j, k) = X(k, i + j)`
///  - `D(X)(:, a)    = sqrt(w_a) X(:, a)`
///  - `G = H D^{-1}`, an isometry whose adjoint averages skew-diagonals with
///    weight `1 / sqrt(w_a)`.
///
#ifndef SCALHT_HANKEL_HPP
#define SCALHT_HANKEL_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <scalht/common.hpp>
#include <scalht/tensor.hpp>

namespace scalht
{

///
/// ### HankelSpace
///
/// Dimensions `(n1, n2, s)` of the lifted space and the skew-diagonal weights.
///
class HankelSpace
{
public:
    HankelSpace() = default;

    HankelSpace(Index n1, Index n2, Index s) : m_n1(n1), m_n2(n2), m_s(s)
    {
        detail::require(n1 >= 1 && n2 >= 1 && s >= 1,
                        "Hankel space dims must be positive");
        const Index n = n1 + n2 - 1;
        m_w.resize(n);
        m_sqrt_w.resize(n);
        m_inv_sqrt_w.resize(n);
        const Index lo = std::min(n1, n2);
        for (Index a = 0; a < n; ++a)
        {
            // Pairs (i, a - i) with 0 <= i < n1 and 0 <= a - i < n2.
            const Index count = std::min({a + 1, n - a, lo});
            m_w[a]          = static_cast<double>(count);
            m_sqrt_w[a]     = std::sqrt(m_w[a]);
            m_inv_sqrt_w[a] = 1.0 / m_sqrt_w[a];
        }
    }

    Index n1() const { return m_n1; }
    Index n2() const { return m_n2; }
    Index s() const { return m_s; }
    Index n() const { return m_n1 + m_n2 - 1; }

    /// Number of entries of the lifted tensor.
    Index lifted_size() const { return m_n1 * m_n2 * m_s; }

    const Eigen::VectorXd& weights() const { return m_w; }
    const Eigen::VectorXd& sqrt_weights() const { return m_sqrt_w; }
    const Eigen::VectorXd& inv_sqrt_weights() const { return m_inv_sqrt_w; }

    /// `c_s = max(n / n1, n / n2)`.
    double c_s() const
    {
        const double nn = static_cast<double>(n());
        return std::max(nn / static_cast<double>(m_n1),
                        nn / static_cast<double>(m_n2));
    }

    typename Tensor3<cdouble>::Dims lifted_dims() const { return {m_n1, m_n2, m_s}; }

    bool operator==(const HankelSpace& o) const
    {
        return m_n1 == o.m_n1 && m_n2 == o.m_n2 && m_s == o.m_s;
    }

private:
    Index m_n1 = 0;
    Index m_n2 = 0;
    Index m_s  = 0;
    Eigen::VectorXd m_w;
    Eigen::VectorXd m_sqrt_w;
    Eigen::VectorXd m_inv_sqrt_w;
};

inline HankelSpace make_space(Index n1, Index n2, Index s)
{
    return HankelSpace(n1, n2, s);
}

/// Balanced split of a signal length: `n1 = ceil((n + 1) / 2)`, `n2 = n + 1 - n1`.
inline std::pair<Index, Index> split_n(Index n)
{
    detail::require(n >= 1, "split_n: signal length must be positive");
    const Index n1 = (n + 2) / 2;
    return {n1, n + 1 - n1};
}

/// Space for signals of length `n` with `s` channels, using `split_n`.
inline HankelSpace make_space_for(Index n, Index s)
{
    const auto [n1, n2] = split_n(n);
    return HankelSpace(n1, n2, s);
}

namespace detail
{

template <typename Derived>
void check_signal_shape(const Eigen::MatrixBase<Derived>& x,
                        const HankelSpace& space)
{
    require(x.rows() == space.s() && x.cols() == space.n(),
            "signal matrix must be s x n for the Hankel space");
}

template <typename Scalar>
void check_lifted_shape(const Tensor3<Scalar>& t, const HankelSpace& space)
{
    require(t.dims() == space.lifted_dims(),
            "tensor dims must be (n1, n2, s) for the Hankel space");
}

} // namespace detail

/// Unnormalized lift `H(X)(i, j, k) = X(k, i + j)`.
template <typename Derived>
Tensor3<typename Derived::Scalar> lift_H(const Eigen::MatrixBase<Derived>& x,
                                         const HankelSpace& space)
{
    detail::check_signal_shape(x, space);
    Tensor3<typename Derived::Scalar> t(space.lifted_dims());
    for (Index k = 0; k < space.s(); ++k)
        for (Index j = 0; j < space.n2(); ++j)
            for (Index i = 0; i < space.n1(); ++i)
                t(i, j, k) = x(k, i + j);
    return t;
}

enum class WeightDirection
{
    Forward, ///< multiply column a by sqrt(w_a)
    Inverse  ///< divide column a by sqrt(w_a)
};

/// Reweighting `D` (forward) or `D^{-1}` (inverse) on an `s x n` matrix.
template <typename Derived>
Matrix<typename Derived::Scalar>
weight_D(const Eigen::MatrixBase<Derived>& x, const HankelSpace& space,
         WeightDirection dir = WeightDirection::Forward)
{
    using Scalar = typename Derived::Scalar;
    detail::require(x.cols() == space.n(), "weight_D: column count must be n");
    const Eigen::VectorXd& scale = dir == WeightDirection::Forward
                                       ? space.sqrt_weights()
                                       : space.inv_sqrt_weights();
    return x * scale.cast<Scalar>().asDiagonal();
}

/// Normalized lift `G(X)(i, j, k) = X(k, i + j) / sqrt(w_{i+j})`.
template <typename Derived>
Tensor3<typename Derived::Scalar> lift_G(const Eigen::MatrixBase<Derived>& x,
                                         const HankelSpace& space)
{
    detail::check_signal_shape(x, space);
    return lift_H(weight_D(x, space, WeightDirection::Inverse), space);
}

/// Adjoint `G*(T)(k, a) = (1 / sqrt(w_a)) sum_{i + j = a} T(i, j, k)`.
template <typename Scalar>
Matrix<Scalar> adjoint_G(const Tensor3<Scalar>& t, const HankelSpace& space)
{
    detail::check_lifted_shape(t, space);
    Matrix<Scalar> out = Matrix<Scalar>::Zero(space.s(), space.n());
    for (Index k = 0; k < space.s(); ++k)
        for (Index j = 0; j < space.n2(); ++j)
            for (Index i = 0; i < space.n1(); ++i)
                out(k, i + j) += t(i, j, k);
    return weight_D(out, space, WeightDirection::Inverse);
}

///
/// One sampled location: measurement index `k` in [0, s) and time index `a`
/// in [0, n).
///
struct Cell
{
    Index k = 0;
    Index a = 0;

    friend bool operator==(const Cell& x, const Cell& y)
    {
        return x.k == y.k && x.a == y.a;
    }
    friend bool operator<(const Cell& x, const Cell& y)
    {
        return x.k < y.k || (x.k == y.k && x.a < y.a);
    }
};

enum class SamplingMode
{
    WithReplacement,
    WithoutReplacement
};

///
/// Draw `m` sample locations uniformly from the `s x n` grid.
///
/// \throw ConfigError  if `m < 1`, or `m > s * n` without replacement
///
inline std::vector<Cell> sample_observations(const HankelSpace& space, Index m,
                                             SamplingMode mode,
                                             std::uint64_t seed)
{
    const Index total = space.s() * space.n();
    detail::require_config(m >= 1, "number of samples must be at least 1");
    std::mt19937_64 rng(seed);
    std::vector<Cell> out;
    out.reserve(static_cast<std::size_t>(m));
    if (mode == SamplingMode::WithReplacement)
    {
        std::uniform_int_distribution<Index> pick(0, total - 1);
        for (Index i = 0; i < m; ++i)
        {
            const Index id = pick(rng);
            out.push_back({id / space.n(), id % space.n()});
        }
        return out;
    }
    detail::require_config(m <= total,
                           "cannot draw more than s*n samples without replacement");
    std::vector<Index> ids(static_cast<std::size_t>(total));
    std::iota(ids.begin(), ids.end(), Index(0));
    // Partial Fisher-Yates: the first m slots become a uniform m-subset.
    for (Index i = 0; i < m; ++i)
    {
        std::uniform_int_distribution<Index> pick(i, total - 1);
        std::swap(ids[static_cast<std::size_t>(i)],
                  ids[static_cast<std::size_t>(pick(rng))]);
        const Index id = ids[static_cast<std::size_t>(i)];
        out.push_back({id / space.n(), id % space.n()});
    }
    return out;
}

///
/// ### ObservationSet
///
/// A multiset of sampled cells together with the observed signal values
/// `X(k, a)`. Duplicates are merged into unique cells with a multiplicity
/// count, sorted by `(k, a)`; this is also the storage order of `pattern()`.
///
/// The weighted observations used by the loss are `Y(k, a) = sqrt(w_a) X(k, a)`.
///
template <typename Scalar>
class ObservationSet
{
public:
    using RealScalar   = RealOf<Scalar>;
    using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

    ObservationSet() = default;

    /// Observe the entries of `x` (an `s x n` matrix) at `samples`.
    template <typename Derived>
    ObservationSet(const HankelSpace& space, std::vector<Cell> samples,
                   const Eigen::MatrixBase<Derived>& x)
        : m_space(space), m_samples(std::move(samples))
    {
        detail::check_signal_shape(x, space);
        m_values.resize(static_cast<Index>(m_samples.size()));
        for (std::size_t i = 0; i < m_samples.size(); ++i)
        {
            const Cell& c = m_samples[i];
            detail::require(c.k >= 0 && c.k < space.s() && c.a >= 0 &&
                                c.a < space.n(),
                            "sample index out of range");
            m_values[static_cast<Index>(i)] = x(c.k, c.a);
        }
        build_cells();
    }

    /// Build from per-sample values (aligned with `samples`). When a cell is
    /// sampled more than once its value is taken from the first occurrence.
    ObservationSet(const HankelSpace& space, std::vector<Cell> samples,
                   Vector<Scalar> values)
        : m_space(space), m_samples(std::move(samples)), m_values(std::move(values))
    {
        detail::require(m_values.size() == static_cast<Index>(m_samples.size()),
                        "observation values must align with samples");
        for (const Cell& c : m_samples)
        {
            detail::require(c.k >= 0 && c.k < space.s() && c.a >= 0 &&
                                c.a < space.n(),
                            "sample index out of range");
        }
        build_cells();
    }

    const HankelSpace& space() const { return m_space; }
    const std::vector<Cell>& samples() const { return m_samples; }
    const Vector<Scalar>& values() const { return m_values; }

    /// Number of samples m (duplicates counted).
    Index m() const { return static_cast<Index>(m_samples.size()); }
    bool empty() const { return m_samples.empty(); }

    /// Observation ratio `p = m / (s n)`.
    RealScalar p() const
    {
        return RealScalar(m()) / RealScalar(m_space.s() * m_space.n());
    }

    /// Number of distinct cells.
    Index unique_count() const { return static_cast<Index>(m_cells.size()); }
    const std::vector<Cell>& cells() const { return m_cells; }
    /// Multiplicity of each distinct cell.
    const Vector<RealScalar>& counts() const { return m_counts; }
    /// Observed `X` value of each distinct cell.
    const Vector<Scalar>& cell_values() const { return m_cell_values; }

    /// `s x n` sparse matrix with the distinct cells as its nonzero pattern
    /// (values zero). Entry `i` of `valuePtr()` corresponds to `cells()[i]`.
    const SparseMatrix& pattern() const { return m_pattern; }

    /// Sub-multiset made of samples `[begin, end)`.
    ObservationSet slice(Index begin, Index end) const
    {
        detail::require(0 <= begin && begin <= end && end <= m(),
                        "observation slice out of range");
        std::vector<Cell> s(m_samples.begin() + begin, m_samples.begin() + end);
        return ObservationSet(m_space, std::move(s),
                              Vector<Scalar>(m_values.segment(begin, end - begin)));
    }

private:
    void build_cells()
    {
        std::vector<Index> order(m_samples.size());
        std::iota(order.begin(), order.end(), Index(0));
        std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
            return m_samples[static_cast<std::size_t>(x)] <
                   m_samples[static_cast<std::size_t>(y)];
        });
        m_cells.clear();
        std::vector<RealScalar> counts;
        std::vector<Scalar> vals;
        for (Index idx : order)
        {
            const Cell& c = m_samples[static_cast<std::size_t>(idx)];
            if (!m_cells.empty() && m_cells.back() == c)
            {
                counts.back() += RealScalar(1);
                continue;
            }
            m_cells.push_back(c);
            counts.push_back(RealScalar(1));
            vals.push_back(m_values[idx]);
        }
        const Index u = static_cast<Index>(m_cells.size());
        m_counts      = Eigen::Map<Vector<RealScalar>>(counts.data(), u);
        m_cell_values = Eigen::Map<Vector<Scalar>>(vals.data(), u);

        std::vector<Eigen::Triplet<Scalar>> trip;
        trip.reserve(m_cells.size());
        for (const Cell& c : m_cells)
            trip.emplace_back(c.k, c.a, Scalar(0));
        m_pattern.resize(m_space.s(), m_space.n());
        m_pattern.setFromTriplets(trip.begin(), trip.end());
        m_pattern.makeCompressed();
        // Explicit zeros are kept, so valuePtr() lines up with m_cells.
        detail::require(m_pattern.nonZeros() == u,
                        "internal: observation pattern size mismatch");
    }

    HankelSpace m_space;
    std::vector<Cell> m_samples;
    Vector<Scalar> m_values;
    std::vector<Cell> m_cells;
    Vector<RealScalar> m_counts;
    Vector<Scalar> m_cell_values;
    SparseMatrix m_pattern;
};

///
/// Sampling projector `P_Omega(X) = sum_{(k, a) in Omega} X(k, a) e_k e_a^T`,
/// with multiplicities accumulating.
///
template <typename Scalar, typename Derived>
typename ObservationSet<Scalar>::SparseMatrix
project_obs(const Eigen::MatrixBase<Derived>& x, const ObservationSet<Scalar>& obs)
{
    detail::check_signal_shape(x, obs.space());
    auto out = obs.pattern();
    Scalar* v = out.valuePtr();
    const auto& cells = obs.cells();
    for (std::size_t i = 0; i < cells.size(); ++i)
    {
        v[i] = obs.counts()[static_cast<Index>(i)] * x(cells[i].k, cells[i].a);
    }
    return out;
}

/// Observed weighted values `Y(k, a) = sqrt(w_a) X(k, a)` per distinct cell.
template <typename Scalar>
Vector<Scalar> observed_Y(const ObservationSet<Scalar>& obs)
{
    Vector<Scalar> y(obs.unique_count());
    const auto& cells = obs.cells();
    const auto& sw    = obs.space().sqrt_weights();
    for (Index i = 0; i < y.size(); ++i)
        y[i] = sw[cells[static_cast<std::size_t>(i)].a] * obs.cell_values()[i];
    return y;
}

} // namespace scalht

#endif /* SCALHT_HANKEL_HPP */
