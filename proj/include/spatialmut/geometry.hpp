#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <variant>
#include <vector>

namespace spatialmut {

/// A point of the torus [0, L)^d, d in {1, 2, 3}. Coordinates are reduced
/// into [0, L) on construction, so points that differ by multiples of L
/// compare equal.
class TorusPoint {
public:
    TorusPoint() = default;
    TorusPoint(std::span<const double> coords, double side);
    TorusPoint(std::initializer_list<double> coords, double side)
        : TorusPoint(std::span<const double>(coords.begin(), coords.size()), side) {}

    int dim() const noexcept { return dim_; }
    double side() const noexcept { return side_; }
    double operator[](int axis) const noexcept { return coords_[static_cast<std::size_t>(axis)]; }
    std::span<const double> coords() const noexcept {
        return {coords_.data(), static_cast<std::size_t>(dim_)};
    }

    /// Shift by `offset` (length dim()), wrapping around.
    TorusPoint translated(std::span<const double> offset) const;

    friend bool operator==(const TorusPoint&, const TorusPoint&) = default;

private:
    std::array<double, 3> coords_{};
    double side_ = 1.0;
    int dim_ = 1;
};

/// Reduce x into [0, side).
double wrap_coordinate(double x, double side) noexcept;

/// sqrt(sum_i min(|x_i - y_i|, L - |x_i - y_i|)^2). Throws
/// DimensionMismatchError when the points live on different tori.
double torus_distance(const TorusPoint& x, const TorusPoint& y);

/// Largest possible distance on the torus, sqrt(d) * L / 2.
double max_torus_distance(int dim, double side) noexcept;

struct Ball {
    TorusPoint center;
    double radius = 0.0;

    bool contains(const TorusPoint& x) const { return torus_distance(center, x) <= radius; }
};

/// An accepted (or rejected) candidate mutation: type `mtype` appearing at
/// `origin` at `time`. Accepted events seed a ball of radius alpha*(t - time).
struct MutationEvent {
    int mtype = 1;
    TorusPoint origin;
    double time = 0.0;
    bool accepted = true;
    friend bool operator==(const MutationEvent&, const MutationEvent&) = default;
};

/// Uniform grid over the torus with `cells_per_axis` cells per axis. Each
/// registered id is listed in every cell touched by the axis-aligned
/// bounding box of its ball (padded by one cell against rounding), so a
/// point's own cell lists every ball that can contain it.
class GridIndex {
public:
    static constexpr int kDefaultCellsPerAxis = 16;

    GridIndex(double side, int dim, int cells_per_axis = kDefaultCellsPerAxis);

    /// Index over the accepted events of `log`, with ball radii as of time t.
    /// Ids are positions in `log`.
    static GridIndex snapshot(std::span<const MutationEvent> log, double t, double alpha,
                              int cells_per_axis = kDefaultCellsPerAxis);

    void insert(std::uint32_t id, const TorusPoint& center, double radius);

    /// Extends the registration of `id` from radius `old_radius` to
    /// `new_radius`, touching only newly covered cells.
    void grow(std::uint32_t id, const TorusPoint& center, double old_radius, double new_radius);

    std::span<const std::uint32_t> candidates(const TorusPoint& x) const;

    int cells_per_axis() const noexcept { return cells_; }
    double cell_width() const noexcept { return width_; }
    /// True once a ball of this radius is registered in every cell.
    bool covers_everything(double radius) const noexcept;

private:
    struct AxisRange {
        long long first = 0;
        int count = 0;  // == cells_ means the full axis
        bool contains(int cell, int cells) const noexcept;
    };

    std::array<AxisRange, 3> box(const TorusPoint& center, double radius) const;
    std::size_t cell_of(const TorusPoint& x) const noexcept;
    template <typename Visit>
    void for_each_cell(const std::array<AxisRange, 3>& box, Visit&& visit) const;

    double side_;
    int dim_;
    int cells_;
    double width_;
    std::vector<std::vector<std::uint32_t>> buckets_;
};

/// Highest mutation type whose ball covers x at time t, or 0. Only accepted
/// events with time <= t take part. `index`, when given, must be a snapshot of
/// `log` at time t; the answer is identical either way.
int covered_level(const TorusPoint& x, double t, std::span<const MutationEvent> log, double alpha,
                  const GridIndex* index = nullptr);

/// Incremental variant of the grid index for a simulation whose query times
/// never decrease. Each ball is registered with a radius bound that doubles
/// whenever the ball outgrows it.
class GrowingBallIndex {
public:
    GrowingBallIndex(double side, int dim, double alpha,
                     int cells_per_axis = GridIndex::kDefaultCellsPerAxis);

    /// `event` must be accepted and not earlier than any previous query time.
    void add(const MutationEvent& event);

    /// covered_level at (x, t). t must be >= every previous query time.
    int level(const TorusPoint& x, double t);

    std::span<const MutationEvent> events() const noexcept { return events_; }

private:
    struct Expiry {
        double time;
        std::uint32_t id;
        bool operator>(const Expiry& other) const noexcept { return time > other.time; }
    };

    void advance(double t);
    void push_expiry(std::uint32_t id);

    GridIndex grid_;
    double alpha_;
    std::vector<MutationEvent> events_;
    std::vector<double> registered_radius_;
    std::vector<Expiry> expiries_;  // min-heap
};

/// Exact union length in d = 1.
struct ExactOneDim {};

/// Hit-or-miss estimate with `samples` points. Stratified jittered sampling
/// (ceil(samples^(1/d)) strata per axis) unless `stratified` is false.
struct MonteCarloVolume {
    std::uint64_t samples = 100000;
    std::uint64_t seed = 0;
    bool stratified = true;
};

using VolumeMethod = std::variant<ExactOneDim, MonteCarloVolume>;

struct VolumeEstimate {
    double estimate = 0.0;
    double half_width = 0.0;  // 99% binomial half-width; 0 for exact results
};

/// Volume of the union of balls on the torus. Every ball must live on the
/// same torus; an empty list has volume 0.
VolumeEstimate union_volume(std::span<const Ball> balls, double side, int dim,
                            const VolumeMethod& method);

}  // namespace spatialmut
