#include "spatialmut/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "spatialmut/errors.hpp"
#include "spatialmut/rng.hpp"

namespace spatialmut {

namespace {

void check_torus(int dim, double side) {
    if (dim < 1 || dim > 3) throw InvalidArgumentError("dimension must be 1, 2 or 3, got " + std::to_string(dim));
    if (!(side > 0.0) || !std::isfinite(side)) throw InvalidArgumentError("side length must be positive and finite");
}

// 99% two-sided normal quantile.
constexpr double kZ99 = 2.5758293035489004;

}  // namespace

double wrap_coordinate(double x, double side) noexcept {
    double r = std::fmod(x, side);
    if (r < 0.0) r += side;
    if (r >= side) r = 0.0;  // -tiny + side rounds up to side
    return r;
}

TorusPoint::TorusPoint(std::span<const double> coords, double side) : side_(side) {
    check_torus(static_cast<int>(coords.size()), side);
    dim_ = static_cast<int>(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords_[i] = wrap_coordinate(coords[i], side);
}

TorusPoint TorusPoint::translated(std::span<const double> offset) const {
    if (static_cast<int>(offset.size()) != dim_) throw DimensionMismatchError("offset dimension differs from point dimension");
    std::array<double, 3> shifted{};
    for (int i = 0; i < dim_; ++i) shifted[i] = coords_[i] + offset[i];
    return TorusPoint(std::span<const double>(shifted.data(), static_cast<std::size_t>(dim_)), side_);
}

double torus_distance(const TorusPoint& x, const TorusPoint& y) {
    if (x.dim() != y.dim() || x.side() != y.side()) {
        throw DimensionMismatchError("points live on different tori");
    }
    const double side = x.side();
    double sum = 0.0;
    for (int i = 0; i < x.dim(); ++i) {
        const double delta = std::abs(x[i] - y[i]);
        const double wrapped = std::min(delta, side - delta);
        sum += wrapped * wrapped;
    }
    return std::sqrt(sum);
}

double max_torus_distance(int dim, double side) noexcept { return std::sqrt(static_cast<double>(dim)) * side / 2.0; }

// ---------------------------------------------------------------------------
// GridIndex

GridIndex::GridIndex(double side, int dim, int cells_per_axis) : side_(side), dim_(dim), cells_(cells_per_axis) {
    check_torus(dim, side);
    if (cells_per_axis < 1) throw InvalidArgumentError("cells_per_axis must be positive");
    width_ = side / cells_;
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(cells_);
    buckets_.resize(total);
}

GridIndex GridIndex::snapshot(std::span<const MutationEvent> log, double t, double alpha, int cells_per_axis) {
    if (log.empty()) return GridIndex(1.0, 1, 1);
    const auto& first = log.front().origin;
    GridIndex index(first.side(), first.dim(), cells_per_axis);
    for (std::size_t id = 0; id < log.size(); ++id) {
        const auto& ev = log[id];
        if (!ev.accepted || ev.time > t) continue;
        index.insert(static_cast<std::uint32_t>(id), ev.origin, alpha * (t - ev.time));
    }
    return index;
}

bool GridIndex::AxisRange::contains(int cell, int cells) const noexcept {
    if (count >= cells) return true;
    long long offset = (cell - first) % cells;
    if (offset < 0) offset += cells;
    return offset < count;
}

bool GridIndex::covers_everything(double radius) const noexcept {
    return 2.0 * radius + 2.0 * width_ >= side_ || cells_ <= 3;
}

std::array<GridIndex::AxisRange, 3> GridIndex::box(const TorusPoint& center, double radius) const {
    std::array<AxisRange, 3> ranges{};
    const bool full = covers_everything(radius);
    for (int i = 0; i < dim_; ++i) {
        if (full) {
            ranges[i] = {0, cells_};
            continue;
        }
        const long long lo = static_cast<long long>(std::floor((center[i] - radius) / width_)) - 1;
        const long long hi = static_cast<long long>(std::floor((center[i] + radius) / width_)) + 1;
        const long long count = hi - lo + 1;
        ranges[i] = {lo, static_cast<int>(std::min<long long>(count, cells_))};
    }
    return ranges;
}

std::size_t GridIndex::cell_of(const TorusPoint& x) const noexcept {
    std::size_t flat = 0;
    for (int i = dim_ - 1; i >= 0; --i) {
        const int c = std::min(cells_ - 1, static_cast<int>(x[i] / width_));
        flat = flat * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(c);
    }
    return flat;
}

template <typename Visit>
void GridIndex::for_each_cell(const std::array<AxisRange, 3>& ranges, Visit&& visit) const {
    std::array<int, 3> step{0, 0, 0};
    auto axis_cell = [&](int axis) {
        long long c = (ranges[axis].first + step[axis]) % cells_;
        if (c < 0) c += cells_;
        return static_cast<int>(c);
    };
    while (true) {
        std::array<int, 3> cell{0, 0, 0};
        std::size_t flat = 0;
        for (int i = dim_ - 1; i >= 0; --i) {
            cell[i] = axis_cell(i);
            flat = flat * static_cast<std::size_t>(cells_) + static_cast<std::size_t>(cell[i]);
        }
        visit(flat, cell);
        int axis = 0;
        while (axis < dim_) {
            if (++step[axis] < ranges[axis].count) break;
            step[axis] = 0;
            ++axis;
        }
        if (axis == dim_) return;
    }
}

void GridIndex::insert(std::uint32_t id, const TorusPoint& center, double radius) {
    for_each_cell(box(center, radius), [&](std::size_t flat, const std::array<int, 3>&) { buckets_[flat].push_back(id); });
}

void GridIndex::grow(std::uint32_t id, const TorusPoint& center, double old_radius, double new_radius) {
    const auto old_box = box(center, old_radius);
    for_each_cell(box(center, new_radius), [&](std::size_t flat, const std::array<int, 3>& cell) {
        bool inside_old = true;
        for (int i = 0; i < dim_ && inside_old; ++i) inside_old = old_box[i].contains(cell[i], cells_);
        if (!inside_old) buckets_[flat].push_back(id);
    });
}

std::span<const std::uint32_t> GridIndex::candidates(const TorusPoint& x) const {
    if (x.dim() != dim_ || x.side() != side_) throw DimensionMismatchError("query point lives on a different torus");
    return buckets_[cell_of(x)];
}

// ---------------------------------------------------------------------------

int covered_level(const TorusPoint& x, double t, std::span<const MutationEvent> log, double alpha,
                  const GridIndex* index) {
    int best = 0;
    auto consider = [&](const MutationEvent& ev) {
        if (!ev.accepted || ev.time > t || ev.mtype <= best) return;
        if (torus_distance(x, ev.origin) <= alpha * (t - ev.time)) best = ev.mtype;
    };
    if (index != nullptr && !log.empty()) {
        for (auto id : index->candidates(x)) consider(log[id]);
    } else {
        for (const auto& ev : log) consider(ev);
    }
    return best;
}

// ---------------------------------------------------------------------------
// GrowingBallIndex

GrowingBallIndex::GrowingBallIndex(double side, int dim, double alpha, int cells_per_axis)
    : grid_(side, dim, cells_per_axis), alpha_(alpha) {
    if (!(alpha > 0.0)) throw InvalidArgumentError("spread rate must be positive");
}

void GrowingBallIndex::push_expiry(std::uint32_t id) {
    const double r = registered_radius_[id];
    if (grid_.covers_everything(r)) return;
    expiries_.push_back({events_[id].time + r / alpha_, id});
    std::push_heap(expiries_.begin(), expiries_.end(), std::greater<>{});
}

void GrowingBallIndex::add(const MutationEvent& event) {
    const auto id = static_cast<std::uint32_t>(events_.size());
    events_.push_back(event);
    const double r = grid_.cell_width();
    registered_radius_.push_back(r);
    grid_.insert(id, event.origin, r);
    push_expiry(id);
}

void GrowingBallIndex::advance(double t) {
    while (!expiries_.empty() && expiries_.front().time < t) {
        std::pop_heap(expiries_.begin(), expiries_.end(), std::greater<>{});
        const auto id = expiries_.back().id;
        expiries_.pop_back();
        const auto& ev = events_[id];
        const double old_r = registered_radius_[id];
        double new_r = 2.0 * old_r;
        while (ev.time + new_r / alpha_ < t) new_r *= 2.0;
        grid_.grow(id, ev.origin, old_r, new_r);
        registered_radius_[id] = new_r;
        push_expiry(id);
    }
}

int GrowingBallIndex::level(const TorusPoint& x, double t) {
    advance(t);
    int best = 0;
    for (auto id : grid_.candidates(x)) {
        const auto& ev = events_[id];
        if (ev.mtype <= best || ev.time > t) continue;
        if (torus_distance(x, ev.origin) <= alpha_ * (t - ev.time)) best = ev.mtype;
    }
    return best;
}

// ---------------------------------------------------------------------------
// union_volume

namespace {

VolumeEstimate exact_union_length(std::span<const Ball> balls, double side) {
    std::vector<std::pair<double, double>> pieces;
    pieces.reserve(2 * balls.size());
    for (const auto& b : balls) {
        if (2.0 * b.radius >= side) return {side, 0.0};
        const double lo = b.center[0] - b.radius;
        const double hi = b.center[0] + b.radius;
        if (lo < 0.0) {
            pieces.emplace_back(0.0, hi);
            pieces.emplace_back(lo + side, side);
        } else if (hi > side) {
            pieces.emplace_back(lo, side);
            pieces.emplace_back(0.0, hi - side);
        } else {
            pieces.emplace_back(lo, hi);
        }
    }
    std::sort(pieces.begin(), pieces.end());
    double total = 0.0;
    double run_lo = 0.0;
    double run_hi = -1.0;
    bool open = false;
    for (const auto& [lo, hi] : pieces) {
        if (open && lo <= run_hi) {
            run_hi = std::max(run_hi, hi);
            continue;
        }
        if (open) total += run_hi - run_lo;
        run_lo = lo;
        run_hi = hi;
        open = true;
    }
    if (open) total += run_hi - run_lo;
    return {std::clamp(total, 0.0, side), 0.0};
}

VolumeEstimate monte_carlo_union(std::span<const Ball> balls, double side, int dim, const MonteCarloVolume& mc) {
    if (mc.samples < 1) throw InvalidArgumentError("Monte Carlo volume needs at least one sample");
    const double volume = std::pow(side, dim);
    if (balls.empty()) return {0.0, 0.0};

    GridIndex index(side, dim);
    for (std::size_t i = 0; i < balls.size(); ++i) index.insert(static_cast<std::uint32_t>(i), balls[i].center, balls[i].radius);
    Substream rng({mc.seed, 0, 0, StreamPurpose::VolumeSampling});

    std::uint64_t hits = 0;
    std::uint64_t total = 0;
    std::array<double, 3> coords{};
    auto test = [&] {
        const TorusPoint p(std::span<const double>(coords.data(), static_cast<std::size_t>(dim)), side);
        for (auto id : index.candidates(p)) {
            if (balls[id].contains(p)) {
                ++hits;
                break;
            }
        }
        ++total;
    };

    if (mc.stratified) {
        std::uint64_t per_axis = 1;
        auto power = [&](std::uint64_t q) {
            std::uint64_t r = 1;
            for (int i = 0; i < dim; ++i) r *= q;
            return r;
        };
        while (power(per_axis) < mc.samples) ++per_axis;
        const double stratum = side / static_cast<double>(per_axis);
        std::array<std::uint64_t, 3> cell{0, 0, 0};
        while (true) {
            for (int i = 0; i < dim; ++i) coords[i] = (static_cast<double>(cell[i]) + rng.uniform()) * stratum;
            test();
            int axis = 0;
            while (axis < dim) {
                if (++cell[axis] < per_axis) break;
                cell[axis] = 0;
                ++axis;
            }
            if (axis == dim) break;
        }
    } else {
        for (std::uint64_t n = 0; n < mc.samples; ++n) {
            for (int i = 0; i < dim; ++i) coords[i] = rng.uniform() * side;
            test();
        }
    }
    const double p = static_cast<double>(hits) / static_cast<double>(total);
    return {volume * p, kZ99 * volume * std::sqrt(p * (1.0 - p) / static_cast<double>(total))};
}

}  // namespace

VolumeEstimate union_volume(std::span<const Ball> balls, double side, int dim, const VolumeMethod& method) {
    check_torus(dim, side);
    const double reach = max_torus_distance(dim, side);
    for (const auto& b : balls) {
        if (b.center.dim() != dim || b.center.side() != side) throw DimensionMismatchError("ball lives on a different torus");
        if (b.radius < 0.0) throw InvalidArgumentError("ball radius must be nonnegative");
    }
    for (const auto& b : balls) {
        if (b.radius >= reach) return {std::pow(side, dim), 0.0};
    }
    if (std::holds_alternative<ExactOneDim>(method)) {
        if (dim != 1) throw UnsupportedMethodError("exact union volume is only available in one dimension");
        return exact_union_length(balls, side);
    }
    return monte_carlo_union(balls, side, dim, std::get<MonteCarloVolume>(method));
}

}  // namespace spatialmut
