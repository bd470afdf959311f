#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace contagion {

/// Raised for invalid user-supplied configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Norm : std::uint8_t { L1, Linf };

struct Site {
    std::vector<int> coords;

    friend bool operator==(const Site&, const Site&) = default;
    friend auto operator<=>(const Site&, const Site&) = default;
};

/// Periodic hypercubic lattice of side L in d dimensions.
///
/// Sites are addressed either by a `Site` (coordinates reduced mod L) or by a
/// flat index, axis 0 varying fastest. Directions are numbered 0..2d-1 with
/// direction 2a stepping +1 along axis a and 2a+1 stepping -1.
class TorusLattice {
public:
    TorusLattice(int dim, int side);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int side() const noexcept { return side_; }
    [[nodiscard]] std::size_t site_count() const noexcept { return site_count_; }
    [[nodiscard]] int direction_count() const noexcept { return 2 * dim_; }

    [[nodiscard]] Site wrap(std::vector<int> coords) const;
    [[nodiscard]] std::size_t index(const Site& site) const;
    [[nodiscard]] Site site(std::size_t index) const;
    [[nodiscard]] bool contains(const Site& site) const noexcept;

    /// Neighbor of a flat index in direction `dir` (precomputed table).
    [[nodiscard]] std::uint32_t neighbor(std::size_t index, int dir) const noexcept {
        return neighbor_table_[index * static_cast<std::size_t>(2 * dim_) + static_cast<std::size_t>(dir)];
    }

    /// Center site (L/2, ..., L/2); the epidemic starts here.
    [[nodiscard]] std::size_t center_index() const;

    /// Throws ConfigError unless L >= 2k+2, so that a radius-k ball never wraps onto itself.
    void require_radius(int k) const;

    friend bool operator==(const TorusLattice& a, const TorusLattice& b) noexcept {
        return a.dim_ == b.dim_ && a.side_ == b.side_;
    }

private:
    int dim_;
    int side_;
    std::size_t site_count_;
    std::vector<std::uint32_t> neighbor_table_;
};

struct RegionSpec {
    Site home;
    int k = 1;
    Norm norm = Norm::L1;
};

/// Periodic distance; throws std::invalid_argument on dimension mismatch.
[[nodiscard]] int torus_distance(const Site& a, const Site& b, const TorusLattice& lattice, Norm norm);

[[nodiscard]] std::vector<Site> neighbors(const Site& x, const TorusLattice& lattice);

[[nodiscard]] bool admissible(const Site& pos, const RegionSpec& region, const TorusLattice& lattice);

/// Neighbors of `pos` that stay inside `region`. Throws std::logic_error if `pos` itself is outside.
[[nodiscard]] std::vector<Site> accessible_moves(const Site& pos, const RegionSpec& region,
                                                 const TorusLattice& lattice);

/// v_k(d): number of points of Z^d within L1 distance k of the origin, center included.
/// Throws std::range_error if the count does not fit in 64 bits.
[[nodiscard]] std::uint64_t l1_ball_size(int d, int k);

/// Offsets of a radius-k ball in Z^d together with the allowed nearest-neighbor moves
/// from each offset. The engine keeps every particle's displacement from home as an
/// index into this table, so a jump is a table lookup.
class RegionGeometry {
public:
    struct Move {
        std::uint8_t dir;      // lattice direction
        std::uint32_t target;  // offset index after the move
    };

    RegionGeometry(int dim, int k, Norm norm);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int radius() const noexcept { return k_; }
    [[nodiscard]] Norm norm() const noexcept { return norm_; }
    [[nodiscard]] std::size_t size() const noexcept { return offsets_.size() / static_cast<std::size_t>(dim_); }
    [[nodiscard]] std::uint32_t center() const noexcept { return center_; }

    [[nodiscard]] std::span<const int> offset(std::size_t i) const noexcept {
        return {offsets_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    [[nodiscard]] std::span<const Move> moves(std::size_t i) const noexcept {
        return {moves_.data() + move_begin_[i], move_begin_[i + 1] - move_begin_[i]};
    }

private:
    int dim_;
    int k_;
    Norm norm_;
    std::uint32_t center_ = 0;
    std::vector<int> offsets_;
    std::vector<Move> moves_;
    std::vector<std::size_t> move_begin_;
};

}  // namespace contagion
