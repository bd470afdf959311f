#include "contagion/lattice.hpp"
#include "contagion/rng.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <numeric>

namespace contagion {

namespace {

int axis_distance(int a, int b, int side) {
    const int diff = std::abs(a - b);
    return std::min(diff, side - diff);
}

int norm_of(std::span<const int> v, Norm norm) {
    int acc = 0;
    for (int x : v) {
        acc = norm == Norm::L1 ? acc + std::abs(x) : std::max(acc, std::abs(x));
    }
    return acc;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw std::range_error("l1_ball_size: count overflows 64 bits");
    return out;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw std::range_error("l1_ball_size: count overflows 64 bits");
    return out;
}

// C(n, r) with overflow detection; exact because each partial product is a binomial.
std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
    if (r > n) return 0;
    r = std::min(r, n - r);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= r; ++i) {
        const uint128 next = static_cast<uint128>(result) * (n - r + i) / i;
        if (next > std::numeric_limits<std::uint64_t>::max()) {
            throw std::range_error("l1_ball_size: count overflows 64 bits");
        }
        result = static_cast<std::uint64_t>(next);
    }
    return result;
}

}  // namespace

TorusLattice::TorusLattice(int dim, int side) : dim_(dim), side_(side), site_count_(1) {
    if (dim < 1) throw ConfigError("lattice dimension must be >= 1");
    if (side < 3) throw ConfigError("lattice side must be >= 3 so that the 2d neighbors are distinct");
    for (int a = 0; a < dim; ++a) {
        if (site_count_ > std::numeric_limits<std::uint32_t>::max() / static_cast<std::size_t>(side)) {
            throw ConfigError("lattice has too many sites");
        }
        site_count_ *= static_cast<std::size_t>(side);
    }
    neighbor_table_.resize(site_count_ * static_cast<std::size_t>(2 * dim));
    std::size_t stride = 1;
    for (int a = 0; a < dim; ++a) {
        for (std::size_t i = 0; i < site_count_; ++i) {
            const auto c = static_cast<int>((i / stride) % static_cast<std::size_t>(side));
            const std::size_t base = i - static_cast<std::size_t>(c) * stride;
            const auto up = static_cast<std::size_t>((c + 1) % side);
            const auto down = static_cast<std::size_t>((c + side - 1) % side);
            neighbor_table_[i * static_cast<std::size_t>(2 * dim) + static_cast<std::size_t>(2 * a)] =
                static_cast<std::uint32_t>(base + up * stride);
            neighbor_table_[i * static_cast<std::size_t>(2 * dim) + static_cast<std::size_t>(2 * a + 1)] =
                static_cast<std::uint32_t>(base + down * stride);
        }
        stride *= static_cast<std::size_t>(side);
    }
}

Site TorusLattice::wrap(std::vector<int> coords) const {
    if (static_cast<int>(coords.size()) != dim_) throw std::invalid_argument("site dimension mismatch");
    for (int& c : coords) c = ((c % side_) + side_) % side_;
    return Site{std::move(coords)};
}

bool TorusLattice::contains(const Site& site) const noexcept {
    if (static_cast<int>(site.coords.size()) != dim_) return false;
    return std::all_of(site.coords.begin(), site.coords.end(), [&](int c) { return c >= 0 && c < side_; });
}

std::size_t TorusLattice::index(const Site& site) const {
    if (!contains(site)) throw std::invalid_argument("site is not a reduced coordinate vector of this lattice");
    std::size_t idx = 0;
    for (int a = dim_ - 1; a >= 0; --a) {
        idx = idx * static_cast<std::size_t>(side_) + static_cast<std::size_t>(site.coords[static_cast<std::size_t>(a)]);
    }
    return idx;
}

Site TorusLattice::site(std::size_t index) const {
    if (index >= site_count_) throw std::out_of_range("site index out of range");
    Site s;
    s.coords.resize(static_cast<std::size_t>(dim_));
    for (int a = 0; a < dim_; ++a) {
        s.coords[static_cast<std::size_t>(a)] = static_cast<int>(index % static_cast<std::size_t>(side_));
        index /= static_cast<std::size_t>(side_);
    }
    return s;
}

std::size_t TorusLattice::center_index() const {
    return index(Site{std::vector<int>(static_cast<std::size_t>(dim_), side_ / 2)});
}

void TorusLattice::require_radius(int k) const {
    if (k < 1) throw ConfigError("region radius k must be >= 1");
    if (side_ < 2 * k + 2) {
        throw ConfigError("lattice side L=" + std::to_string(side_) + " is below 2k+2=" + std::to_string(2 * k + 2));
    }
}

int torus_distance(const Site& a, const Site& b, const TorusLattice& lattice, Norm norm) {
    if (a.coords.size() != b.coords.size() || static_cast<int>(a.coords.size()) != lattice.dim()) {
        throw std::invalid_argument("torus_distance: dimension mismatch");
    }
    int acc = 0;
    for (std::size_t i = 0; i < a.coords.size(); ++i) {
        const int d = axis_distance(a.coords[i], b.coords[i], lattice.side());
        acc = norm == Norm::L1 ? acc + d : std::max(acc, d);
    }
    return acc;
}

std::vector<Site> neighbors(const Site& x, const TorusLattice& lattice) {
    const std::size_t idx = lattice.index(x);
    std::vector<Site> out;
    out.reserve(static_cast<std::size_t>(lattice.direction_count()));
    for (int dir = 0; dir < lattice.direction_count(); ++dir) out.push_back(lattice.site(lattice.neighbor(idx, dir)));
    return out;
}

bool admissible(const Site& pos, const RegionSpec& region, const TorusLattice& lattice) {
    return torus_distance(pos, region.home, lattice, region.norm) <= region.k;
}

std::vector<Site> accessible_moves(const Site& pos, const RegionSpec& region, const TorusLattice& lattice) {
    if (!admissible(pos, region, lattice)) throw std::logic_error("accessible_moves: position outside its region");
    std::vector<Site> out;
    for (Site& n : neighbors(pos, lattice)) {
        if (admissible(n, region, lattice)) out.push_back(std::move(n));
    }
    return out;
}

std::uint64_t l1_ball_size(int d, int k) {
    if (d < 1 || k < 0) throw std::invalid_argument("l1_ball_size: need d >= 1 and k >= 0");
    // v_k(d) = sum_i 2^i C(d,i) C(k,i): choose i nonzero axes, their signs, and a
    // composition of at most k into i positive parts.
    std::uint64_t total = 0;
    for (int i = 0; i <= std::min(d, k); ++i) {
        if (i >= 64) throw std::range_error("l1_ball_size: count overflows 64 bits");
        std::uint64_t term = checked_mul(std::uint64_t{1} << i, binomial(static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(i)));
        term = checked_mul(term, binomial(static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i)));
        total = checked_add(total, term);
    }
    return total;
}

RegionGeometry::RegionGeometry(int dim, int k, Norm norm) : dim_(dim), k_(k), norm_(norm) {
    if (dim < 1 || k < 0) throw ConfigError("region geometry needs d >= 1 and k >= 0");
    const int width = 2 * k + 1;
    std::size_t cells = 1;
    for (int a = 0; a < dim; ++a) {
        cells *= static_cast<std::size_t>(width);
        if (cells > (std::size_t{1} << 26)) throw ConfigError("region too large (reduce d or k)");
    }
    // Dense box index -> offset index.
    std::vector<std::int64_t> slot(cells, -1);
    std::vector<int> v(static_cast<std::size_t>(dim));
    for (std::size_t cell = 0; cell < cells; ++cell) {
        std::size_t rest = cell;
        for (int a = 0; a < dim; ++a) {
            v[static_cast<std::size_t>(a)] = static_cast<int>(rest % static_cast<std::size_t>(width)) - k;
            rest /= static_cast<std::size_t>(width);
        }
        if (norm_of(v, norm) <= k) {
            slot[cell] = static_cast<std::int64_t>(size());
            if (norm_of(v, Norm::Linf) == 0) center_ = static_cast<std::uint32_t>(size());
            offsets_.insert(offsets_.end(), v.begin(), v.end());
        }
    }
    auto cell_of = [&](std::span<const int> off) {
        std::size_t cell = 0;
        for (int a = dim - 1; a >= 0; --a) {
            cell = cell * static_cast<std::size_t>(width) + static_cast<std::size_t>(off[static_cast<std::size_t>(a)] + k);
        }
        return cell;
    };
    move_begin_.push_back(0);
    for (std::size_t i = 0; i < size(); ++i) {
        std::vector<int> w(offset(i).begin(), offset(i).end());
        for (int dir = 0; dir < 2 * dim; ++dir) {
            const auto axis = static_cast<std::size_t>(dir / 2);
            w[axis] += (dir % 2 == 0) ? 1 : -1;
            if (norm_of(w, norm) <= k) {
                moves_.push_back(Move{static_cast<std::uint8_t>(dir), static_cast<std::uint32_t>(slot[cell_of(w)])});
            }
            w[axis] -= (dir % 2 == 0) ? 1 : -1;
        }
        move_begin_.push_back(moves_.size());
    }
}

}  // namespace contagion
