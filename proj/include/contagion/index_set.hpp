#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "contagion/rng.hpp"

namespace contagion {

/// Subset of [0, capacity) with O(1) insert, erase, membership and uniform sampling.
/// Members live in a dense array; erase swaps the last member into the hole.
class IndexSet {
public:
    static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();

    IndexSet() = default;
    explicit IndexSet(std::size_t capacity) : slot_(capacity, npos) { members_.reserve(capacity); }

    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] bool empty() const noexcept { return members_.empty(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return slot_.size(); }
    [[nodiscard]] bool contains(std::uint32_t id) const noexcept { return slot_[id] != npos; }
    [[nodiscard]] std::span<const std::uint32_t> members() const noexcept { return members_; }

    bool insert(std::uint32_t id) {
        if (slot_[id] != npos) return false;
        slot_[id] = static_cast<std::uint32_t>(members_.size());
        members_.push_back(id);
        return true;
    }

    bool erase(std::uint32_t id) noexcept {
        const std::uint32_t at = slot_[id];
        if (at == npos) return false;
        const std::uint32_t last = members_.back();
        members_[at] = last;
        slot_[last] = at;
        members_.pop_back();
        slot_[id] = npos;
        return true;
    }

    /// Uniform member; the set must be nonempty.
    [[nodiscard]] std::uint32_t sample(Rng& rng) const noexcept {
        return members_[static_cast<std::size_t>(rng.below(members_.size()))];
    }

private:
    std::vector<std::uint32_t> members_;
    std::vector<std::uint32_t> slot_;
};

}  // namespace contagion
