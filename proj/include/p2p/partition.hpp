#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "p2p/optimiser.hpp"

namespace p2p {

using ProfilePtr = std::shared_ptr<const CoalitionProfile>;

/// Disjoint grouping of a community's prosumers into trading coalitions.
/// Blocks are kept ordered by their representative (smallest member id).
class CoalitionPartition {
public:
    /// Every prosumer starts on its own.
    explicit CoalitionPartition(const JointProfileOptimiser& optimiser);

    std::size_t size() const noexcept { return blocks_.size(); }
    std::size_t prosumers() const noexcept { return block_of_.size(); }
    const ProfilePtr& block(std::size_t index) const { return blocks_.at(index); }
    const std::vector<ProfilePtr>& blocks() const noexcept { return blocks_; }

    /// Index of the block holding prosumer `id`.
    std::size_t block_of(AgentId id) const;

    /// Replaces blocks i and j by their union and returns the new block's index.
    std::size_t merge(std::size_t i, std::size_t j);

    /// Fraction of prosumers that belong to a coalition of two or more.
    double participation() const;

    /// Sum over blocks of (members' standalone bills - block bill).
    double accumulated_gt() const;

    std::vector<std::size_t> coalition_sizes() const;  // descending
    std::uint64_t digest() const;
    bool is_grand() const noexcept { return blocks_.size() == 1; }

private:
    void reindex();

    const JointProfileOptimiser* optimiser_;
    std::vector<ProfilePtr> blocks_;
    std::vector<std::size_t> block_of_;
};

}  // namespace p2p
