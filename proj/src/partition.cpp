#include "p2p/partition.hpp"

#include <algorithm>

#include "p2p/errors.hpp"

namespace p2p {

CoalitionPartition::CoalitionPartition(const JointProfileOptimiser& optimiser) : optimiser_(&optimiser) {
    blocks_.reserve(optimiser.size());
    for (std::size_t i = 0; i < optimiser.size(); ++i) blocks_.push_back(optimiser.singleton(static_cast<AgentId>(i)));
    reindex();
}

void CoalitionPartition::reindex() {
    block_of_.assign(optimiser_->size(), 0);
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        for (AgentId id : blocks_[b]->members) block_of_[id] = b;
}

std::size_t CoalitionPartition::block_of(AgentId id) const { return block_of_.at(id); }

std::size_t CoalitionPartition::merge(std::size_t i, std::size_t j) {
    if (i == j || i >= blocks_.size() || j >= blocks_.size()) throw ProtocolError("invalid partition merge");
    auto joined = std::make_shared<const CoalitionProfile>(p2p::merge(*blocks_[i], *blocks_[j]));
    const std::size_t hi = std::max(i, j);
    const std::size_t lo = std::min(i, j);
    blocks_.erase(blocks_.begin() + static_cast<std::ptrdiff_t>(hi));
    blocks_[lo] = std::move(joined);  // the union keeps the smaller representative
    reindex();
    return lo;
}

double CoalitionPartition::participation() const {
    std::size_t trading = 0;
    for (const auto& b : blocks_)
        if (b->members.size() >= 2) trading += b->members.size();
    return static_cast<double>(trading) / static_cast<double>(prosumers());
}

double CoalitionPartition::accumulated_gt() const {
    double gt = 0.0;
    for (const auto& b : blocks_) {
        if (b->members.size() < 2) continue;
        double standalone = 0.0;
        for (AgentId id : b->members) standalone += optimiser_->standalone_bill(id);
        gt += standalone - optimiser_->coalition_bill(*b);
    }
    return gt;
}

std::vector<std::size_t> CoalitionPartition::coalition_sizes() const {
    std::vector<std::size_t> out;
    out.reserve(blocks_.size());
    for (const auto& b : blocks_) out.push_back(b->members.size());
    std::sort(out.rbegin(), out.rend());
    return out;
}

std::uint64_t CoalitionPartition::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t b : block_of_) {
        h ^= blocks_[b]->representative() + 1;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace p2p
