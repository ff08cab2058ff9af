#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace nesy {

using Label = std::size_t;

// Bit set over a label space of fixed width `universe`.
class FocalSet {
public:
    FocalSet() = default;

    explicit FocalSet(std::size_t universe)
        : universe_(universe), words_((universe + 63) / 64, 0) {}

    FocalSet(std::size_t universe, std::span<const Label> members) : FocalSet(universe) {
        for (Label y : members) {
            insert(y);
        }
    }

    FocalSet(std::size_t universe, std::initializer_list<Label> members)
        : FocalSet(universe, std::span<const Label>(members.begin(), members.size())) {}

    static FocalSet full(std::size_t universe) {
        FocalSet s(universe);
        for (Label y = 0; y < universe; ++y) {
            s.insert(y);
        }
        return s;
    }

    [[nodiscard]] std::size_t universe() const noexcept { return universe_; }

    void insert(Label y) {
        require(y < universe_, ErrorKind::invalid_label,
                "label " + std::to_string(y) + " outside space of size " + std::to_string(universe_));
        words_[y / 64] |= (std::uint64_t{1} << (y % 64));
    }

    [[nodiscard]] bool contains(Label y) const noexcept {
        return y < universe_ && (words_[y / 64] >> (y % 64)) & 1U;
    }

    [[nodiscard]] std::size_t size() const noexcept {
        std::size_t n = 0;
        for (auto w : words_) {
            n += static_cast<std::size_t>(std::popcount(w));
        }
        return n;
    }

    [[nodiscard]] bool empty() const noexcept {
        return std::all_of(words_.begin(), words_.end(), [](auto w) { return w == 0; });
    }

    [[nodiscard]] bool is_full() const noexcept { return size() == universe_; }

    [[nodiscard]] bool is_subset_of(const FocalSet& other) const noexcept {
        for (std::size_t i = 0; i < words_.size(); ++i) {
            if ((words_[i] & ~other.word(i)) != 0) {
                return false;
            }
        }
        return true;
    }

    [[nodiscard]] std::size_t intersection_size(const FocalSet& other) const noexcept {
        std::size_t n = 0;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            n += static_cast<std::size_t>(std::popcount(words_[i] & other.word(i)));
        }
        return n;
    }

    [[nodiscard]] bool intersects(const FocalSet& other) const noexcept {
        return intersection_size(other) > 0;
    }

    FocalSet& operator|=(const FocalSet& other) {
        require(universe_ == other.universe_, ErrorKind::shape, "union of sets over different spaces");
        for (std::size_t i = 0; i < words_.size(); ++i) {
            words_[i] |= other.words_[i];
        }
        return *this;
    }

    friend FocalSet operator|(FocalSet lhs, const FocalSet& rhs) { return lhs |= rhs; }

    // Ascending member list.
    [[nodiscard]] std::vector<Label> members() const {
        std::vector<Label> out;
        out.reserve(size());
        for (std::size_t i = 0; i < words_.size(); ++i) {
            auto w = words_[i];
            while (w != 0) {
                out.push_back(i * 64 + static_cast<std::size_t>(std::countr_zero(w)));
                w &= w - 1;
            }
        }
        return out;
    }

    [[nodiscard]] std::string to_string() const {
        std::string s = "{";
        bool first = true;
        for (Label y : members()) {
            if (!first) {
                s += ",";
            }
            s += std::to_string(y);
            first = false;
        }
        return s + "}";
    }

    friend bool operator==(const FocalSet& a, const FocalSet& b) {
        return a.universe_ == b.universe_ && a.words_ == b.words_;
    }

    // Canonical family order: cardinality first, then lexicographic members.
    friend bool canonical_less(const FocalSet& a, const FocalSet& b) {
        const auto na = a.size();
        const auto nb = b.size();
        if (na != nb) {
            return na < nb;
        }
        return a.members() < b.members();
    }

private:
    [[nodiscard]] std::uint64_t word(std::size_t i) const noexcept {
        return i < words_.size() ? words_[i] : 0;
    }

    std::size_t universe_ = 0;
    std::vector<std::uint64_t> words_;
};

} // namespace nesy
