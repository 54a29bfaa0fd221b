#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace condreg {

using BoolVector = std::span<const std::uint8_t>;

/// Dense row-major 0/1 matrix; one byte per entry.
class BoolMatrix {
public:
    BoolMatrix() = default;
    BoolMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    BoolVector row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<std::uint8_t> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    bool at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { data_[i * cols_ + j] = v ? 1 : 0; }

    // Keeps only the listed rows, in the listed order.
    BoolMatrix select_rows(std::span<const std::size_t> rows) const {
        BoolMatrix out(rows.size(), cols_);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto src = row(rows[r]);
            std::copy(src.begin(), src.end(), out.row(r).begin());
        }
        return out;
    }

    bool operator==(const BoolMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Fixed-size bit set over row indices.
class RowSet {
public:
    RowSet() = default;
    explicit RowSet(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::size_t size() const noexcept { return size_; }

    void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    bool any() const {
        for (auto w : words_)
            if (w) return true;
        return false;
    }

    RowSet& operator|=(const RowSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
        return *this;
    }
    RowSet& operator&=(const RowSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        return *this;
    }

    // |this \ other|
    std::size_t count_without(const RowSet& other) const {
        std::size_t c = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            c += static_cast<std::size_t>(std::popcount(words_[i] & ~other.words_[i]));
        return c;
    }

    // |this ∩ other|
    std::size_t count_with(const RowSet& other) const {
        std::size_t c = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            c += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
        return c;
    }

    template <class F>
    void for_each(F&& f) const {
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            std::uint64_t w = words_[wi];
            while (w) {
                f(wi * 64 + static_cast<std::size_t>(std::countr_zero(w)));
                w &= w - 1;
            }
        }
    }

    // Same as for_each, restricted to bits not present in `mask`.
    template <class F>
    void for_each_without(const RowSet& mask, F&& f) const {
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            std::uint64_t w = words_[wi] & ~mask.words_[wi];
            while (w) {
                f(wi * 64 + static_cast<std::size_t>(std::countr_zero(w)));
                w &= w - 1;
            }
        }
    }

    // Σ values[i] over set bits.
    double sum(std::span<const double> values) const {
        double s = 0.0;
        for_each([&](std::size_t i) { s += values[i]; });
        return s;
    }

    bool operator==(const RowSet&) const = default;

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace condreg
