#pragma once

// k-DNF conditions over n Boolean attributes.
//
// Attributes are 0-based internally. The external (JSON/CLI) encoding is the
// signed 1-based integer convention: +i is x_i and -i is its negation.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "condreg/bool_matrix.hpp"
#include "json.hpp"

namespace condreg {

struct Literal {
    std::size_t attribute = 0;
    bool negated = false;

    bool eval(BoolVector x) const { return (x[attribute] != 0) != negated; }

    int to_signed() const;
    static Literal from_signed(int code);

    // (attribute, polarity) with the positive literal first.
    auto operator<=>(const Literal&) const = default;
};

/// Conjunction of literals over distinct attributes.
class Term {
public:
    /// Sorts the literals; throws ParameterError on an empty term or a
    /// repeated attribute (duplicate or contradictory literal).
    explicit Term(std::vector<Literal> literals);

    const std::vector<Literal>& literals() const noexcept { return literals_; }
    std::size_t size() const noexcept { return literals_.size(); }
    std::size_t max_attribute() const { return literals_.back().attribute; }

    // No range check; see term_satisfies for the checked version.
    bool satisfied_by(BoolVector x) const {
        for (const auto& l : literals_)
            if (!l.eval(x)) return false;
        return true;
    }

    std::string to_string() const;

    bool operator==(const Term&) const = default;
    /// Enumeration order: ascending size, then lexicographic by literal.
    std::strong_ordering operator<=>(const Term& other) const;

private:
    std::vector<Literal> literals_;
};

/// Disjunction of distinct terms, kept in Term order so equal sets compare
/// equal. Empty means false.
class Dnf {
public:
    Dnf() = default;
    /// Throws ParameterError on duplicate terms.
    explicit Dnf(std::vector<Term> terms);

    /// Inserts unless already present; returns whether it was added.
    bool add(Term t);
    bool contains(const Term& t) const;

    const std::vector<Term>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return terms_.empty(); }

    bool satisfied_by(BoolVector x) const {
        for (const auto& t : terms_)
            if (t.satisfied_by(x)) return true;
        return false;
    }

    std::string to_string() const;

    bool operator==(const Dnf&) const = default;

private:
    std::vector<Term> terms_;
};

/// Σ_{j=1..k} C(n,j)·2^j.
std::uint64_t term_count(std::size_t n, std::size_t k);

/// Every satisfiable term of 1..k literals over n attributes, in Term order.
std::vector<Term> enumerate_terms(std::size_t n, std::size_t k);

bool term_satisfies(const Term& t, BoolVector x);
bool dnf_satisfies(const Dnf& c, BoolVector x);

struct Coverage {
    std::size_t count = 0;
    double fraction = 0.0;
};

Coverage coverage(const Dnf& c, const BoolMatrix& x);

/// Rows of `x` satisfying `c`.
RowSet covered_rows(const Dnf& c, const BoolMatrix& x);

/// The row sets of a fixed term list over one sample, computed once.
class TermIndex {
public:
    TermIndex(std::vector<Term> terms, const BoolMatrix& x);

    std::size_t size() const noexcept { return terms_.size(); }
    std::size_t sample_size() const noexcept { return sample_size_; }
    const Term& term(std::size_t t) const { return terms_[t]; }
    const std::vector<Term>& terms() const noexcept { return terms_; }
    const RowSet& rows(std::size_t t) const { return rows_[t]; }
    std::size_t row_count(std::size_t t) const { return counts_[t]; }

private:
    std::vector<Term> terms_;
    std::vector<RowSet> rows_;
    std::vector<std::size_t> counts_;
    std::size_t sample_size_ = 0;
};

nlohmann::json to_json(const Term& t);
Term term_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Dnf& c);
Dnf dnf_from_json(const nlohmann::json& j);

}  // namespace condreg
