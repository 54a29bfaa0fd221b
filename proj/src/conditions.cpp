#include "condreg/conditions.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "condreg/error.hpp"

namespace condreg {

int Literal::to_signed() const {
    const int idx = static_cast<int>(attribute) + 1;
    return negated ? -idx : idx;
}

Literal Literal::from_signed(int code) {
    if (code == 0) throw ParameterError("literal code 0 is not valid (attributes are 1-based)");
    return Literal{static_cast<std::size_t>(code > 0 ? code - 1 : -code - 1), code < 0};
}

Term::Term(std::vector<Literal> literals) : literals_(std::move(literals)) {
    if (literals_.empty()) throw ParameterError("a term needs at least one literal");
    std::sort(literals_.begin(), literals_.end());
    for (std::size_t i = 1; i < literals_.size(); ++i) {
        if (literals_[i].attribute == literals_[i - 1].attribute)
            throw ParameterError("attribute x" + std::to_string(literals_[i].attribute + 1) +
                                 " appears twice in a term");
    }
}

std::strong_ordering Term::operator<=>(const Term& other) const {
    if (auto c = literals_.size() <=> other.literals_.size(); c != 0) return c;
    return std::lexicographical_compare_three_way(literals_.begin(), literals_.end(),
                                                  other.literals_.begin(), other.literals_.end());
}

std::string Term::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < literals_.size(); ++i) {
        if (i) os << " & ";
        if (literals_[i].negated) os << '!';
        os << 'x' << literals_[i].attribute + 1;
    }
    return os.str();
}

Dnf::Dnf(std::vector<Term> terms) {
    for (auto& t : terms) {
        if (!add(std::move(t))) throw ParameterError("duplicate term in DNF");
    }
}

bool Dnf::add(Term t) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), t);
    if (it != terms_.end() && *it == t) return false;
    terms_.insert(it, std::move(t));
    return true;
}

bool Dnf::contains(const Term& t) const { return std::binary_search(terms_.begin(), terms_.end(), t); }

std::string Dnf::to_string() const {
    if (terms_.empty()) return "false";
    std::ostringstream os;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (i) os << " | ";
        os << '(' << terms_[i].to_string() << ')';
    }
    return os.str();
}

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

void check_nk(std::size_t n, std::size_t k) {
    if (n == 0) throw ParameterError("attribute count n must be at least 1");
    if (k == 0 || k > n) throw ParameterError("term width k must satisfy 1 <= k <= n");
}

}  // namespace

std::uint64_t term_count(std::size_t n, std::size_t k) {
    check_nk(n, k);
    std::uint64_t total = 0;
    for (std::size_t j = 1; j <= k; ++j) total += binomial(n, j) << j;
    return total;
}

std::vector<Term> enumerate_terms(std::size_t n, std::size_t k) {
    check_nk(n, k);
    std::vector<Term> out;
    out.reserve(static_cast<std::size_t>(term_count(n, k)));
    std::vector<std::size_t> attrs;
    std::vector<Literal> lits;
    for (std::size_t width = 1; width <= k; ++width) {
        attrs.resize(width);
        for (std::size_t i = 0; i < width; ++i) attrs[i] = i;
        while (true) {
            for (std::uint32_t signs = 0; signs < (1U << width); ++signs) {
                lits.clear();
                for (std::size_t i = 0; i < width; ++i)
                    lits.push_back(Literal{attrs[i], ((signs >> (width - 1 - i)) & 1U) != 0});
                out.emplace_back(lits);
            }
            // next combination of `width` attributes out of n
            std::size_t i = width;
            while (i > 0 && attrs[i - 1] == n - width + i - 1) --i;
            if (i == 0) break;
            ++attrs[i - 1];
            for (std::size_t j = i; j < width; ++j) attrs[j] = attrs[j - 1] + 1;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool term_satisfies(const Term& t, BoolVector x) {
    if (t.max_attribute() >= x.size())
        throw ParameterError("term references x" + std::to_string(t.max_attribute() + 1) +
                             " but the vector has " + std::to_string(x.size()) + " attributes");
    return t.satisfied_by(x);
}

bool dnf_satisfies(const Dnf& c, BoolVector x) {
    bool hit = false;
    for (const auto& t : c.terms()) hit = term_satisfies(t, x) || hit;
    return hit;
}

RowSet covered_rows(const Dnf& c, const BoolMatrix& x) {
    for (const auto& t : c.terms())
        if (t.max_attribute() >= x.cols()) throw ParameterError("condition arity exceeds data arity");
    RowSet rows(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        if (c.satisfied_by(x.row(i))) rows.set(i);
    return rows;
}

Coverage coverage(const Dnf& c, const BoolMatrix& x) {
    if (x.rows() == 0) throw ParameterError("coverage of an empty sample is undefined");
    const std::size_t count = covered_rows(c, x).count();
    return {count, static_cast<double>(count) / static_cast<double>(x.rows())};
}

TermIndex::TermIndex(std::vector<Term> terms, const BoolMatrix& x)
    : terms_(std::move(terms)), sample_size_(x.rows()) {
    rows_.reserve(terms_.size());
    counts_.reserve(terms_.size());
    // Literal row sets first; terms are intersections of those.
    const std::size_t n = x.cols();
    std::vector<RowSet> literal_rows(2 * n, RowSet(x.rows()));
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto row = x.row(i);
        for (std::size_t a = 0; a < n; ++a) literal_rows[2 * a + (row[a] ? 0 : 1)].set(i);
    }
    for (const auto& t : terms_) {
        if (t.max_attribute() >= n) throw ParameterError("term arity exceeds data arity");
        const auto& lits = t.literals();
        RowSet r = literal_rows[2 * lits[0].attribute + (lits[0].negated ? 1 : 0)];
        for (std::size_t i = 1; i < lits.size(); ++i)
            r &= literal_rows[2 * lits[i].attribute + (lits[i].negated ? 1 : 0)];
        counts_.push_back(r.count());
        rows_.push_back(std::move(r));
    }
}

nlohmann::json to_json(const Term& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : t.literals()) arr.push_back(l.to_signed());
    return arr;
}

Term term_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ParseError("term must be an array of signed literal codes", 0);
    std::vector<Literal> lits;
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw ParseError("literal code must be an integer", 0);
        lits.push_back(Literal::from_signed(v.get<int>()));
    }
    return Term(std::move(lits));
}

nlohmann::json to_json(const Dnf& c) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : c.terms()) terms.push_back(to_json(t));
    return nlohmann::json{{"terms", std::move(terms)}};
}

Dnf dnf_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("terms") || !j["terms"].is_array())
        throw ParseError("DNF JSON must be an object with a \"terms\" array", 0);
    std::vector<Term> terms;
    for (const auto& t : j["terms"]) terms.push_back(term_from_json(t));
    return Dnf(std::move(terms));
}

}  // namespace condreg
