#pragma once

#include "fedsearch/catalog_store.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace fedsearch {

/// Filter applied to the nodes selected by the last step.
///
/// Leaf predicates look at the text values of the children named `field`
/// (every element in each child's subtree, one value per element). The
/// field name "." stands for the node's own subtree. `contains` folds ASCII
/// case; `=` compares bytes.
struct Predicate {
    enum class Kind { Contains, Equals, And, Or };

    Kind kind = Kind::Contains;
    std::string field;
    std::string text;
    std::vector<Predicate> operands;

    static Predicate contains(std::string field, std::string text);
    static Predicate equals(std::string field, std::string text);
    static Predicate conjunction(Predicate lhs, Predicate rhs);
    static Predicate disjunction(Predicate lhs, Predicate rhs);

    bool operator==(const Predicate&) const = default;
};

enum class Axis { Child, Descendant };

struct Step {
    Axis axis = Axis::Child;
    std::string name; // "*" matches any element

    bool operator==(const Step&) const = default;
};

struct PathExpression {
    std::vector<Step> steps;
    std::optional<Predicate> predicate;

    bool operator==(const PathExpression&) const = default;
};

inline constexpr int kMaxPredicateDepth = 32;

/// Throws SyntaxError with the byte offset and the expected-token set.
PathExpression parse_expression(std::string_view text);

/// Canonical text form; parse_expression(print_expression(e)) == e.
std::string print_expression(const PathExpression& expression);

/// Evaluates against the catalog viewed as one document: a virtual root
/// whose children are the eleven collection roots (in collection order),
/// each holding its entries in file order. Returns the entries that own
/// the selected nodes, deduplicated, in document order. Nodes above entry
/// level (the collection roots) own no entry and are dropped.
std::vector<Entry> evaluate(const Catalog& catalog, const PathExpression& expression);

} // namespace fedsearch
