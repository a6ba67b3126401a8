#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace infoveil {

inline constexpr std::size_t kMaxTermsPerQuery = 5;

/// An OR-combination of 1-5 search phrases, rendered "term1 + term2 + ...".
class QueryExpr {
public:
    const std::vector<std::string>& terms() const { return terms_; }
    const std::string& canonicalText() const { return canonical_; }

    bool operator==(const QueryExpr& other) const { return terms_ == other.terms_; }

private:
    friend QueryExpr parseQueryExpr(std::string_view text);
    std::vector<std::string> terms_;
    std::string canonical_;
};

/// Splits on '+', trims each term, drops empty segments. Duplicate detection
/// is case-insensitive; casing is preserved in the canonical text.
/// Throws Error with EmptyExpression, TooManyTerms or DuplicateTerm.
QueryExpr parseQueryExpr(std::string_view text);

enum class Theme { CareSeeking, GovernmentPrograms, HealthPrograms, NewsInfluence, OutlookConcerns, SocialTravel };
enum class Ideology { None, Left, Right, FarRight };

inline constexpr std::size_t kThemeCount = 6;

std::string_view toString(Theme t) noexcept;
std::string_view toString(Ideology i) noexcept;
Theme parseTheme(std::string_view text);
/// Empty text maps to Ideology::None.
Ideology parseIdeology(std::string_view text);

struct ThemedQuery {
    std::string id;
    Theme theme = Theme::CareSeeking;
    QueryExpr expr;
    Ideology ideology = Ideology::None;

    bool operator==(const ThemedQuery&) const = default;
};

class Catalog {
public:
    Catalog() = default;
    /// Validates id uniqueness and the ideology/theme rule; throws
    /// Error(InvariantViolation) naming the offending id.
    Catalog(std::vector<ThemedQuery> queries, std::string version);

    const std::vector<ThemedQuery>& queries() const { return queries_; }
    const std::string& version() const { return version_; }
    std::size_t size() const { return queries_.size(); }

    const ThemedQuery* find(std::string_view id) const;
    std::vector<Theme> themes() const;

    bool operator==(const Catalog&) const = default;

private:
    std::vector<ThemedQuery> queries_;
    std::string version_;
};

/// Kebab-case slug of a phrase: lowercase ASCII alphanumerics, other runs
/// collapse to '-', apostrophes dropped.
std::string slugify(std::string_view phrase);

/// Returns the bundled 39-query catalog when `source` is empty.
Catalog loadCatalog(const std::optional<std::filesystem::path>& source = std::nullopt);
Catalog parseCatalog(std::string_view csv_text, std::string version);
std::string writeCatalogCsv(const Catalog& catalog);

/// Raw text of the bundled catalog file.
std::string_view bundledCatalogCsv();

/// Ids of the nine queries with missing state values in the reference panel.
const std::vector<std::string>& incompleteReferenceQueryIds();

}  // namespace infoveil
