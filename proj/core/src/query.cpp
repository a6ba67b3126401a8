#include "infoveil/query.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "infoveil/csv.hpp"
#include "infoveil/error.hpp"

namespace infoveil {

namespace embedded {
extern const std::string_view kCatalogCsv;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string foldCase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

QueryExpr parseQueryExpr(std::string_view text) {
    QueryExpr expr;
    std::set<std::string> seen;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t plus = text.find('+', start);
        const std::size_t end = plus == std::string_view::npos ? text.size() : plus;
        const std::string_view term = trim(text.substr(start, end - start));
        if (!term.empty()) {
            if (!seen.insert(foldCase(term)).second) {
                throw Error(ErrorCode::DuplicateTerm, "duplicate term '" + std::string(term) + "'", std::string(text));
            }
            expr.terms_.emplace_back(term);
        }
        if (plus == std::string_view::npos) break;
        start = plus + 1;
    }
    if (expr.terms_.empty()) {
        throw Error(ErrorCode::EmptyExpression, "query expression has no terms", std::string(text));
    }
    if (expr.terms_.size() > kMaxTermsPerQuery) {
        throw Error(ErrorCode::TooManyTerms,
                    "query expression has " + std::to_string(expr.terms_.size()) + " terms; at most " +
                        std::to_string(kMaxTermsPerQuery) + " are allowed",
                    std::string(text));
    }
    for (std::size_t i = 0; i < expr.terms_.size(); ++i) {
        if (i) expr.canonical_ += " + ";
        expr.canonical_ += expr.terms_[i];
    }
    return expr;
}

std::string_view toString(Theme t) noexcept {
    switch (t) {
        case Theme::CareSeeking: return "CareSeeking";
        case Theme::GovernmentPrograms: return "GovernmentPrograms";
        case Theme::HealthPrograms: return "HealthPrograms";
        case Theme::NewsInfluence: return "NewsInfluence";
        case Theme::OutlookConcerns: return "OutlookConcerns";
        case Theme::SocialTravel: return "SocialTravel";
    }
    return "CareSeeking";
}

std::string_view toString(Ideology i) noexcept {
    switch (i) {
        case Ideology::None: return "None";
        case Ideology::Left: return "Left";
        case Ideology::Right: return "Right";
        case Ideology::FarRight: return "FarRight";
    }
    return "None";
}

Theme parseTheme(std::string_view text) {
    for (Theme t : {Theme::CareSeeking, Theme::GovernmentPrograms, Theme::HealthPrograms, Theme::NewsInfluence,
                    Theme::OutlookConcerns, Theme::SocialTravel}) {
        if (toString(t) == text) return t;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown theme '" + std::string(text) + "'");
}

Ideology parseIdeology(std::string_view text) {
    if (text.empty()) return Ideology::None;
    for (Ideology i : {Ideology::None, Ideology::Left, Ideology::Right, Ideology::FarRight}) {
        if (toString(i) == text) return i;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown ideology '" + std::string(text) + "'");
}

Catalog::Catalog(std::vector<ThemedQuery> queries, std::string version)
    : queries_(std::move(queries)), version_(std::move(version)) {
    std::set<std::string> ids;
    for (const auto& q : queries_) {
        if (q.id.empty()) throw Error(ErrorCode::InvariantViolation, "query with empty id");
        if (!ids.insert(q.id).second) {
            throw Error(ErrorCode::InvariantViolation, "duplicate query id '" + q.id + "'", q.id);
        }
        if (q.ideology != Ideology::None && q.theme != Theme::NewsInfluence) {
            throw Error(ErrorCode::InvariantViolation, "ideology set on non-news query '" + q.id + "'", q.id);
        }
    }
}

const ThemedQuery* Catalog::find(std::string_view id) const {
    const auto it = std::find_if(queries_.begin(), queries_.end(), [&](const auto& q) { return q.id == id; });
    return it == queries_.end() ? nullptr : &*it;
}

std::vector<Theme> Catalog::themes() const {
    std::vector<Theme> out;
    for (const auto& q : queries_) {
        if (std::find(out.begin(), out.end(), q.theme) == out.end()) out.push_back(q.theme);
    }
    return out;
}

std::string slugify(std::string_view phrase) {
    std::string out;
    bool pending_dash = false;
    for (unsigned char c : phrase) {
        if (c == '\'') continue;
        if (std::isalnum(c)) {
            if (pending_dash && !out.empty()) out.push_back('-');
            pending_dash = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_dash = true;
        }
    }
    return out;
}

Catalog parseCatalog(std::string_view csv_text, std::string version) {
    // A leading "# version: X" comment overrides the supplied version.
    std::string_view head = csv_text;
    if (head.substr(0, 3) == "\xEF\xBB\xBF") head.remove_prefix(3);
    if (head.substr(0, 10) == "# version:") {
        const auto eol = head.find('\n');
        version = std::string(trim(head.substr(10, eol == std::string_view::npos ? head.npos : eol - 10)));
    }

    const auto rows = csv::parse(csv_text);
    if (rows.empty()) throw Error(ErrorCode::CatalogParseError, "catalog is empty; header row required", "line 1");
    const std::vector<std::string> expected{"id", "theme", "expr", "ideology"};
    std::vector<std::string> header;
    for (const auto& f : rows.front().fields) header.emplace_back(trim(f));
    if (header != expected) {
        throw Error(ErrorCode::CatalogParseError, "catalog header must be id,theme,expr,ideology",
                    "line " + std::to_string(rows.front().line));
    }

    std::vector<ThemedQuery> queries;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != expected.size()) {
            throw Error(ErrorCode::CatalogParseError,
                        "expected 4 fields, found " + std::to_string(row.fields.size()), where);
        }
        ThemedQuery q;
        q.id = std::string(trim(row.fields[0]));
        if (q.id.empty()) throw Error(ErrorCode::CatalogParseError, "field 'id' is empty", where);
        try {
            q.theme = parseTheme(trim(row.fields[1]));
        } catch (const Error& e) {
            throw Error(ErrorCode::CatalogParseError, "field 'theme': " + std::string(e.what()), where);
        }
        try {
            q.expr = parseQueryExpr(row.fields[2]);
        } catch (const Error& e) {
            throw Error(ErrorCode::CatalogParseError, "field 'expr': " + std::string(e.what()), where);
        }
        try {
            q.ideology = parseIdeology(trim(row.fields[3]));
        } catch (const Error& e) {
            throw Error(ErrorCode::CatalogParseError, "field 'ideology': " + std::string(e.what()), where);
        }
        queries.push_back(std::move(q));
    }
    return Catalog(std::move(queries), std::move(version));
}

std::string writeCatalogCsv(const Catalog& catalog) {
    std::string out = "# version: " + catalog.version() + "\nid,theme,expr,ideology\n";
    for (const auto& q : catalog.queries()) {
        out += csv::joinRow({q.id, std::string(toString(q.theme)), q.expr.canonicalText(),
                             q.ideology == Ideology::None ? std::string() : std::string(toString(q.ideology))});
        out += '\n';
    }
    return out;
}

std::string_view bundledCatalogCsv() { return embedded::kCatalogCsv; }

Catalog loadCatalog(const std::optional<std::filesystem::path>& source) {
    if (!source) return parseCatalog(bundledCatalogCsv(), "bundled");
    if (!std::filesystem::exists(*source)) throw Error(ErrorCode::NotFound, "no catalog file", source->string());
    std::ifstream in(*source, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read catalog file", source->string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parseCatalog(buf.str(), source->stem().string());
}

const std::vector<std::string>& incompleteReferenceQueryIds() {
    static const std::vector<std::string> ids{
        "coronavirus-infowars",       "how-can-i-stop-coronavirus", "coronavirus-can-i-see-a-doctor",
        "coronavirus-afford-doctor",  "bar-closed",                 "government-aid",
        "doctor-appointment",         "doctor-open",                "cant-pay-rent",
    };
    return ids;
}

}  // namespace infoveil
