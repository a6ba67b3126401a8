#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infoveil/series.hpp"

namespace infoveil::analytics {

// ---------------------------------------------------------------------------
// Period change

enum class ChangeStatus {
    Value,         // ordinary percent change
    Capped,        // change exceeded the cap; `percent` holds the cap
    ZeroBaseline,  // baseline mean is zero: a new topic, change undefined
};

std::string_view toString(ChangeStatus s) noexcept;

struct PercentChange {
    ChangeStatus status = ChangeStatus::Value;
    double percent = 0.0;
    double from_mean = 0.0;
    double to_mean = 0.0;
};

/// 100 * (mean(to) - mean(from)) / mean(from). Throws EmptyWindow when
/// either window holds no points of the series.
PercentChange percentChange(const RsvSeries& series, const DateRange& from_window, const DateRange& to_window,
                            std::optional<double> cap = std::nullopt);

// ---------------------------------------------------------------------------
// Panel cleaning

struct DropResult {
    StatePanel panel;
    std::vector<std::string> dropped;  // in the input's query order
};

/// Removes every query with at least one missing state. Throws AllQueriesDropped.
DropResult dropIncompleteQueries(const StatePanel& panel);

// ---------------------------------------------------------------------------
// Correlation

enum class MissingPolicy { PairwiseComplete };

class CorrelationMatrix {
public:
    CorrelationMatrix() = default;
    explicit CorrelationMatrix(std::vector<std::string> query_ids);

    const std::vector<std::string>& queryIds() const { return query_ids_; }
    std::size_t size() const { return query_ids_.size(); }

    /// nullopt when fewer than two complete pairs exist or either column is
    /// constant over them.
    std::optional<double> r(std::size_t i, std::size_t j) const { return r_[i * size() + j]; }
    std::size_t pairs(std::size_t i, std::size_t j) const { return n_pairs_[i * size() + j]; }

    void set(std::size_t i, std::size_t j, std::optional<double> r, std::size_t n_pairs);

private:
    std::vector<std::string> query_ids_;
    std::vector<std::optional<double>> r_;
    std::vector<std::size_t> n_pairs_;
};

/// Pearson r per query pair over the states where both are present.
/// Throws InvalidArgument with fewer than two states.
CorrelationMatrix pearsonMatrix(const StatePanel& panel, MissingPolicy policy = MissingPolicy::PairwiseComplete);

enum class Band { Low, Moderate, High };

std::string_view toString(Band b) noexcept;

/// Bands |r|: Low [0, 0.4), Moderate [0.4, 0.6), High [0.6, 1]. Throws OutOfRange.
Band classifyBand(double r);

// ---------------------------------------------------------------------------
// PCA

struct Component {
    std::vector<double> loadings;  // one per query, unit norm
    std::vector<double> scores;    // one per state
    double eigenvalue = 0.0;
    double explained_variance_ratio = 0.0;
    /// Eigenvalue within 1e-10 relative gap of a neighbour: ordering and
    /// orientation inside the degenerate subspace are arbitrary.
    bool unstable = false;
};

enum class Standardization { ZScore };

struct PcaResult {
    std::vector<std::string> query_ids;
    std::vector<std::string> states;
    std::vector<Component> components;
    Standardization standardization = Standardization::ZScore;
    /// Number of components with non-zero variance, min(n_states - 1, n_queries).
    std::size_t max_components = 0;
};

/// Correlation-matrix PCA of a complete panel. Columns are z-scored with the
/// sample standard deviation; each component is oriented so its
/// largest-magnitude loading is positive (first such query on ties).
/// Throws InvalidArgument (missing cells), ConstantColumn, KTooLarge.
PcaResult pca(const StatePanel& panel, std::size_t k);

/// Column-wise z-scores (sample std), states x queries, row-major.
std::vector<double> standardize(const StatePanel& panel);

struct SalientLoading {
    std::string query_id;
    double loading = 0.0;
};

struct StateScore {
    std::string state;
    double score = 0.0;
};

struct ComponentInterpretation {
    std::size_t component_index = 0;
    double threshold = 0.2;
    std::vector<SalientLoading> salient;  // |loading| >= threshold, by descending |loading|
    std::vector<StateScore> top_states;   // by descending score
    std::optional<std::string> label;
};

inline constexpr double kDefaultLoadingThreshold = 0.2;
inline constexpr std::size_t kDefaultTopStates = 5;

/// Throws BadIndex.
ComponentInterpretation interpretComponent(const PcaResult& result, std::size_t component_index,
                                           double threshold = kDefaultLoadingThreshold,
                                           std::size_t n_top_states = kDefaultTopStates);

}  // namespace infoveil::analytics
