#include "infoveil/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "infoveil/error.hpp"

namespace infoveil::analytics {

std::string_view toString(ChangeStatus s) noexcept {
    switch (s) {
        case ChangeStatus::Value: return "value";
        case ChangeStatus::Capped: return "capped";
        case ChangeStatus::ZeroBaseline: return "zero_baseline";
    }
    return "value";
}

std::string_view toString(Band b) noexcept {
    switch (b) {
        case Band::Low: return "low";
        case Band::Moderate: return "moderate";
        case Band::High: return "high";
    }
    return "low";
}

// ---------------------------------------------------------------------------

namespace {

std::optional<double> windowMean(const RsvSeries& series, const DateRange& window) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : series.points) {
        if (window.contains(p.date)) {
            sum += p.value;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

}  // namespace

PercentChange percentChange(const RsvSeries& series, const DateRange& from_window, const DateRange& to_window,
                            std::optional<double> cap) {
    const auto from = windowMean(series, from_window);
    const auto to = windowMean(series, to_window);
    if (!from || !to) {
        throw Error(ErrorCode::EmptyWindow,
                    "series has no points in " + formatWindow(!from ? from_window : to_window), series.query_id);
    }
    PercentChange out;
    out.from_mean = *from;
    out.to_mean = *to;
    if (*from == 0.0) {
        out.status = ChangeStatus::ZeroBaseline;
        return out;
    }
    out.percent = 100.0 * (*to - *from) / *from;
    if (cap && out.percent > *cap) {
        out.percent = *cap;
        out.status = ChangeStatus::Capped;
    }
    return out;
}

// ---------------------------------------------------------------------------

DropResult dropIncompleteQueries(const StatePanel& panel) {
    std::vector<std::size_t> kept;
    DropResult out;
    for (std::size_t q = 0; q < panel.queryCount(); ++q) {
        bool complete = true;
        for (std::size_t s = 0; s < panel.stateCount() && complete; ++s) complete = panel.at(s, q).has_value();
        if (complete) {
            kept.push_back(q);
        } else {
            out.dropped.push_back(panel.queryIds()[q]);
        }
    }
    if (kept.empty()) {
        throw Error(ErrorCode::AllQueriesDropped, "every query has at least one missing state");
    }
    std::vector<std::string> ids;
    ids.reserve(kept.size());
    for (std::size_t q : kept) ids.push_back(panel.queryIds()[q]);
    out.panel = StatePanel(panel.states(), std::move(ids), panel.window());
    for (std::size_t s = 0; s < panel.stateCount(); ++s) {
        for (std::size_t j = 0; j < kept.size(); ++j) out.panel.set(s, j, panel.at(s, kept[j]));
    }
    return out;
}

// ---------------------------------------------------------------------------

CorrelationMatrix::CorrelationMatrix(std::vector<std::string> query_ids) : query_ids_(std::move(query_ids)) {
    r_.assign(query_ids_.size() * query_ids_.size(), std::nullopt);
    n_pairs_.assign(query_ids_.size() * query_ids_.size(), 0);
}

void CorrelationMatrix::set(std::size_t i, std::size_t j, std::optional<double> r, std::size_t n_pairs) {
    r_[i * size() + j] = r;
    r_[j * size() + i] = r;
    n_pairs_[i * size() + j] = n_pairs;
    n_pairs_[j * size() + i] = n_pairs;
}

CorrelationMatrix pearsonMatrix(const StatePanel& panel, MissingPolicy) {
    if (panel.stateCount() < 2) {
        throw Error(ErrorCode::InvalidArgument, "correlation needs at least two states");
    }
    const std::size_t nq = panel.queryCount();
    const std::size_t ns = panel.stateCount();
    CorrelationMatrix out(panel.queryIds());

    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(ns);
    ys.reserve(ns);
    for (std::size_t i = 0; i < nq; ++i) {
        for (std::size_t j = i; j < nq; ++j) {
            xs.clear();
            ys.clear();
            for (std::size_t s = 0; s < ns; ++s) {
                const auto& a = panel.at(s, i);
                const auto& b = panel.at(s, j);
                if (a && b) {
                    xs.push_back(*a);
                    ys.push_back(*b);
                }
            }
            const std::size_t n = xs.size();
            const bool x_const = n > 0 && std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
            const bool y_const = n > 0 && std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
            if (n < 2 || x_const || y_const) {
                out.set(i, j, std::nullopt, n);
                continue;
            }
            if (i == j) {
                out.set(i, j, 1.0, n);
                continue;
            }
            const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
            const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
            double sxy = 0.0;
            double sxx = 0.0;
            double syy = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double dx = xs[k] - mx;
                const double dy = ys[k] - my;
                sxy += dx * dy;
                sxx += dx * dx;
                syy += dy * dy;
            }
            const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
            out.set(i, j, r, n);
        }
    }
    return out;
}

Band classifyBand(double r) {
    if (!(std::abs(r) <= 1.0 + 1e-12)) {
        throw Error(ErrorCode::OutOfRange, "correlation outside [-1, 1]");
    }
    const double m = std::abs(r);
    if (m < 0.4) return Band::Low;
    if (m < 0.6) return Band::Moderate;
    return Band::High;
}

// ---------------------------------------------------------------------------

std::vector<double> standardize(const StatePanel& panel) {
    const std::size_t ns = panel.stateCount();
    const std::size_t nq = panel.queryCount();
    if (ns < 2) throw Error(ErrorCode::InvalidArgument, "standardisation needs at least two states");
    std::vector<double> z(ns * nq);
    for (std::size_t q = 0; q < nq; ++q) {
        double mean = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            const auto& v = panel.at(s, q);
            if (!v) {
                throw Error(ErrorCode::InvalidArgument, "panel has missing cells; drop incomplete queries first",
                            panel.queryIds()[q]);
            }
            mean += *v;
        }
        mean /= static_cast<double>(ns);
        bool constant = true;
        double ss = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            const double v = *panel.at(s, q);
            constant = constant && v == *panel.at(0, q);
            ss += (v - mean) * (v - mean);
        }
        if (constant || ss == 0.0) {
            throw Error(ErrorCode::ConstantColumn, "query '" + panel.queryIds()[q] + "' is constant across states",
                        panel.queryIds()[q]);
        }
        const double sd = std::sqrt(ss / static_cast<double>(ns - 1));
        for (std::size_t s = 0; s < ns; ++s) z[s * nq + q] = (*panel.at(s, q) - mean) / sd;
    }
    return z;
}

PcaResult pca(const StatePanel& panel, std::size_t k) {
    const std::size_t ns = panel.stateCount();
    const std::size_t nq = panel.queryCount();
    if (ns < 2 || nq == 0) throw Error(ErrorCode::InvalidArgument, "PCA needs at least two states and one query");
    const std::size_t max_k = std::min(ns - 1, nq);
    if (k == 0 || k > max_k) {
        throw Error(ErrorCode::KTooLarge,
                    "k=" + std::to_string(k) + " outside 1.." + std::to_string(max_k));
    }

    const std::vector<double> zv = standardize(panel);
    using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Map<const RowMatrix> z(zv.data(), static_cast<Eigen::Index>(ns), static_cast<Eigen::Index>(nq));

    const Eigen::MatrixXd corr = (z.transpose() * z) / static_cast<double>(ns - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::InvalidArgument, "eigendecomposition failed to converge");
    }

    // Eigen returns ascending eigenvalues.
    const Eigen::VectorXd& evals = solver.eigenvalues();
    const Eigen::MatrixXd& evecs = solver.eigenvectors();
    const double trace = static_cast<double>(nq);

    PcaResult out;
    out.query_ids = panel.queryIds();
    out.states = panel.states();
    out.max_components = max_k;
    for (std::size_t c = 0; c < k; ++c) {
        const Eigen::Index col = static_cast<Eigen::Index>(nq - 1 - c);
        Eigen::VectorXd v = evecs.col(col);
        v.normalize();

        Eigen::Index pivot = 0;
        for (Eigen::Index i = 1; i < v.size(); ++i) {
            if (std::abs(v[i]) > std::abs(v[pivot])) pivot = i;
        }
        if (v[pivot] < 0.0) v = -v;

        Component comp;
        comp.eigenvalue = std::max(evals[col], 0.0);
        comp.explained_variance_ratio = comp.eigenvalue / trace;
        comp.loadings.assign(v.data(), v.data() + v.size());
        const Eigen::VectorXd scores = z * v;
        comp.scores.assign(scores.data(), scores.data() + scores.size());

        const double scale = std::max(std::abs(evals[col]), 1e-300);
        for (Eigen::Index nb : {col - 1, col + 1}) {
            if (nb < 0 || nb >= evals.size()) continue;
            if (std::abs(evals[col] - evals[nb]) <= 1e-10 * scale) comp.unstable = true;
        }
        out.components.push_back(std::move(comp));
    }
    return out;
}

ComponentInterpretation interpretComponent(const PcaResult& result, std::size_t component_index, double threshold,
                                           std::size_t n_top_states) {
    if (component_index >= result.components.size()) {
        throw Error(ErrorCode::BadIndex, "component " + std::to_string(component_index) + " not in result of " +
                                             std::to_string(result.components.size()));
    }
    const Component& c = result.components[component_index];
    ComponentInterpretation out;
    out.component_index = component_index;
    out.threshold = threshold;

    std::vector<std::size_t> order(c.loadings.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(c.loadings[a]) > std::abs(c.loadings[b]); });
    for (std::size_t i : order) {
        if (std::abs(c.loadings[i]) >= threshold) out.salient.push_back({result.query_ids[i], c.loadings[i]});
    }

    std::vector<std::size_t> states(c.scores.size());
    std::iota(states.begin(), states.end(), 0);
    std::stable_sort(states.begin(), states.end(),
                     [&](std::size_t a, std::size_t b) { return c.scores[a] > c.scores[b]; });
    const std::size_t n = std::min(n_top_states, states.size());
    for (std::size_t i = 0; i < n; ++i) out.top_states.push_back({result.states[states[i]], c.scores[states[i]]});
    return out;
}

}  // namespace infoveil::analytics
