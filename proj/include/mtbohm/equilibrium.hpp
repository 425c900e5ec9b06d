#ifndef MTBOHM_EQUILIBRIUM_HPP
#define MTBOHM_EQUILIBRIUM_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtbohm/guidance.hpp"
#include "mtbohm/rng.hpp"
#include "mtbohm/two_time_state.hpp"

namespace mtbohm {

/// A "simultaneity" slice: the pair of subsystem times it is read at.
struct SliceSpec {
    double t_a = 0.0;
    double t_b = 0.0;
    std::string label;

    double offset() const { return t_b - t_a; }
};

/// Labeled spatial interval standing proxy for one Stern-Gerlach channel.
struct TrackRegion {
    std::string label;
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double q) const { return q >= lo && q < hi; }
};

struct SampleStats {
    std::size_t samples = 0;
    std::size_t proposals = 0;
    std::size_t envelope_violations = 0;
    double acceptance_rate = 1.0;
    bool geometry_warning = false;

    void merge(const SampleStats& o) {
        samples += o.samples;
        proposals += o.proposals;
        envelope_violations += o.envelope_violations;
        acceptance_rate =
            proposals ? static_cast<double>(samples) / static_cast<double>(proposals) : 1.0;
        geometry_warning = geometry_warning || o.geometry_warning;
    }
};

namespace detail {

inline double density(const TwoTimeState& state, double q_a, double q_b) {
    const auto psi = amplitude(state, q_a, q_b);
    double rho = 0.0;
    for (const auto& c : psi) rho += std::norm(c);
    return rho;
}

} // namespace detail

/// One |psi|^2 draw by rejection sampling against the |coeff|^2-weighted
/// branch-Gaussian mixture with envelope constant 2. Proposals whose true
/// density exceeds the envelope are counted (they indicate geometry outside
/// the supported regime) but still accepted.
inline std::pair<double, double> sample_equilibrium_one(const TwoTimeState& state, CounterRng& rng,
                                                        SampleStats& stats) {
    const auto& branches = state.branches();
    if (branches.empty()) throw std::invalid_argument("sample_equilibrium: empty state");
    std::vector<double> weights(branches.size());
    double total = 0.0;
    for (std::size_t j = 0; j < branches.size(); ++j) {
        weights[j] = std::norm(branches[j].coeff);
        total += weights[j];
    }
    for (int attempt = 0; attempt < 100000; ++attempt) {
        ++stats.proposals;
        double pick = rng.uniform() * total;
        std::size_t j = 0;
        while (j + 1 < branches.size() && pick > weights[j]) {
            pick -= weights[j];
            ++j;
        }
        const auto& br = branches[j];
        const double qa =
            br.packet_a.center + rng.normal() / std::sqrt(2.0 * br.packet_a.alpha.real());
        const double qb =
            br.packet_b.center + rng.normal() / std::sqrt(2.0 * br.packet_b.alpha.real());
        double mixture = 0.0;
        for (std::size_t l = 0; l < branches.size(); ++l) {
            const auto& bl = branches[l];
            mixture += weights[l] * std::norm(bl.packet_a.value(qa)) * std::norm(bl.packet_b.value(qb));
        }
        const double rho = detail::density(state, qa, qb);
        const double bound = 2.0 * mixture;
        if (rho > bound * (1.0 + 1e-9)) ++stats.envelope_violations;
        if (rng.uniform() * bound < rho) {
            ++stats.samples;
            return {qa, qb};
        }
    }
    throw std::runtime_error("sample_equilibrium: rejection sampler failed to accept");
}

/// n i.i.d. samples from |psi|^2 on the state's current slice. Streams are
/// keyed by (seed, stream_base + i): deterministic under any parallel
/// schedule.
inline std::vector<std::pair<double, double>> sample_equilibrium(const TwoTimeState& state,
                                                                 std::size_t n, std::uint64_t seed,
                                                                 SampleStats* stats_out = nullptr,
                                                                 std::uint64_t stream_base = 0) {
    if (n < 1) throw std::invalid_argument("sample_equilibrium: n must be >= 1");
    std::vector<std::pair<double, double>> out(n);
    std::vector<SampleStats> stats(n);
    parallel_for(n, [&](std::size_t i) {
        CounterRng rng(seed, stream_base + i);
        out[i] = sample_equilibrium_one(state, rng, stats[i]);
    });
    if (stats_out) {
        for (const auto& s : stats) stats_out->merge(s);
        stats_out->geometry_warning = stats_out->acceptance_rate < 0.01;
    }
    return out;
}

/// Exact CDF of the marginal distribution of one coordinate (cross terms
/// included) -- the oracle for sampler tests.
inline double marginal_cdf(const TwoTimeState& state, Subsystem sub, double x) {
    const auto& br = state.branches();
    cdouble acc{0.0, 0.0};
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < br.size(); ++j) {
        for (std::size_t l = 0; l < br.size(); ++l) {
            const auto spin = inner(br[j].spin_a, br[l].spin_a) * inner(br[j].spin_b, br[l].spin_b);
            if (std::abs(spin) == 0.0) continue;
            const auto& gj = sub == Subsystem::a ? br[j].packet_a : br[j].packet_b;
            const auto& gl = sub == Subsystem::a ? br[l].packet_a : br[l].packet_b;
            const auto& hj = sub == Subsystem::a ? br[j].packet_b : br[j].packet_a;
            const auto& hl = sub == Subsystem::a ? br[l].packet_b : br[l].packet_a;
            acc += std::conj(br[j].coeff) * br[l].coeff * spin * overlap_interval(gj, gl, -inf, x) *
                   overlap_full(hj, hl);
        }
    }
    return std::min(1.0, std::max(0.0, acc.real()));
}

/// Empirical crossing fractions over labeled region products.
struct CrossingTable {
    std::vector<std::string> labels_a, labels_b; // last label on each axis: "none"
    std::vector<std::size_t> counts;             // row-major (labels_a x labels_b)
    std::size_t n = 0;

    std::size_t index(std::size_t ia, std::size_t ib) const { return ia * labels_b.size() + ib; }
    double fraction(std::size_t ia, std::size_t ib) const {
        return n ? static_cast<double>(counts[index(ia, ib)]) / static_cast<double>(n) : 0.0;
    }
    double sigma(std::size_t ia, std::size_t ib) const {
        const double p = fraction(ia, ib);
        return n ? std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(n)) : 0.0;
    }
    std::optional<std::pair<std::size_t, std::size_t>> find(const std::string& la,
                                                            const std::string& lb) const {
        std::size_t ia = labels_a.size(), ib = labels_b.size();
        for (std::size_t i = 0; i < labels_a.size(); ++i)
            if (labels_a[i] == la) ia = i;
        for (std::size_t i = 0; i < labels_b.size(); ++i)
            if (labels_b[i] == lb) ib = i;
        if (ia == labels_a.size() || ib == labels_b.size()) return std::nullopt;
        return std::make_pair(ia, ib);
    }
};

/// Tabulates crossing points against region products; points outside every
/// region fall into the trailing "none" bucket.
inline CrossingTable crossing_statistics(const std::vector<std::pair<double, double>>& points,
                                         const std::vector<TrackRegion>& regions_a,
                                         const std::vector<TrackRegion>& regions_b) {
    CrossingTable table;
    for (const auto& r : regions_a) table.labels_a.push_back(r.label);
    for (const auto& r : regions_b) table.labels_b.push_back(r.label);
    table.labels_a.push_back("none");
    table.labels_b.push_back("none");
    table.counts.assign(table.labels_a.size() * table.labels_b.size(), 0);
    table.n = points.size();
    for (const auto& [qa, qb] : points) {
        std::size_t ia = regions_a.size();
        for (std::size_t i = 0; i < regions_a.size(); ++i)
            if (regions_a[i].contains(qa)) {
                ia = i;
                break;
            }
        std::size_t ib = regions_b.size();
        for (std::size_t i = 0; i < regions_b.size(); ++i)
            if (regions_b[i].contains(qb)) {
                ib = i;
                break;
            }
        ++table.counts[table.index(ia, ib)];
    }
    return table;
}

/// Crossing points of an ensemble of paths with a slice.
inline std::vector<std::pair<double, double>> ensemble_crossings(
    const std::vector<SynchronizedPath>& paths, const SliceSpec& slice) {
    std::vector<std::pair<double, double>> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(crossing(p, slice.t_a, slice.t_b));
    return out;
}

} // namespace mtbohm

#endif
