#include "mesh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "csv.hpp"
#include "mesh/error.hpp"
#include "mesh/parallel.hpp"
#include "mesh/stats.hpp"

namespace mesh {
namespace {

std::array<double, 5> five(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    return {quantile_sorted(x, 0.5), quantile_sorted(x, 0.025), quantile_sorted(x, 0.25), quantile_sorted(x, 0.75),
            quantile_sorted(x, 0.975)};
}

}  // namespace

DicReport dic_from_deviances(std::span<const double> deviances, double deviance_at_mean, std::string scope) {
    if (deviances.empty()) throw UsageError("DIC needs at least one draw");
    DicReport r;
    r.scope = std::move(scope);
    r.mean_deviance = mean(deviances);
    r.deviance_at_mean = deviance_at_mean;
    r.p_d = r.mean_deviance - r.deviance_at_mean;
    r.dic = 2.0 * r.mean_deviance - r.deviance_at_mean;
    if (!std::isfinite(r.p_d)) throw NumericalError("nonfinite effective parameter count");
    return r;
}

DicReport dic(const PosteriorSamples& samples, const Design& dataset, std::string scope) {
    if (samples.n_draws == 0) throw UsageError("DIC needs retained draws");
    if (samples.n_predictors() != dataset.n_predictors())
        throw UsageError("samples and dataset registries differ in size");
    std::vector<double> dev(samples.n_draws);
    for (std::size_t d = 0; d < samples.n_draws; ++d) dev[d] = -2.0 * total_loglik(dataset, samples.coefficients(d));
    return dic_from_deviances(dev, -2.0 * total_loglik(dataset, samples.posterior_mean()), std::move(scope));
}

double oos_deviance(const Coefficients& c, const Design& test) {
    if (test.n_rows() == 0) return 0.0;
    return -2.0 * total_loglik(test, c);
}

GNet g_net(double omega, double delta, double seconds, double r_base, GNetConvention convention) {
    if (!std::isfinite(omega) || !std::isfinite(delta) || !std::isfinite(seconds) || !std::isfinite(r_base))
        throw UsageError("g_net needs finite inputs");
    const double base = std::exp(r_base);
    GNet g;
    g.scored = base * std::expm1(omega) * seconds;
    g.stopped = base * std::expm1(-delta) * seconds;
    g.net = convention == GNetConvention::TableConsistent ? g.scored + g.stopped : g.scored - g.stopped;
    return g;
}

std::vector<ContributionInput> read_contribution_input(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty contribution input");
    const auto header = detail::split_csv(detail::trim(line));
    const std::vector<std::string> want{"player", "position", "time_s", "omega", "delta"};
    if (header != want) throw DataError("line 1: expected header player,position,time_s,omega,delta");
    std::vector<ContributionInput> out;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv(detail::trim(line));
        if (f.size() != 5) throw DataError("line " + std::to_string(n) + ": expected 5 fields");
        ContributionInput r;
        r.player = f[0];
        r.position = f[1];
        try {
            r.seconds = std::stod(f[2]);
            r.omega = std::stod(f[3]);
            r.delta = std::stod(f[4]);
        } catch (const std::exception&) {
            throw DataError("line " + std::to_string(n) + ": malformed number");
        }
        if (!(r.seconds >= 0.0)) throw DataError("line " + std::to_string(n) + ": negative time");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ContributionRow> contribution_report(const std::vector<ContributionInput>& input, double r_base,
                                                 GNetConvention convention) {
    std::vector<ContributionRow> rows;
    for (const auto& in : input) {
        ContributionRow r;
        r.input = in;
        r.g = g_net(in.omega, in.delta, in.seconds, r_base, convention);
        rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ContributionRow& a, const ContributionRow& b) { return a.g.net > b.g.net; });
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
    return rows;
}

void write_contribution_csv(std::ostream& out, const std::vector<ContributionRow>& rows) {
    out << "rank,player,position,time_s,scored,stopped,g_net,pr_best\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, ",%.0f,%.2f,%.2f,%.2f,", r.input.seconds, r.g.scored, r.g.stopped, r.g.net);
        out << r.rank << ',' << detail::csv_quote(r.input.player) << ',' << r.input.position << buf;
        if (!std::isnan(r.prob_best)) {
            std::snprintf(buf, sizeof buf, "%.1f", 100.0 * r.prob_best);
            out << buf;
        }
        out << '\n';
    }
}

std::vector<double> prob_best(std::span<const double> scores, std::size_t n_players) {
    if (n_players == 0) return {};
    if (scores.size() % n_players != 0) throw UsageError("score matrix is not draws x players");
    const std::size_t n_draws = scores.size() / n_players;
    if (n_draws == 0) throw UsageError("prob_best needs at least one draw");
    std::vector<double> p(n_players, 0.0);
    std::vector<std::size_t> best;
    for (std::size_t d = 0; d < n_draws; ++d) {
        const double* row = scores.data() + d * n_players;
        const double mx = *std::max_element(row, row + n_players);
        best.clear();
        for (std::size_t j = 0; j < n_players; ++j)
            if (row[j] == mx) best.push_back(j);
        for (const auto j : best) p[j] += 1.0 / static_cast<double>(best.size());
    }
    for (double& v : p) v /= static_cast<double>(n_draws);
    return p;
}

std::vector<double> prob_best(const PosteriorSamples& samples, const std::vector<std::uint32_t>& predictors,
                              RankBy by, const std::vector<double>& seconds, double r_base) {
    if (by == RankBy::GNet && seconds.size() != predictors.size())
        throw UsageError("G_net ranking needs seconds for every predictor");
    const std::size_t n = predictors.size();
    std::vector<double> scores(samples.n_draws * n);
    for (std::size_t d = 0; d < samples.n_draws; ++d)
        for (std::size_t j = 0; j < n; ++j) {
            const auto p = predictors[j];
            const double w = samples.at(d, PosteriorSamples::omega_col(p));
            const double dl = samples.at(d, PosteriorSamples::delta_col(p));
            scores[d * n + j] = by == RankBy::NetRating ? w - dl : g_net(w, dl, seconds[j], r_base).net;
        }
    return prob_best(scores, n);
}

double laplace_fraction(const PenaltyFamily& f) {
    switch (f.kind) {
        case PenaltyFamily::Kind::L1: return 1.0;
        case PenaltyFamily::Kind::L2: return 0.0;
        case PenaltyFamily::Kind::L1L2: {
            const double a = f.lambda / std::numbers::sqrt2;
            return a / (a + 1.0 / std::sqrt(f.sigma2));
        }
    }
    return 0.0;
}

std::vector<SpreadSummary> variance_decomposition(const PosteriorSamples& samples) {
    if (samples.n_draws == 0) throw UsageError("variance decomposition needs retained draws");
    std::vector<SpreadSummary> out;
    for (const auto& slot : samples.hyper_slots) {
        std::vector<std::uint32_t> members;
        for (std::uint32_t p = 0; p < samples.n_predictors(); ++p) {
            const auto& pr = samples.registry[p];
            if (pr.group != slot.group) continue;
            if (slot.side == Side::Offense && pr.defense_only) continue;
            members.push_back(p);
        }
        if (members.empty()) continue;
        std::vector<double> sp(samples.n_draws), fr(samples.n_draws), x(members.size());
        for (std::size_t d = 0; d < samples.n_draws; ++d) {
            for (std::size_t k = 0; k < members.size(); ++k)
                x[k] = samples.at(d, slot.side == Side::Offense ? PosteriorSamples::omega_col(members[k])
                                                                : PosteriorSamples::delta_col(members[k]));
            sp[d] = spread(x);
            const double lambda = slot.lambda_col == SIZE_MAX ? 0.0 : samples.at(d, slot.lambda_col);
            const double sigma2 = slot.sigma2_col == SIZE_MAX ? 0.0 : samples.at(d, slot.sigma2_col);
            fr[d] = laplace_fraction(PenaltyFamily{slot.kind, lambda, sigma2});
        }
        SpreadSummary s{slot.group, slot.side, five(std::move(sp)), five(std::move(fr))};
        out.push_back(s);
    }
    return out;
}

}  // namespace mesh
