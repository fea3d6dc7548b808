#include "aggflex/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "aggflex/errors.hpp"
#include "aggflex/parallel.hpp"
#include "aggflex/rng.hpp"

namespace aggflex {

PeakShaveExact peak_shave_exact(const std::vector<FlexibilitySet>& flex_sets,
                                const ChargingGrid& grid, const SolverConfig& config) {
    const auto N = static_cast<int>(flex_sets.size());
    require(N >= 1, ErrorKind::Config, "peak shave needs at least one flexibility set");
    const Eigen::Index T = grid.periods();
    const ChargingGrid power = grid.with_representation(Representation::PowerSpace);

    ConicProgram prog;
    std::vector<BlockId> u_blocks;
    for (int i = 0; i < N; ++i) {
        const BlockId u_i = prog.add_block("u_" + std::to_string(i), T);
        u_blocks.push_back(u_i);
        add_membership_rows(prog, u_i,
                            HPolytope(power.constraint_matrix(), flex_sets[static_cast<size_t>(i)].h));
    }
    std::vector<MapEntry> entries;
    for (Eigen::Index t = 0; t < T; ++t) {
        for (int i = 0; i < N; ++i) {
            entries.push_back(MapEntry{t, u_blocks[static_cast<size_t>(i)], t, 1.0});
        }
    }
    prog.add_norm_term(NormKind::Linf, T, entries, Eigen::VectorXd::Zero(T));

    const Solution sol = solve_linear_program(prog, config);
    require(sol.status == SolveStatus::Optimal, ErrorKind::Solver,
            std::string("exact peak-shave LP did not solve: ") + status_name(sol.status));

    PeakShaveExact out;
    out.aggregate = Eigen::VectorXd::Zero(T);
    for (int i = 0; i < N; ++i) {
        out.profiles.push_back(sol.block(u_blocks[static_cast<size_t>(i)]));
        out.aggregate += out.profiles.back();
    }
    out.peak_kw = out.aggregate.lpNorm<Eigen::Infinity>();
    return out;
}

PeakShaveModel peak_shave_multibattery(const MultiBatteryModel& model,
                                       const SolverConfig& config) {
    const Eigen::Index T = model.T;
    const int K = model.k();
    ConicProgram prog;
    std::vector<BlockId> v_blocks;
    for (int k = 0; k < K; ++k) {
        const BlockId v_k = prog.add_block("v_" + std::to_string(k), T);
        v_blocks.push_back(v_k);
        add_membership_rows(prog, v_k, model.bases[static_cast<size_t>(k)]);
    }
    // || mu + sum_k sigma_k v_k ||_inf
    std::vector<MapEntry> entries;
    for (Eigen::Index t = 0; t < T; ++t) {
        for (int k = 0; k < K; ++k) {
            if (model.sigma(k) != 0.0) {
                entries.push_back(MapEntry{t, v_blocks[static_cast<size_t>(k)], t, model.sigma(k)});
            }
        }
    }
    prog.add_norm_term(NormKind::Linf, T, entries, model.mu_total());

    const Solution sol = solve_linear_program(prog, config);
    require(sol.status == SolveStatus::Optimal, ErrorKind::Solver,
            std::string("multi-battery peak-shave LP did not solve: ") + status_name(sol.status));

    PeakShaveModel out;
    out.aggregate = model.mu_total();
    for (int k = 0; k < K; ++k) {
        out.v_tilde.push_back(sol.block(v_blocks[static_cast<size_t>(k)]));
        out.aggregate += model.sigma(k) * out.v_tilde.back();
    }
    out.peak_kw = out.aggregate.lpNorm<Eigen::Infinity>();
    return out;
}

double suboptimality_gap(double j_k, double j_star) {
    require(j_star >= 0.0, ErrorKind::Domain, "negative baseline peak");
    if (j_star <= 1e-12) {
        if (j_k <= 1e-12) {
            return 0.0;
        }
        throw_error(ErrorKind::DegenerateBaseline,
                    "gap undefined: J* is zero while J(K) is positive");
    }
    return 100.0 * (j_k - j_star) / j_star;
}

ScenarioRanges batch_ranges(const BatchConfig& config) {
    if (config.use_table_ranges) {
        return ScenarioRanges{};
    }
    return ScenarioRanges::scaled(config.periods, config.delta_hours);
}

double quantile_linear(std::vector<double> values, double p) {
    require(!values.empty(), ErrorKind::Domain, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<size_t>(std::floor(h));
    if (lo + 1 >= values.size()) {
        return values.back();
    }
    return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

namespace {

std::vector<TrialResult> run_trial(const BatchConfig& config, int trial) {
    const std::uint64_t trial_seed = derive_seed(config.master_seed, static_cast<std::uint64_t>(trial));
    const ChargingGrid grid(config.periods, config.delta_hours, config.representation);
    const ScenarioRanges ranges = batch_ranges(config);

    std::vector<TrialResult> rows;
    auto base_row = [&](int K) {
        TrialResult row;
        row.trial = trial;
        row.seed = trial_seed;
        row.K = K;
        row.variant = config.variant;
        row.norm = config.norm;
        return row;
    };

    std::vector<FlexibilitySet> sets;
    double j_star = 0.0;
    try {
        const std::vector<EvSpec> specs =
            sample_scenario(config.n_evs, trial_seed, grid, ranges);
        sets.reserve(specs.size());
        for (const EvSpec& spec : specs) {
            sets.push_back(build_flexibility_set(spec, grid, config.solver));
        }
        j_star = peak_shave_exact(sets, grid, config.solver).peak_kw;
    } catch (const Error& e) {
        for (int K : config.k_values) {
            TrialResult row = base_row(K);
            row.status = std::string("scenario_failed:") + e.kind_name();
            rows.push_back(row);
        }
        return rows;
    }

    std::vector<Eigen::VectorXd> h_list;
    for (const FlexibilitySet& s : sets) {
        h_list.push_back(s.h);
    }

    for (int K : config.k_values) {
        TrialResult row = base_row(K);
        row.j_star_kw = j_star;
        try {
            const auto t0 = std::chrono::steady_clock::now();
            const Clustering clustering =
                kmeans_rhs(h_list, K, derive_seed(trial_seed, static_cast<std::uint64_t>(K)),
                           config.kmeans);
            row.cluster_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();

            const ApproximationResult approx = solve_approximation(
                sets, clustering, grid, config.norm, config.variant, config.solver);
            row.solve_ms = approx.solve_ms;
            row.surrogate_objective = approx.surrogate_objective;
            if (approx.status != SolveStatus::Optimal) {
                row.status = std::string("approx_") + status_name(approx.status);
                rows.push_back(row);
                continue;
            }

            const auto t1 = std::chrono::steady_clock::now();
            const PeakShaveModel shave = peak_shave_multibattery(approx.model, config.solver);
            row.shave_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t1)
                    .count();
            row.j_k_kw = shave.peak_kw;
            row.gap_percent = suboptimality_gap(row.j_k_kw, row.j_star_kw);
        } catch (const Error& e) {
            row.status = std::string("failed:") + e.kind_name();
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace

BatchResult run_batch(const BatchConfig& config) {
    require(config.trials >= 1, ErrorKind::Config, "batch needs at least one trial");
    require(!config.k_values.empty(), ErrorKind::Config, "batch needs at least one K");
    for (int K : config.k_values) {
        require(K >= 1 && K <= config.n_evs, ErrorKind::Config,
                "every K must lie in [1, N]");
    }

    const int previous_threads = worker_threads();
    if (config.jobs > 0) {
        set_worker_threads(config.jobs);
    }

    std::vector<std::vector<TrialResult>> per_trial(static_cast<size_t>(config.trials));
    try {
        maybe_parallel_for(config.trials, [&](std::int64_t t) {
            per_trial[static_cast<size_t>(t)] = run_trial(config, static_cast<int>(t));
        });
    } catch (...) {
        set_worker_threads(previous_threads);
        throw;
    }
    set_worker_threads(previous_threads);

    BatchResult result;
    for (const auto& rows : per_trial) {
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    std::sort(result.rows.begin(), result.rows.end(),
              [](const TrialResult& a, const TrialResult& b) {
                  return a.trial != b.trial ? a.trial < b.trial : a.K < b.K;
              });

    for (int K : config.k_values) {
        std::vector<double> gaps;
        for (const TrialResult& row : result.rows) {
            if (row.K == K && row.status == "ok") {
                gaps.push_back(row.gap_percent);
            }
        }
        GapSummary s;
        s.K = K;
        s.count = static_cast<int>(gaps.size());
        if (!gaps.empty()) {
            s.min = quantile_linear(gaps, 0.0);
            s.q1 = quantile_linear(gaps, 0.25);
            s.median = quantile_linear(gaps, 0.5);
            s.q3 = quantile_linear(gaps, 0.75);
            s.max = quantile_linear(gaps, 1.0);
        }
        result.summary.push_back(s);
    }
    return result;
}

} // namespace aggflex
