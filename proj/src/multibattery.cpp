#include "aggflex/multibattery.hpp"

#include <chrono>
#include <cmath>

#include "aggflex/containment.hpp"
#include "aggflex/errors.hpp"
#include "aggflex/parallel.hpp"

namespace aggflex {

const char* variant_name(Variant v) {
    return v == Variant::Joint ? "joint" : "clusterwise";
}

Variant variant_from_name(const std::string& name) {
    if (name == "joint") return Variant::Joint;
    if (name == "clusterwise") return Variant::ClusterWise;
    throw_error(ErrorKind::Config, "unknown variant '" + name + "' (expected joint or clusterwise)");
}

Eigen::VectorXd MultiBatteryModel::mu_total() const {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(T);
    for (const Eigen::VectorXd& m : mu) {
        total += m;
    }
    return total;
}

HPolytope MultiBatteryModel::scaled_battery(int k, const Eigen::VectorXd& mu_tilde) const {
    require(k >= 0 && k < this->k(), ErrorKind::Index, "base set index out of range");
    const HPolytope& base = bases[static_cast<size_t>(k)];
    // beta + alpha B_k = { u : H u <= H beta + alpha b_k }
    const Eigen::VectorXd rhs = base.A * mu_tilde + sigma(k) * base.b;
    return HPolytope(base.A, rhs, "scaled_battery_" + std::to_string(k));
}

namespace {

struct SparseAccess {
    // per column / per row nonzeros of the constraint matrix
    std::vector<std::vector<std::pair<Eigen::Index, double>>> cols;
    std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;

    explicit SparseAccess(const Eigen::SparseMatrix<double>& A) {
        cols.resize(static_cast<size_t>(A.cols()));
        rows.resize(static_cast<size_t>(A.rows()));
        for (int c = 0; c < A.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it) {
                cols[static_cast<size_t>(c)].push_back({it.row(), it.value()});
                rows[static_cast<size_t>(it.row())].push_back({c, it.value()});
            }
        }
    }
};

struct JointLayout {
    std::vector<BlockId> mu;               // K
    BlockId sigma = -1;                    // K-vector block
    std::vector<BlockId> gamma;            // N (or |C_k| for cluster-wise)
    std::vector<std::vector<BlockId>> Gam; // [k][i]
    std::vector<std::vector<BlockId>> Lam; // [k][i]
};

/// Containment rows for one EV i against base sets in `ks`:
///   Lambda_{k,i} A = A Gamma_{k,i}   for k in ks
///   sum_k Lambda_{k,i} b_k <= h_i - A gamma_i
void add_containment_rows(ConicProgram& prog, const SparseAccess& acc, Eigen::Index T,
                          Eigen::Index rows4T, const Eigen::VectorXd& h_i, BlockId gamma_i,
                          const std::vector<BlockId>& Gammas, const std::vector<BlockId>& Lambdas,
                          const std::vector<const Eigen::VectorXd*>& base_rhs) {
    const size_t K = Gammas.size();
    for (size_t k = 0; k < K; ++k) {
        for (Eigen::Index c = 0; c < T; ++c) {
            for (Eigen::Index r = 0; r < rows4T; ++r) {
                std::vector<Term> row;
                row.reserve(acc.cols[static_cast<size_t>(c)].size() +
                            acc.rows[static_cast<size_t>(r)].size());
                for (const auto& [j, v] : acc.cols[static_cast<size_t>(c)]) {
                    row.push_back(Term{Lambdas[k], prog.flat(Lambdas[k], r, j), v});
                }
                for (const auto& [j, v] : acc.rows[static_cast<size_t>(r)]) {
                    row.push_back(Term{Gammas[k], prog.flat(Gammas[k], j, c), -v});
                }
                prog.add_equality(row, 0.0);
            }
        }
    }
    for (Eigen::Index r = 0; r < rows4T; ++r) {
        std::vector<Term> row;
        for (size_t k = 0; k < K; ++k) {
            const Eigen::VectorXd& bk = *base_rhs[k];
            for (Eigen::Index j = 0; j < rows4T; ++j) {
                if (bk(j) != 0.0) {
                    row.push_back(Term{Lambdas[k], prog.flat(Lambdas[k], r, j), bk(j)});
                }
            }
        }
        for (const auto& [j, v] : acc.rows[static_cast<size_t>(r)]) {
            row.push_back(Term{gamma_i, j, v});
        }
        prog.add_inequality(row, h_i(r));
    }
}

/// Objective || A mu_k + (sigma_k - |C_k|) b_k || for one base set.
void add_surrogate_norm(ConicProgram& prog, const SparseAccess& acc, Eigen::Index rows4T,
                        NormKind norm, BlockId mu_k, BlockId sigma_block, Eigen::Index sigma_index,
                        const Eigen::VectorXd& b_k, double cluster_size) {
    std::vector<MapEntry> entries;
    for (size_t c = 0; c < acc.cols.size(); ++c) {
        for (const auto& [r, v] : acc.cols[c]) {
            entries.push_back(MapEntry{r, mu_k, static_cast<Eigen::Index>(c), v});
        }
    }
    for (Eigen::Index r = 0; r < rows4T; ++r) {
        if (b_k(r) != 0.0) {
            entries.push_back(MapEntry{r, sigma_block, sigma_index, b_k(r)});
        }
    }
    prog.add_norm_term(norm, rows4T, entries, -cluster_size * b_k);
}

} // namespace

std::vector<ConicProgram> build_approx_programs(const std::vector<FlexibilitySet>& flex_sets,
                                                const Clustering& clustering,
                                                const ChargingGrid& grid, NormKind norm,
                                                Variant variant) {
    const int N = static_cast<int>(flex_sets.size());
    const int K = clustering.k();
    require(N >= 1, ErrorKind::Config, "approximation needs at least one flexibility set");
    require(static_cast<int>(clustering.assignments.size()) == N, ErrorKind::DimensionMismatch,
            "clustering does not cover the EV index set");
    const Eigen::Index T = grid.periods();
    const Eigen::Index rows4T = 4 * T;
    for (const FlexibilitySet& f : flex_sets) {
        require(f.h.size() == rows4T, ErrorKind::DimensionMismatch,
                "flexibility set is not on this grid");
    }
    for (const Eigen::VectorXd& c : clustering.centroids) {
        require(c.size() == rows4T, ErrorKind::DimensionMismatch, "centroid is not a 4T vector");
    }

    const SparseAccess acc(grid.constraint_matrix());
    std::vector<ConicProgram> programs;

    if (variant == Variant::Joint) {
        ConicProgram prog;
        JointLayout ly;
        for (int k = 0; k < K; ++k) {
            ly.mu.push_back(prog.add_block("mu_" + std::to_string(k), T));
        }
        ly.sigma = prog.add_block("sigma", K);
        prog.set_nonnegative(ly.sigma);
        for (int i = 0; i < N; ++i) {
            ly.gamma.push_back(prog.add_block("gamma_" + std::to_string(i), T));
        }
        ly.Gam.resize(static_cast<size_t>(K));
        ly.Lam.resize(static_cast<size_t>(K));
        for (int k = 0; k < K; ++k) {
            for (int i = 0; i < N; ++i) {
                ly.Gam[static_cast<size_t>(k)].push_back(prog.add_block(
                    "Gamma_" + std::to_string(k) + "_" + std::to_string(i), T, T));
                const BlockId lam = prog.add_block(
                    "Lambda_" + std::to_string(k) + "_" + std::to_string(i), rows4T, rows4T);
                prog.set_nonnegative(lam);
                ly.Lam[static_cast<size_t>(k)].push_back(lam);
            }
        }

        // sum_k mu_k = sum_i gamma_i
        for (Eigen::Index t = 0; t < T; ++t) {
            std::vector<Term> row;
            for (int k = 0; k < K; ++k) {
                row.push_back(Term{ly.mu[static_cast<size_t>(k)], t, 1.0});
            }
            for (int i = 0; i < N; ++i) {
                row.push_back(Term{ly.gamma[static_cast<size_t>(i)], t, -1.0});
            }
            prog.add_equality(row, 0.0);
        }
        // sigma_k I = sum_i Gamma_{k,i}
        for (int k = 0; k < K; ++k) {
            for (Eigen::Index c = 0; c < T; ++c) {
                for (Eigen::Index r = 0; r < T; ++r) {
                    std::vector<Term> row;
                    for (int i = 0; i < N; ++i) {
                        const BlockId g = ly.Gam[static_cast<size_t>(k)][static_cast<size_t>(i)];
                        row.push_back(Term{g, prog.flat(g, r, c), 1.0});
                    }
                    if (r == c) {
                        row.push_back(Term{ly.sigma, k, -1.0});
                    }
                    prog.add_equality(row, 0.0);
                }
            }
        }
        // containment of gamma_i + sum_k Gamma_{k,i} B_k in U_i
        for (int i = 0; i < N; ++i) {
            std::vector<BlockId> gammas, lambdas;
            std::vector<const Eigen::VectorXd*> rhs;
            for (int k = 0; k < K; ++k) {
                gammas.push_back(ly.Gam[static_cast<size_t>(k)][static_cast<size_t>(i)]);
                lambdas.push_back(ly.Lam[static_cast<size_t>(k)][static_cast<size_t>(i)]);
                rhs.push_back(&clustering.centroids[static_cast<size_t>(k)]);
            }
            add_containment_rows(prog, acc, T, rows4T, flex_sets[static_cast<size_t>(i)].h,
                                 ly.gamma[static_cast<size_t>(i)], gammas, lambdas, rhs);
        }
        for (int k = 0; k < K; ++k) {
            add_surrogate_norm(prog, acc, rows4T, norm, ly.mu[static_cast<size_t>(k)], ly.sigma, k,
                               clustering.centroids[static_cast<size_t>(k)],
                               clustering.sizes[static_cast<size_t>(k)]);
        }
        programs.push_back(std::move(prog));
        return programs;
    }

    // Cluster-wise: K independent programs over the cluster's own EVs.
    for (int k = 0; k < K; ++k) {
        ConicProgram prog;
        const BlockId mu_k = prog.add_block("mu", T);
        const BlockId sigma_k = prog.add_block("sigma", 1);
        prog.set_nonnegative(sigma_k);
        std::vector<std::vector<Term>> mu_rows(static_cast<size_t>(T));
        for (Eigen::Index t = 0; t < T; ++t) {
            mu_rows[static_cast<size_t>(t)].push_back(Term{mu_k, t, -1.0});
        }
        std::vector<BlockId> gamma_blocks;
        for (int i = 0; i < N; ++i) {
            if (clustering.assignments[static_cast<size_t>(i)] != k) {
                continue;
            }
            const BlockId gamma_i = prog.add_block("gamma_" + std::to_string(i), T);
            const BlockId Gamma_i = prog.add_block("Gamma_" + std::to_string(i), T, T);
            const BlockId Lambda_i =
                prog.add_block("Lambda_" + std::to_string(i), rows4T, rows4T);
            prog.set_nonnegative(Lambda_i);
            for (Eigen::Index t = 0; t < T; ++t) {
                mu_rows[static_cast<size_t>(t)].push_back(Term{gamma_i, t, 1.0});
            }
            gamma_blocks.push_back(Gamma_i);
            add_containment_rows(prog, acc, T, rows4T, flex_sets[static_cast<size_t>(i)].h,
                                 gamma_i, {Gamma_i}, {Lambda_i},
                                 {&clustering.centroids[static_cast<size_t>(k)]});
        }
        // sum_{i in C_k} gamma_i = mu_k
        for (Eigen::Index t = 0; t < T; ++t) {
            prog.add_equality(mu_rows[static_cast<size_t>(t)], 0.0);
        }
        // sigma_k I = sum_{i in C_k} Gamma_i
        for (Eigen::Index c = 0; c < T; ++c) {
            for (Eigen::Index r = 0; r < T; ++r) {
                std::vector<Term> row;
                for (BlockId g : gamma_blocks) {
                    row.push_back(Term{g, prog.flat(g, r, c), 1.0});
                }
                if (r == c) {
                    row.push_back(Term{sigma_k, 0, -1.0});
                }
                prog.add_equality(row, 0.0);
            }
        }
        add_surrogate_norm(prog, acc, rows4T, norm, mu_k, sigma_k, 0,
                           clustering.centroids[static_cast<size_t>(k)],
                           clustering.sizes[static_cast<size_t>(k)]);
        programs.push_back(std::move(prog));
    }
    return programs;
}

namespace {

/// Power-space views of a solution solved in the grid's representation.
struct SpaceMap {
    const ChargingGrid& grid;

    Eigen::VectorXd point(const Eigen::VectorXd& v) const {
        return grid.representation() == Representation::EnergySpace ? grid.to_power(v) : v;
    }
    Eigen::MatrixXd map(const Eigen::MatrixXd& M) const {
        if (grid.representation() == Representation::EnergySpace) {
            return grid.cumulative_inverse() * M * grid.cumulative_matrix();
        }
        return M;
    }
};

bool verify_theorem_conditions(const ApproximationResult& result,
                               const std::vector<FlexibilitySet>& flex_sets,
                               const Eigen::SparseMatrix<double>& H, double tol_sum,
                               double tol_cert) {
    const MultiBatteryModel& model = result.model;
    const DisaggregationMap& map = result.map;
    const int K = model.k();
    const auto N = static_cast<int>(map.gamma.size());
    const Eigen::Index T = model.T;

    // sum_i gamma_i = sum_k mu_k
    Eigen::VectorXd gsum = Eigen::VectorXd::Zero(T);
    for (const Eigen::VectorXd& g : map.gamma) {
        gsum += g;
    }
    const Eigen::VectorXd mu = model.mu_total();
    double scale = 1.0 + mu.cwiseAbs().maxCoeff();
    if ((gsum - mu).cwiseAbs().maxCoeff() > tol_sum * scale) {
        return false;
    }
    // sum_i Gamma_{k,i} = sigma_k I
    for (int k = 0; k < K; ++k) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(T, T);
        for (int i = 0; i < N; ++i) {
            s += map.Gamma[static_cast<size_t>(k)][static_cast<size_t>(i)];
        }
        s -= model.sigma(k) * Eigen::MatrixXd::Identity(T, T);
        if (s.cwiseAbs().maxCoeff() > tol_sum * (1.0 + std::abs(model.sigma(k)))) {
            return false;
        }
    }
    // certificate conditions per (k, i)
    const Eigen::MatrixXd Hd(H);
    for (int i = 0; i < N; ++i) {
        const Eigen::VectorXd& h_i = flex_sets[static_cast<size_t>(i)].h;
        const double hscale = 1.0 + h_i.cwiseAbs().maxCoeff();
        Eigen::VectorXd lhs = Hd * map.gamma[static_cast<size_t>(i)];
        for (int k = 0; k < K; ++k) {
            const Eigen::MatrixXd& Lam = map.Lambda[static_cast<size_t>(k)][static_cast<size_t>(i)];
            if (Lam.minCoeff() < -1e-9) {
                return false;
            }
            const Eigen::MatrixXd res =
                Lam * Hd - Hd * map.Gamma[static_cast<size_t>(k)][static_cast<size_t>(i)];
            if (res.cwiseAbs().maxCoeff() > tol_cert * (1.0 + Hd.cwiseAbs().maxCoeff())) {
                return false;
            }
            lhs += Lam * model.bases[static_cast<size_t>(k)].b;
        }
        if ((lhs - h_i).maxCoeff() > tol_cert * hscale) {
            return false;
        }
    }
    return true;
}

} // namespace

ApproximationResult solve_approximation(const std::vector<FlexibilitySet>& flex_sets,
                                        const Clustering& clustering, const ChargingGrid& grid,
                                        NormKind norm, Variant variant,
                                        const SolverConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const int N = static_cast<int>(flex_sets.size());
    const int K = clustering.k();
    const Eigen::Index T = grid.periods();

    std::vector<ConicProgram> programs =
        build_approx_programs(flex_sets, clustering, grid, norm, variant);

    ApproximationResult result;
    result.variant = variant;
    result.norm = norm;
    result.representation = grid.representation();

    MultiBatteryModel& model = result.model;
    model.T = static_cast<int>(T);
    model.delta_hours = grid.delta_hours();
    model.cluster_sizes = clustering.sizes;
    model.assignments = clustering.assignments;
    model.sigma = Eigen::VectorXd::Zero(K);
    model.mu.assign(static_cast<size_t>(K), Eigen::VectorXd::Zero(T));
    const ChargingGrid power_grid = grid.with_representation(Representation::PowerSpace);
    for (int k = 0; k < K; ++k) {
        model.bases.emplace_back(power_grid.constraint_matrix(),
                                 clustering.centroids[static_cast<size_t>(k)],
                                 "base_" + std::to_string(k));
    }

    DisaggregationMap& map = result.map;
    map.gamma.assign(static_cast<size_t>(N), Eigen::VectorXd::Zero(T));
    map.Gamma.assign(static_cast<size_t>(K),
                     std::vector<Eigen::MatrixXd>(static_cast<size_t>(N),
                                                  Eigen::MatrixXd::Zero(T, T)));
    map.Lambda.assign(static_cast<size_t>(K),
                      std::vector<Eigen::MatrixXd>(static_cast<size_t>(N),
                                                   Eigen::MatrixXd::Zero(4 * T, 4 * T)));

    const SpaceMap space{grid};

    if (variant == Variant::Joint) {
        const Solution sol = solve_conic_program(programs[0], config);
        result.status = sol.status;
        if (sol.status == SolveStatus::Infeasible) {
            throw_error(ErrorKind::Internal,
                        "the approximation program is always feasible; Infeasible signals a bug");
        }
        if (sol.status == SolveStatus::Optimal) {
            // Block order as assembled: K mu blocks, sigma, N gamma blocks,
            // then per (k, i) Gamma and Lambda.
            BlockId next = 0;
            for (int k = 0; k < K; ++k) {
                model.mu[static_cast<size_t>(k)] = space.point(sol.block(next++));
            }
            model.sigma = sol.block(next++);
            for (int i = 0; i < N; ++i) {
                map.gamma[static_cast<size_t>(i)] = space.point(sol.block(next++));
            }
            for (int k = 0; k < K; ++k) {
                for (int i = 0; i < N; ++i) {
                    map.Gamma[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                        space.map(sol.matrix(next++, T, T));
                    map.Lambda[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                        sol.matrix(next++, 4 * T, 4 * T);
                }
            }
        }
    } else {
        std::vector<Solution> sols(static_cast<size_t>(K));
        maybe_parallel_for(K, [&](std::int64_t k) {
            sols[static_cast<size_t>(k)] = solve_conic_program(programs[static_cast<size_t>(k)], config);
        });
        result.status = SolveStatus::Optimal;
        for (int k = 0; k < K; ++k) {
            const Solution& sol = sols[static_cast<size_t>(k)];
            if (sol.status == SolveStatus::Infeasible) {
                throw_error(ErrorKind::Internal,
                            "the approximation program is always feasible; Infeasible signals a bug");
            }
            if (sol.status != SolveStatus::Optimal) {
                result.status = sol.status;
                continue;
            }
            BlockId next = 0;
            model.mu[static_cast<size_t>(k)] = space.point(sol.block(next++));
            model.sigma(k) = sol.block(next++)(0);
            for (int i = 0; i < N; ++i) {
                if (clustering.assignments[static_cast<size_t>(i)] != k) {
                    continue;
                }
                map.gamma[static_cast<size_t>(i)] = space.point(sol.block(next++));
                map.Gamma[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                    space.map(sol.matrix(next++, T, T));
                map.Lambda[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                    sol.matrix(next++, 4 * T, 4 * T);
            }
        }
    }

    result.surrogate_objective = hausdorff_surrogate(result);

    if (result.status == SolveStatus::Optimal) {
        if (!verify_theorem_conditions(result, flex_sets, power_grid.constraint_matrix(), 1e-7,
                                       1e-6)) {
            result.status = SolveStatus::NumericFailure;
        }
    }

    result.solve_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

double hausdorff_surrogate(const ApproximationResult& result) {
    const MultiBatteryModel& model = result.model;
    double total = 0.0;
    for (int k = 0; k < model.k(); ++k) {
        const HPolytope& base = model.bases[static_cast<size_t>(k)];
        const Eigen::VectorXd expr = base.A * model.mu[static_cast<size_t>(k)] +
                                     (model.sigma(k) - model.cluster_sizes[static_cast<size_t>(k)]) *
                                         base.b;
        switch (result.norm) {
            case NormKind::L1: total += expr.lpNorm<1>(); break;
            case NormKind::L2: total += expr.norm(); break;
            case NormKind::Linf: total += expr.lpNorm<Eigen::Infinity>(); break;
        }
    }
    return total;
}

std::optional<std::vector<Eigen::VectorXd>> decompose_into_bases(const Eigen::VectorXd& u,
                                                                 const MultiBatteryModel& model,
                                                                 const SolverConfig& config) {
    const Eigen::Index T = model.T;
    require(u.size() == T, ErrorKind::DimensionMismatch, "profile length mismatch");
    const int K = model.k();
    ConicProgram prog;
    std::vector<BlockId> v;
    for (int k = 0; k < K; ++k) {
        v.push_back(prog.add_block("v_" + std::to_string(k), T));
        add_membership_rows(prog, v.back(), model.bases[static_cast<size_t>(k)]);
    }
    const Eigen::VectorXd target = u - model.mu_total();
    for (Eigen::Index t = 0; t < T; ++t) {
        std::vector<Term> row;
        for (int k = 0; k < K; ++k) {
            if (model.sigma(k) != 0.0) {
                row.push_back(Term{v[static_cast<size_t>(k)], t, model.sigma(k)});
            }
        }
        if (row.empty()) {
            // every sigma_k is zero: membership reduces to u == mu
            if (std::abs(target(t)) > 1e-9) {
                return std::nullopt;
            }
            continue;
        }
        prog.add_equality(row, target(t));
    }
    const Solution sol = solve_linear_program(prog, config);
    if (sol.status == SolveStatus::Infeasible) {
        return std::nullopt;
    }
    require(sol.status == SolveStatus::Optimal, ErrorKind::Solver,
            "base decomposition LP failed numerically");
    std::vector<Eigen::VectorXd> out;
    for (int k = 0; k < K; ++k) {
        out.push_back(sol.block(v[static_cast<size_t>(k)]));
    }
    return out;
}

std::vector<Eigen::VectorXd> disaggregate(const std::vector<Eigen::VectorXd>& v_tilde,
                                          const ApproximationResult& result,
                                          double membership_tol) {
    const MultiBatteryModel& model = result.model;
    const int K = model.k();
    require(static_cast<int>(v_tilde.size()) == K, ErrorKind::DimensionMismatch,
            "one base point per base set is required");
    for (int k = 0; k < K; ++k) {
        require(is_member(model.bases[static_cast<size_t>(k)], v_tilde[static_cast<size_t>(k)],
                          membership_tol),
                ErrorKind::Precondition,
                "base point " + std::to_string(k) + " is outside its base set");
    }
    const auto N = static_cast<int>(result.map.gamma.size());
    std::vector<Eigen::VectorXd> profiles;
    profiles.reserve(static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
        Eigen::VectorXd u_i = result.map.gamma[static_cast<size_t>(i)];
        for (int k = 0; k < K; ++k) {
            u_i += result.map.Gamma[static_cast<size_t>(k)][static_cast<size_t>(i)] *
                   v_tilde[static_cast<size_t>(k)];
        }
        profiles.push_back(std::move(u_i));
    }
    return profiles;
}

bool verify_approximation(const ApproximationResult& result,
                          const std::vector<FlexibilitySet>& flex_sets,
                          const ChargingGrid& grid, double tol_sum, double tol_cert) {
    const ChargingGrid power = grid.with_representation(Representation::PowerSpace);
    return verify_theorem_conditions(result, flex_sets, power.constraint_matrix(), tol_sum,
                                     tol_cert);
}

bool rederive_certificates(ApproximationResult& result,
                           const std::vector<FlexibilitySet>& flex_sets,
                           const ChargingGrid& grid, const SolverConfig& config) {
    const MultiBatteryModel& model = result.model;
    const int K = model.k();
    const auto N = static_cast<int>(flex_sets.size());
    const Eigen::Index T = model.T;
    const ChargingGrid power = grid.with_representation(Representation::PowerSpace);
    const Eigen::SparseMatrix<double>& H = power.constraint_matrix();

    // Product polytope of the base sets: diag(H, ..., H) u <= (b_1 ... b_K).
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd stacked_b(K * 4 * T);
    for (int k = 0; k < K; ++k) {
        for (int c = 0; c < H.outerSize(); ++c) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(H, c); it; ++it) {
                trip.emplace_back(k * 4 * T + it.row(), k * T + c, it.value());
            }
        }
        stacked_b.segment(k * 4 * T, 4 * T) = model.bases[static_cast<size_t>(k)].b;
    }
    Eigen::SparseMatrix<double> stacked_A(K * 4 * T, K * T);
    stacked_A.setFromTriplets(trip.begin(), trip.end());
    const HPolytope product(stacked_A, stacked_b, "base_product");

    for (int i = 0; i < N; ++i) {
        Eigen::MatrixXd Gamma_bar(T, K * T);
        for (int k = 0; k < K; ++k) {
            Gamma_bar.middleCols(k * T, T) =
                result.map.Gamma[static_cast<size_t>(k)][static_cast<size_t>(i)];
        }
        const HPolytope target(H, flex_sets[static_cast<size_t>(i)].h);
        const auto cert = check_ah_in_h(result.map.gamma[static_cast<size_t>(i)], Gamma_bar,
                                        product, target, config);
        if (!cert.has_value()) {
            return false;
        }
        for (int k = 0; k < K; ++k) {
            result.map.Lambda[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                cert->Lambda.middleCols(k * 4 * T, 4 * T);
        }
    }
    return true;
}

std::vector<Eigen::VectorXd> random_base_points(const MultiBatteryModel& model, Rng& rng,
                                                const SolverConfig& config) {
    std::vector<Eigen::VectorXd> points;
    const Eigen::Index T = model.T;
    for (int k = 0; k < model.k(); ++k) {
        const HPolytope& base = model.bases[static_cast<size_t>(k)];
        // Convex mix of three support points in random directions.
        Eigen::MatrixXd verts(T, 3);
        Eigen::VectorXd weights(3);
        for (int j = 0; j < 3; ++j) {
            verts.col(j) = support_point(base, rng.direction(T), config);
            weights(j) = rng.uniform();
        }
        weights /= weights.sum();
        points.push_back(verts * weights);
    }
    return points;
}

} // namespace aggflex
