#include "aggflex/conic_program.hpp"

#include <chrono>
#include <cmath>

#include "aggflex/ipm.hpp"

namespace aggflex {

const char* norm_name(NormKind kind) {
    switch (kind) {
        case NormKind::L1: return "l1";
        case NormKind::L2: return "l2";
        case NormKind::Linf: return "linf";
    }
    return "l2";
}

NormKind norm_from_name(const std::string& name) {
    if (name == "l1") return NormKind::L1;
    if (name == "l2") return NormKind::L2;
    if (name == "linf") return NormKind::Linf;
    throw_error(ErrorKind::Config, "unknown norm '" + name + "' (expected l1, l2 or linf)");
}

const char* status_name(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::NumericFailure: return "numeric_failure";
    }
    return "numeric_failure";
}

BlockId ConicProgram::add_block(std::string name, Eigen::Index rows, Eigen::Index cols) {
    require(rows >= 1 && cols >= 1, ErrorKind::Model, "variable block must have positive shape");
    Block b;
    b.name = std::move(name);
    b.rows = rows;
    b.cols = cols;
    b.size = rows * cols;
    blocks_.push_back(std::move(b));
    return static_cast<BlockId>(blocks_.size() - 1);
}

Eigen::Index ConicProgram::block_size(BlockId id) const {
    require(id >= 0 && static_cast<size_t>(id) < blocks_.size(), ErrorKind::Model,
            "unknown variable block");
    return blocks_[static_cast<size_t>(id)].size;
}

Eigen::Index ConicProgram::flat(BlockId id, Eigen::Index row, Eigen::Index col) const {
    const Block& b = blocks_.at(static_cast<size_t>(id));
    require(row >= 0 && row < b.rows && col >= 0 && col < b.cols, ErrorKind::Model,
            "block index out of range");
    return row + col * b.rows;
}

Eigen::Index ConicProgram::num_declared_variables() const {
    Eigen::Index total = 0;
    for (const Block& b : blocks_) {
        total += b.size;
    }
    return total;
}

const std::string& ConicProgram::block_name(BlockId id) const {
    return blocks_.at(static_cast<size_t>(id)).name;
}

void ConicProgram::check_term(const Term& term) const {
    require(term.block >= 0 && static_cast<size_t>(term.block) < blocks_.size(),
            ErrorKind::Model, "row references an undeclared block");
    require(term.index >= 0 && term.index < blocks_[static_cast<size_t>(term.block)].size,
            ErrorKind::Model, "row references an out-of-range element");
}

void ConicProgram::add_equality(const std::vector<Term>& terms, double rhs) {
    for (const Term& t : terms) {
        check_term(t);
    }
    eq_rows_.push_back(terms);
    eq_rhs_.push_back(rhs);
}

void ConicProgram::add_inequality(const std::vector<Term>& terms, double rhs) {
    for (const Term& t : terms) {
        check_term(t);
    }
    ineq_rows_.push_back(terms);
    ineq_rhs_.push_back(rhs);
}

void ConicProgram::set_nonnegative(BlockId id) {
    require(id >= 0 && static_cast<size_t>(id) < blocks_.size(), ErrorKind::Model,
            "unknown variable block");
    blocks_[static_cast<size_t>(id)].nonneg = true;
}

void ConicProgram::add_linear_cost(BlockId id, Eigen::Index index, double coeff) {
    check_term(Term{id, index, coeff});
    linear_costs_.push_back({id, {index, coeff}});
}

void ConicProgram::set_block_group(BlockId id, int group) {
    require(id >= 0 && static_cast<size_t>(id) < blocks_.size(), ErrorKind::Model,
            "unknown variable block");
    require(group >= 0, ErrorKind::Model, "elimination group must be nonnegative");
    blocks_[static_cast<size_t>(id)].group = group;
    any_group_ = true;
}

void ConicProgram::add_norm_term(NormKind kind, Eigen::Index rows,
                                 const std::vector<MapEntry>& entries,
                                 const Eigen::VectorXd& offset) {
    require(rows >= 0, ErrorKind::Model, "norm term with negative row count");
    require(offset.size() == rows, ErrorKind::Model, "norm term offset size mismatch");
    for (const MapEntry& e : entries) {
        require(e.row >= 0 && e.row < rows, ErrorKind::Model, "norm term row out of range");
        check_term(Term{e.block, e.index, e.coeff});
    }
    if (rows == 0) {
        return; // empty norm contributes nothing
    }
    NormTerm term;
    term.kind = kind;
    term.rows = rows;
    term.entries = entries;
    term.offset = offset;
    norm_terms_.push_back(std::move(term));
}

bool ConicProgram::has_l2_terms() const {
    for (const NormTerm& t : norm_terms_) {
        if (t.kind == NormKind::L2) {
            return true;
        }
    }
    return false;
}

bool ConicProgram::well_formed() const {
    auto term_ok = [&](const Term& t) {
        return t.block >= 0 && static_cast<size_t>(t.block) < blocks_.size() && t.index >= 0 &&
               t.index < blocks_[static_cast<size_t>(t.block)].size;
    };
    for (const auto& row : eq_rows_) {
        for (const Term& t : row) {
            if (!term_ok(t)) return false;
        }
    }
    for (const auto& row : ineq_rows_) {
        for (const Term& t : row) {
            if (!term_ok(t)) return false;
        }
    }
    for (const NormTerm& nt : norm_terms_) {
        if (nt.offset.size() != nt.rows) return false;
        for (const MapEntry& e : nt.entries) {
            if (e.row < 0 || e.row >= nt.rows || !term_ok(Term{e.block, e.index, e.coeff})) {
                return false;
            }
        }
    }
    return true;
}

namespace {

double row_value(const std::vector<Term>& row, const Solution& sol) {
    double v = 0.0;
    for (const Term& t : row) {
        v += t.coeff * sol.block(t.block)(t.index);
    }
    return v;
}

} // namespace

double ConicProgram::evaluate_objective(const Solution& sol) const {
    double obj = 0.0;
    for (const auto& lc : linear_costs_) {
        obj += lc.second.second * sol.block(lc.first)(lc.second.first);
    }
    for (const NormTerm& nt : norm_terms_) {
        Eigen::VectorXd expr = nt.offset;
        for (const MapEntry& e : nt.entries) {
            expr(e.row) += e.coeff * sol.block(e.block)(e.index);
        }
        switch (nt.kind) {
            case NormKind::L1: obj += expr.lpNorm<1>(); break;
            case NormKind::L2: obj += expr.norm(); break;
            case NormKind::Linf: obj += expr.lpNorm<Eigen::Infinity>(); break;
        }
    }
    return obj;
}

double ConicProgram::max_equality_residual(const Solution& sol) const {
    double worst = 0.0;
    for (size_t i = 0; i < eq_rows_.size(); ++i) {
        worst = std::max(worst, std::abs(row_value(eq_rows_[i], sol) - eq_rhs_[i]));
    }
    return worst;
}

double ConicProgram::max_inequality_violation(const Solution& sol) const {
    double worst = 0.0;
    for (size_t i = 0; i < ineq_rows_.size(); ++i) {
        worst = std::max(worst, row_value(ineq_rows_[i], sol) - ineq_rhs_[i]);
    }
    for (size_t id = 0; id < blocks_.size(); ++id) {
        if (blocks_[id].nonneg) {
            worst = std::max(worst, -sol.values[id].minCoeff());
        }
    }
    return worst;
}

namespace {

/// Group of a row: the blocks' common group, or border (-1) when the row
/// mixes groups or touches an untagged block.
int common_group(const ConicProgram& prog, const std::vector<Term>& terms,
                 const std::vector<int>& block_groups) {
    (void)prog;
    int group = -2; // unset
    for (const Term& t : terms) {
        const int g = block_groups[static_cast<size_t>(t.block)];
        if (g < 0) {
            return -1;
        }
        if (group == -2) {
            group = g;
        } else if (group != g) {
            return -1;
        }
    }
    return group == -2 ? -1 : group;
}

} // namespace

Solution solve_program(const ConicProgram& prog, const SolverConfig& config, bool allow_l2) {
    const auto t0 = std::chrono::steady_clock::now();

    require(config.backend == "ipm" || config.backend == "lp", ErrorKind::Config,
            "unknown solver backend '" + config.backend + "'");
    if (prog.has_l2_terms()) {
        require(allow_l2, ErrorKind::Model,
                "program contains L2 norm terms; use solve_conic_program");
        require(config.backend != "lp", ErrorKind::BackendUnsupported,
                "backend 'lp' cannot solve programs with L2 norm terms");
    }

    // Flatten declared blocks, then append epigraph variables per norm term.
    const size_t nblocks = prog.blocks_.size();
    std::vector<Eigen::Index> offset(nblocks + 1, 0);
    for (size_t i = 0; i < nblocks; ++i) {
        offset[i + 1] = offset[i] + prog.blocks_[i].size;
    }
    Eigen::Index nvar = offset[nblocks];
    std::vector<Eigen::Index> epi_offset(prog.norm_terms_.size(), 0);
    for (size_t t = 0; t < prog.norm_terms_.size(); ++t) {
        epi_offset[t] = nvar;
        nvar += prog.norm_terms_[t].kind == NormKind::L1 ? prog.norm_terms_[t].rows : 1;
    }

    Eigen::VectorXd c = Eigen::VectorXd::Zero(nvar);
    for (const auto& lc : prog.linear_costs_) {
        c(offset[static_cast<size_t>(lc.first)] + lc.second.first) += lc.second.second;
    }
    for (size_t t = 0; t < prog.norm_terms_.size(); ++t) {
        const auto& nt = prog.norm_terms_[t];
        const Eigen::Index count = nt.kind == NormKind::L1 ? nt.rows : 1;
        for (Eigen::Index j = 0; j < count; ++j) {
            c(epi_offset[t] + j) += 1.0;
        }
    }

    // Equalities.
    std::vector<Eigen::Triplet<double>> eq_trip;
    Eigen::VectorXd b(prog.eq_rhs_.size());
    for (size_t i = 0; i < prog.eq_rows_.size(); ++i) {
        for (const Term& term : prog.eq_rows_[i]) {
            eq_trip.emplace_back(static_cast<Eigen::Index>(i),
                                 offset[static_cast<size_t>(term.block)] + term.index, term.coeff);
        }
        b(static_cast<Eigen::Index>(i)) = prog.eq_rhs_[i];
    }

    // LP cone rows: nonneg blocks, user inequalities, L1/Linf epigraphs.
    std::vector<Eigen::Triplet<double>> g_trip;
    std::vector<double> h_vals;
    Eigen::Index grow = 0;
    auto push_row_terms = [&](const std::vector<Term>& terms, double rhs) {
        for (const Term& term : terms) {
            g_trip.emplace_back(grow, offset[static_cast<size_t>(term.block)] + term.index,
                                term.coeff);
        }
        h_vals.push_back(rhs);
        ++grow;
    };

    for (size_t id = 0; id < nblocks; ++id) {
        if (!prog.blocks_[id].nonneg) {
            continue;
        }
        for (Eigen::Index j = 0; j < prog.blocks_[id].size; ++j) {
            g_trip.emplace_back(grow, offset[id] + j, -1.0);
            h_vals.push_back(0.0);
            ++grow;
        }
    }
    for (size_t i = 0; i < prog.ineq_rows_.size(); ++i) {
        push_row_terms(prog.ineq_rows_[i], prog.ineq_rhs_[i]);
    }
    for (size_t t = 0; t < prog.norm_terms_.size(); ++t) {
        const auto& nt = prog.norm_terms_[t];
        if (nt.kind == NormKind::L2) {
            continue;
        }
        // expr_r - bound_r <= 0 and -expr_r - bound_r <= 0, where bound_r is
        // w_r for L1 and the single t for Linf.
        for (int sign = 0; sign < 2; ++sign) {
            const double sgn = sign == 0 ? 1.0 : -1.0;
            for (Eigen::Index r = 0; r < nt.rows; ++r) {
                const Eigen::Index bound_var =
                    nt.kind == NormKind::L1 ? epi_offset[t] + r : epi_offset[t];
                g_trip.emplace_back(grow + r, bound_var, -1.0);
            }
            for (const MapEntry& e : nt.entries) {
                g_trip.emplace_back(grow + e.row,
                                    offset[static_cast<size_t>(e.block)] + e.index, sgn * e.coeff);
            }
            for (Eigen::Index r = 0; r < nt.rows; ++r) {
                h_vals.push_back(-sgn * nt.offset(r));
            }
            grow += nt.rows;
        }
    }
    const Eigen::Index num_nonneg = grow;

    // SOC blocks, one per L2 term: s = (t, expr) in SOC(rows + 1).
    std::vector<Eigen::Index> soc_dims;
    for (size_t t = 0; t < prog.norm_terms_.size(); ++t) {
        const auto& nt = prog.norm_terms_[t];
        if (nt.kind != NormKind::L2) {
            continue;
        }
        g_trip.emplace_back(grow, epi_offset[t], -1.0);
        h_vals.push_back(0.0);
        ++grow;
        const Eigen::Index base = grow;
        for (const MapEntry& e : nt.entries) {
            g_trip.emplace_back(base + e.row, offset[static_cast<size_t>(e.block)] + e.index,
                                -e.coeff);
        }
        for (Eigen::Index r = 0; r < nt.rows; ++r) {
            h_vals.push_back(nt.offset(r));
        }
        grow += nt.rows;
        soc_dims.push_back(nt.rows + 1);
    }

    require(grow >= 1, ErrorKind::Model,
            "program has no conic constraints (add inequalities or nonnegative blocks)");

    Eigen::SparseMatrix<double> G(grow, nvar);
    G.setFromTriplets(g_trip.begin(), g_trip.end());
    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(prog.eq_rhs_.size()), nvar);
    A.setFromTriplets(eq_trip.begin(), eq_trip.end());
    Eigen::VectorXd h = Eigen::Map<Eigen::VectorXd>(h_vals.data(), static_cast<Eigen::Index>(h_vals.size()));

    ipm::Settings settings;
    settings.feastol = std::min(1e-8, config.feas_tol / 10.0);
    settings.abstol = config.opt_tol;
    settings.reltol = config.opt_tol;
    settings.max_iters = config.max_iters;
    ipm::Result res = ipm::solve(G, A, c, h, b, num_nonneg, soc_dims, settings);

    Solution sol;
    sol.iterations = res.iterations;
    sol.values.resize(nblocks);
    for (size_t i = 0; i < nblocks; ++i) {
        if (res.x.size() >= offset[i + 1]) {
            sol.values[i] = res.x.segment(offset[i], prog.blocks_[i].size);
        } else {
            sol.values[i] = Eigen::VectorXd::Zero(prog.blocks_[i].size);
        }
    }
    sol.objective = res.primal_objective;

    switch (res.code) {
        case ipm::ExitCode::Optimal:
        case ipm::ExitCode::CloseToOptimal:
            sol.status = SolveStatus::Optimal;
            break;
        case ipm::ExitCode::PrimalInfeasible:
        case ipm::ExitCode::CloseToPrimalInfeasible:
            sol.status = SolveStatus::Infeasible;
            break;
        case ipm::ExitCode::DualInfeasible:
        case ipm::ExitCode::CloseToDualInfeasible:
            sol.status = SolveStatus::Unbounded;
            break;
        default:
            sol.status = SolveStatus::NumericFailure;
            break;
    }

    // Certify the returned point: optimal solutions must satisfy the
    // user's constraints to feas_tol, never silently drift.
    if (sol.status == SolveStatus::Optimal) {
        const double b_scale = prog.eq_rhs_.empty()
                                   ? 1.0
                                   : 1.0 + Eigen::Map<const Eigen::VectorXd>(
                                               prog.eq_rhs_.data(),
                                               static_cast<Eigen::Index>(prog.eq_rhs_.size()))
                                               .lpNorm<Eigen::Infinity>();
        double h_scale = 1.0;
        for (double v : prog.ineq_rhs_) {
            h_scale = std::max(h_scale, 1.0 + std::abs(v));
        }
        if (prog.max_equality_residual(sol) > config.feas_tol * b_scale ||
            prog.max_inequality_violation(sol) > config.feas_tol * h_scale) {
            sol.status = SolveStatus::NumericFailure;
        }
    }

    sol.solve_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

Solution solve_linear_program(const ConicProgram& prog, const SolverConfig& config) {
    return solve_program(prog, config, false);
}

Solution solve_conic_program(const ConicProgram& prog, const SolverConfig& config) {
    return solve_program(prog, config, true);
}

} // namespace aggflex
