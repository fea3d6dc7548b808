#ifndef AGGFLEX_CONIC_PROGRAM_HPP
#define AGGFLEX_CONIC_PROGRAM_HPP

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "aggflex/errors.hpp"

namespace aggflex {

enum class NormKind { L1, L2, Linf };

const char* norm_name(NormKind kind);
NormKind norm_from_name(const std::string& name);

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericFailure };

const char* status_name(SolveStatus status);

/// Gateway configuration. `backend` selects the solving engine: "ipm"
/// (LP + second-order cones) or "lp" (same engine restricted to linear
/// cones; L2 norm terms are rejected with BackendUnsupported).
struct SolverConfig {
    std::string backend = "ipm";
    double feas_tol = 1e-7;
    double opt_tol = 1e-8;
    int max_iters = 100;
};

using BlockId = int;

/// One entry of a sparse row: coefficient on flat element `index` of a
/// variable block (matrix blocks are flattened column-major).
struct Term {
    BlockId block;
    Eigen::Index index;
    double coeff;
};

/// Entry of the affine map inside a norm term.
struct MapEntry {
    Eigen::Index row;
    BlockId block;
    Eigen::Index index;
    double coeff;
};

struct Solution {
    SolveStatus status = SolveStatus::NumericFailure;
    std::vector<Eigen::VectorXd> values; // indexed by BlockId
    double objective = 0.0;
    double solve_time_ms = 0.0;
    int iterations = 0;

    const Eigen::VectorXd& block(BlockId id) const { return values.at(static_cast<size_t>(id)); }

    /// Matrix view of a block solved as a flattened rows x cols variable.
    Eigen::MatrixXd matrix(BlockId id, Eigen::Index rows, Eigen::Index cols) const {
        const Eigen::VectorXd& v = block(id);
        require(v.size() == rows * cols, ErrorKind::DimensionMismatch,
                "solution block does not reshape to the requested matrix");
        return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
    }
};

/// Declarative convex program: named variable blocks, sparse linear
/// equalities and <= inequalities, elementwise-nonnegative blocks, and an
/// objective made of linear costs plus norms of affine expressions.
/// L1/Linf norms lower to epigraph LP rows; L2 norms become second-order
/// cones at solve time.
class ConicProgram {
  public:
    BlockId add_block(std::string name, Eigen::Index rows, Eigen::Index cols = 1);

    Eigen::Index block_size(BlockId id) const;
    Eigen::Index flat(BlockId id, Eigen::Index row, Eigen::Index col) const;
    Eigen::Index num_declared_variables() const;
    Eigen::Index num_blocks() const { return static_cast<Eigen::Index>(blocks_.size()); }
    const std::string& block_name(BlockId id) const;

    void add_equality(const std::vector<Term>& terms, double rhs);
    void add_inequality(const std::vector<Term>& terms, double rhs);
    void set_nonnegative(BlockId id);
    void add_linear_cost(BlockId id, Eigen::Index index, double coeff);
    void add_norm_term(NormKind kind, Eigen::Index rows, const std::vector<MapEntry>& entries,
                       const Eigen::VectorXd& offset);

    /// Tags a block with an elimination group for block-structured
    /// programs. Rows touching one group are eliminated with it; rows
    /// touching several groups (and untagged blocks) form the coupling
    /// border and are eliminated last. Purely a performance hint.
    void set_block_group(BlockId id, int group);

    Eigen::Index num_equalities() const { return static_cast<Eigen::Index>(eq_rhs_.size()); }
    Eigen::Index num_inequalities() const { return static_cast<Eigen::Index>(ineq_rhs_.size()); }
    bool has_l2_terms() const;

    /// Re-checks that every stored row references declared blocks with
    /// in-range indices (the structural audit; insertion already enforces it).
    bool well_formed() const;

    /// Objective evaluated directly at a candidate point (norms computed
    /// exactly, not through epigraph variables).
    double evaluate_objective(const Solution& solution) const;

    /// Worst violations at a candidate point, for verification.
    double max_equality_residual(const Solution& solution) const;
    double max_inequality_violation(const Solution& solution) const;

  private:
    friend Solution solve_program(const ConicProgram&, const SolverConfig&, bool);

    struct Block {
        std::string name;
        Eigen::Index rows;
        Eigen::Index cols;
        Eigen::Index size;
        bool nonneg = false;
        int group = -1;
    };

    struct NormTerm {
        NormKind kind;
        Eigen::Index rows;
        std::vector<MapEntry> entries;
        Eigen::VectorXd offset;
    };

    void check_term(const Term& term) const;

    std::vector<Block> blocks_;
    bool any_group_ = false;
    std::vector<std::vector<Term>> eq_rows_;
    std::vector<double> eq_rhs_;
    std::vector<std::vector<Term>> ineq_rows_;
    std::vector<double> ineq_rhs_;
    std::vector<std::pair<BlockId, std::pair<Eigen::Index, double>>> linear_costs_;
    std::vector<NormTerm> norm_terms_;
};

/// Solves a program with no L2 norm terms (pure LP after epigraph
/// lowering). Throws ErrorKind::Model when an L2 term is present.
Solution solve_linear_program(const ConicProgram& prog, const SolverConfig& config = {});

/// Solves the full program; L2 terms require an SOC-capable backend.
Solution solve_conic_program(const ConicProgram& prog, const SolverConfig& config = {});

} // namespace aggflex

#endif
