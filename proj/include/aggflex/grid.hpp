#ifndef AGGFLEX_GRID_HPP
#define AGGFLEX_GRID_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace aggflex {

enum class Representation { PowerSpace, EnergySpace };

const char* representation_name(Representation r);
Representation representation_from_name(const std::string& name);

/// Discretized charging horizon. Holds the cumulative-energy map
/// x = L u (L lower triangular, delta on and below the diagonal), the
/// stacked constraint matrix H = (L, -L, I, -I) of the power-space
/// representation and the sparser H L^{-1} = (I, -I, L^{-1}, -L^{-1})
/// of the energy-space representation. L^{-1} is bidiagonal: 1/delta on
/// the diagonal, -1/delta on the first subdiagonal.
class ChargingGrid {
  public:
    ChargingGrid(int periods, double delta_hours, Representation repr);

    int periods() const { return T_; }
    double delta_hours() const { return delta_; }
    Representation representation() const { return repr_; }

    const Eigen::MatrixXd& cumulative_matrix() const { return L_; }
    const Eigen::MatrixXd& cumulative_inverse() const { return Linv_; }

    const Eigen::SparseMatrix<double>& power_matrix() const { return H_power_; }
    const Eigen::SparseMatrix<double>& energy_matrix() const { return H_energy_; }

    /// Constraint matrix of the grid's representation (H or H L^{-1}).
    const Eigen::SparseMatrix<double>& constraint_matrix() const {
        return repr_ == Representation::PowerSpace ? H_power_ : H_energy_;
    }

    Eigen::VectorXd to_energy(const Eigen::VectorXd& power_profile) const;
    Eigen::VectorXd to_power(const Eigen::VectorXd& energy_profile) const;

    ChargingGrid with_representation(Representation repr) const {
        return ChargingGrid(T_, delta_, repr);
    }

  private:
    int T_;
    double delta_;
    Representation repr_;
    Eigen::MatrixXd L_, Linv_;
    Eigen::SparseMatrix<double> H_power_, H_energy_;
};

ChargingGrid build_charging_grid(int periods, double delta_hours,
                                 Representation repr = Representation::PowerSpace);

} // namespace aggflex

#endif
