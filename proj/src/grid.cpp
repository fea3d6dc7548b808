#include "aggflex/grid.hpp"

#include <string>
#include <vector>

#include "aggflex/errors.hpp"

namespace aggflex {

const char* representation_name(Representation r) {
    return r == Representation::PowerSpace ? "power" : "energy";
}

Representation representation_from_name(const std::string& name) {
    if (name == "power") return Representation::PowerSpace;
    if (name == "energy") return Representation::EnergySpace;
    throw_error(ErrorKind::Config, "unknown representation '" + name + "' (expected power or energy)");
}

ChargingGrid::ChargingGrid(int periods, double delta_hours, Representation repr)
    : T_(periods), delta_(delta_hours), repr_(repr) {
    require(T_ >= 1, ErrorKind::Domain, "grid needs at least one period");
    require(delta_ > 0.0, ErrorKind::Domain, "period length must be positive");

    L_ = Eigen::MatrixXd::Zero(T_, T_);
    for (int i = 0; i < T_; ++i) {
        for (int j = 0; j <= i; ++j) {
            L_(i, j) = delta_;
        }
    }
    Linv_ = Eigen::MatrixXd::Zero(T_, T_);
    for (int i = 0; i < T_; ++i) {
        Linv_(i, i) = 1.0 / delta_;
        if (i > 0) {
            Linv_(i, i - 1) = -1.0 / delta_;
        }
    }

    std::vector<Eigen::Triplet<double>> hp, he;
    for (int i = 0; i < T_; ++i) {
        for (int j = 0; j <= i; ++j) {
            hp.emplace_back(i, j, delta_);
            hp.emplace_back(T_ + i, j, -delta_);
        }
        hp.emplace_back(2 * T_ + i, i, 1.0);
        hp.emplace_back(3 * T_ + i, i, -1.0);

        he.emplace_back(i, i, 1.0);
        he.emplace_back(T_ + i, i, -1.0);
        he.emplace_back(2 * T_ + i, i, 1.0 / delta_);
        he.emplace_back(3 * T_ + i, i, -1.0 / delta_);
        if (i > 0) {
            he.emplace_back(2 * T_ + i, i - 1, -1.0 / delta_);
            he.emplace_back(3 * T_ + i, i - 1, 1.0 / delta_);
        }
    }
    H_power_.resize(4 * T_, T_);
    H_power_.setFromTriplets(hp.begin(), hp.end());
    H_power_.makeCompressed();
    H_energy_.resize(4 * T_, T_);
    H_energy_.setFromTriplets(he.begin(), he.end());
    H_energy_.makeCompressed();
}

Eigen::VectorXd ChargingGrid::to_energy(const Eigen::VectorXd& power_profile) const {
    require(power_profile.size() == T_, ErrorKind::DimensionMismatch,
            "profile length does not match the horizon");
    return L_ * power_profile;
}

Eigen::VectorXd ChargingGrid::to_power(const Eigen::VectorXd& energy_profile) const {
    require(energy_profile.size() == T_, ErrorKind::DimensionMismatch,
            "profile length does not match the horizon");
    return Linv_ * energy_profile;
}

ChargingGrid build_charging_grid(int periods, double delta_hours, Representation repr) {
    return ChargingGrid(periods, delta_hours, repr);
}

} // namespace aggflex
