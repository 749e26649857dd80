#pragma once

// Photon-number moments from quadrature moments, with n = (Q^2 + P^2 - 1) / 2
// per mode.

#include <string>

#include "json.hpp"
#include "qtomo/moment_engine.hpp"

namespace qtomo {

/// 2n = Q^2 + P^2 - 1 in antistandard form.
OperatorPolynomial twice_number_operator();

/// <n> and <n^2> of one mode from its ordered table (degrees 2 and 4).
double photon_mean(const OrderedMoments& table);
double photon_second_moment(const OrderedMoments& table);

enum class CrossRoute { joint, derived_modes };

std::string to_string(CrossRoute route);

/// Joint route when paired data at phases {0, pi/2}^2 exist, else the
/// derived-mode route through fourth moments of modes 3-6.
CrossRoute choose_cross_route(const MomentSource& src);

/// <n1 n2> assembled from commuting cross products.
double photon_cross_value(const MomentSource& src, CrossRoute route);
Estimate photon_cross_correlation(const MomentSource& src);

struct PhotonMomentSet {
    Estimate n1, n2;
    Estimate n1_sq, n2_sq;
    Estimate n1n2;
    CrossRoute cross_route = CrossRoute::joint;
    bool has_cross = false;
};

/// Throws MissingData when degree-4 one-mode data are absent; the cross term
/// is left out (has_cross = false) when neither route has data.
PhotonMomentSet photon_moments(const MomentSource& src, const SolverPhases& phases = {});

nlohmann::json to_json(const PhotonMomentSet& p);

}  // namespace qtomo
