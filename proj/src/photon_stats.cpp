#include "qtomo/photon_stats.hpp"

namespace qtomo {

OperatorPolynomial twice_number_operator() {
    OperatorPolynomial n = OperatorPolynomial::monomial(0, 2);
    n += OperatorPolynomial::monomial(2, 0);
    n += OperatorPolynomial::constant({-1, 0});
    return n;
}

namespace {

Complex lookup(const OrderedMoments& t, const OperatorPolynomial& poly) {
    return expectation(poly, [&t](OrderedMonomial m) { return t.at(m.p_power, m.q_power); });
}

}  // namespace

double photon_mean(const OrderedMoments& table) { return 0.5 * lookup(table, twice_number_operator()).real(); }

double photon_second_moment(const OrderedMoments& table) {
    static const OperatorPolynomial sq = multiply(twice_number_operator(), twice_number_operator());
    Complex v = lookup(table, sq);
    if (std::fabs(v.imag()) > 1e-8 * std::max(1.0, std::fabs(v.real())))
        throw InternalConsistencyError("<n^2> has imaginary residue " + format_number(v.imag(), 3));
    return 0.25 * v.real();
}

std::string to_string(CrossRoute route) { return route == CrossRoute::joint ? "joint" : "derived-modes"; }

CrossRoute choose_cross_route(const MomentSource& src) {
    for (double a : {0.0, kPi / 2})
        for (double b : {0.0, kPi / 2})
            if (!src.has_joint(a, b)) return CrossRoute::derived_modes;
    return CrossRoute::joint;
}

double photon_cross_value(const MomentSource& s, CrossRoute route) {
    const double h = kPi / 2;
    double q1q2, q1p2, p1q2, p1p2;
    if (route == CrossRoute::joint) {
        q1q2 = s.joint_moment(0, 0, 2, 2);
        q1p2 = s.joint_moment(0, h, 2, 2);
        p1q2 = s.joint_moment(h, 0, 2, 2);
        p1p2 = s.joint_moment(h, h, 2, 2);
    } else {
        // (a + b)^4 + (a - b)^4 = 2 (a^4 + 6 a^2 b^2 + b^4) for commuting a, b,
        // with X = (a +- b) / 2 for the derived modes.
        auto pair = [&](int ma, int mb, double theta, double a4, double b4) {
            return (8.0 * (s.slice_moment(ma, theta, 4) + s.slice_moment(mb, theta, 4)) - a4 - b4) / 6.0;
        };
        const double q1 = s.slice_moment(1, 0, 4), p1 = s.slice_moment(1, h, 4);
        const double q2 = s.slice_moment(2, 0, 4), p2 = s.slice_moment(2, h, 4);
        q1q2 = pair(3, 4, 0, q1, q2);
        p1p2 = pair(3, 4, h, p1, p2);
        q1p2 = pair(5, 6, 0, q1, p2);
        p1q2 = pair(5, 6, h, p1, q2);
    }
    const double second = s.slice_moment(1, 0, 2) + s.slice_moment(1, h, 2) + s.slice_moment(2, 0, 2) +
                          s.slice_moment(2, h, 2);
    return 0.25 * (q1q2 + q1p2 + p1q2 + p1p2 - second + 1.0);
}

Estimate photon_cross_correlation(const MomentSource& src) {
    CrossRoute route = choose_cross_route(src);
    return evaluate(src, [route](const MomentSource& s) { return photon_cross_value(s, route); });
}

PhotonMomentSet photon_moments(const MomentSource& src, const SolverPhases& phases) {
    PhotonMomentSet out;
    auto e = evaluate_vector(src, [&phases](const MomentSource& s) {
        std::vector<double> v;
        for (int mode : {1, 2}) {
            OrderedMoments t = solve_ordered_moments(s, {mode, 0.0}, 4, phases, true);
            v.push_back(photon_mean(t));
            v.push_back(photon_second_moment(t));
        }
        return v;
    });
    out.n1 = e[0];
    out.n1_sq = e[1];
    out.n2 = e[2];
    out.n2_sq = e[3];
    out.cross_route = choose_cross_route(src);
    try {
        out.n1n2 = photon_cross_correlation(src);
        out.has_cross = true;
    } catch (const MissingData&) {
        out.has_cross = false;
    }
    return out;
}

nlohmann::json to_json(const PhotonMomentSet& p) {
    auto est = [](Estimate e) { return nlohmann::json{{"value", e.value}, {"stderr", e.error}}; };
    nlohmann::json j = {{"n1", est(p.n1)}, {"n2", est(p.n2)}, {"n1_sq", est(p.n1_sq)}, {"n2_sq", est(p.n2_sq)}};
    if (p.has_cross) {
        j["n1n2"] = est(p.n1n2);
        j["cross_route"] = to_string(p.cross_route);
    }
    return j;
}

}  // namespace qtomo
