#pragma once

// One-mode Heisenberg algebra with [Q, P] = i, reduced to antistandard order:
// every monomial is written P^m Q^k (all P's to the left of all Q's).

#include <compare>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtomo/common.hpp"

namespace qtomo {

/// The operator P^m Q^k for one fixed mode.
struct OrderedMonomial {
    int p_power = 0;
    int q_power = 0;

    int degree() const { return p_power + q_power; }
    auto operator<=>(const OrderedMonomial&) const = default;
};

/// a + b i with integer a, b. Commutator reductions only ever produce these.
struct GaussianInteger {
    long long re = 0;
    long long im = 0;

    bool is_zero() const { return re == 0 && im == 0; }
    Complex to_complex() const { return {static_cast<double>(re), static_cast<double>(im)}; }

    friend GaussianInteger operator+(GaussianInteger a, GaussianInteger b) { return {a.re + b.re, a.im + b.im}; }
    friend GaussianInteger operator-(GaussianInteger a, GaussianInteger b) { return {a.re - b.re, a.im - b.im}; }
    friend GaussianInteger operator*(GaussianInteger a, GaussianInteger b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend bool operator==(GaussianInteger, GaussianInteger) = default;
};

inline constexpr GaussianInteger kImaginaryUnit{0, 1};

/// Finite sum of antistandard monomials with exact Gaussian-integer coefficients.
class OperatorPolynomial {
public:
    OperatorPolynomial() = default;

    static OperatorPolynomial constant(GaussianInteger c);
    static OperatorPolynomial monomial(int p_power, int q_power, GaussianInteger c = {1, 0});

    void add(OrderedMonomial m, GaussianInteger c);
    const std::map<OrderedMonomial, GaussianInteger>& terms() const { return terms_; }
    GaussianInteger coefficient(OrderedMonomial m) const;

    /// Highest total degree among the terms; -1 for the zero polynomial.
    int degree() const;
    bool is_zero() const { return terms_.empty(); }

    OperatorPolynomial& operator+=(const OperatorPolynomial& other);
    OperatorPolynomial scaled(GaussianInteger c) const;

    /// Renders e.g. "P^2 Q + 2i P".
    std::string to_string() const;

    friend OperatorPolynomial operator+(OperatorPolynomial a, const OperatorPolynomial& b) { return a += b; }
    friend bool operator==(const OperatorPolynomial&, const OperatorPolynomial&) = default;

private:
    std::map<OrderedMonomial, GaussianInteger> terms_;
};

enum class Letter { Q, P };
using Word = std::vector<Letter>;

/// Parses strings like "QPP" or "Q P P"; throws InvalidArgument on other letters.
Word parse_word(std::string_view text);

/// Rewrites a word in Q, P into antistandard order using QP = PQ + i.
OperatorPolynomial reduce_to_antistandard(std::span<const Letter> word, int max_order = kMaxOrder);

/// Product of two antistandard polynomials, reduced back to antistandard order.
OperatorPolynomial multiply(const OperatorPolynomial& a, const OperatorPolynomial& b, int max_order = kMaxOrder);

/// Complex-weighted antistandard polynomial (coefficients evaluated at real parameters).
using ComplexPolynomial = std::map<OrderedMonomial, Complex>;

/// One term of the symbolic expansion of (mu Q + nu P)^n:
/// coeff * mu^mu_power * nu^nu_power * monomial.
struct PowerTerm {
    int mu_power = 0;
    int nu_power = 0;
    OrderedMonomial monomial;
    GaussianInteger coeff;
};

/// Exact symbolic expansion of (mu Q + nu P)^n in antistandard order.
const std::vector<PowerTerm>& quadrature_power_terms(int n);

/// (mu Q + nu P)^n reduced to antistandard order and evaluated at (mu, nu).
ComplexPolynomial expand_quadrature_power(double mu, double nu, int n);

/// Weyl-symmetric (fully symmetrized) product of q_power Q's and p_power P's,
/// written in antistandard order.
const ComplexPolynomial& weyl_symmetrized(int q_power, int p_power);

/// Classical limit: keeps only the top-degree terms (each commutator lowers the
/// degree by 2) and evaluates them with commuting scalars q, p.
double classical_limit(const ComplexPolynomial& poly, double q, double p);

/// Expectation of a polynomial given a lookup for <P^m Q^k>.
Complex expectation(const ComplexPolynomial& poly, const std::function<Complex(OrderedMonomial)>& moment);
Complex expectation(const OperatorPolynomial& poly, const std::function<Complex(OrderedMonomial)>& moment);

std::string to_string(const ComplexPolynomial& poly);

}  // namespace qtomo
