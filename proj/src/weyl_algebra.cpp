#include "qtomo/weyl_algebra.hpp"

#include <array>
#include <bit>
#include <sstream>

namespace qtomo {

namespace {

GaussianInteger i_power(int j) {
    static constexpr std::array<GaussianInteger, 4> cycle{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
    return cycle[static_cast<std::size_t>(j % 4)];
}

long long exact_binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

long long exact_factorial(int n) {
    long long r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

std::string monomial_text(OrderedMonomial m) {
    std::string s;
    auto factor = [&s](char letter, int power) {
        if (power == 0) return;
        if (!s.empty()) s += ' ';
        s += letter;
        if (power > 1) s += "^" + std::to_string(power);
    };
    factor('P', m.p_power);
    factor('Q', m.q_power);
    return s;
}

// Renders one signed term; returns (is_negative, magnitude text).
std::pair<bool, std::string> term_text(GaussianInteger c, OrderedMonomial m) {
    std::string mono = monomial_text(m);
    bool neg = false;
    std::string coeff;
    if (c.im == 0) {
        neg = c.re < 0;
        long long a = neg ? -c.re : c.re;
        if (a != 1 || mono.empty()) coeff = std::to_string(a);
    } else if (c.re == 0) {
        neg = c.im < 0;
        long long a = neg ? -c.im : c.im;
        coeff = (a == 1 ? "" : std::to_string(a)) + "i";
    } else {
        std::ostringstream os;
        os << '(' << c.re << (c.im < 0 ? "-" : "+") << (c.im < 0 ? -c.im : c.im) << "i)";
        coeff = os.str();
    }
    if (coeff.empty()) return {neg, mono};
    if (mono.empty()) return {neg, coeff};
    return {neg, coeff + " " + mono};
}

// Display order: highest degree first, then more P's first.
bool display_before(OrderedMonomial a, OrderedMonomial b) {
    if (a.degree() != b.degree()) return a.degree() > b.degree();
    return a.p_power > b.p_power;
}

}  // namespace

OperatorPolynomial OperatorPolynomial::constant(GaussianInteger c) { return monomial(0, 0, c); }

OperatorPolynomial OperatorPolynomial::monomial(int p_power, int q_power, GaussianInteger c) {
    if (p_power < 0 || q_power < 0) throw InvalidArgument("monomial powers must be non-negative");
    OperatorPolynomial poly;
    poly.add({p_power, q_power}, c);
    return poly;
}

void OperatorPolynomial::add(OrderedMonomial m, GaussianInteger c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
        it->second = it->second + c;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

GaussianInteger OperatorPolynomial::coefficient(OrderedMonomial m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? GaussianInteger{} : it->second;
}

int OperatorPolynomial::degree() const {
    int d = -1;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
}

OperatorPolynomial& OperatorPolynomial::operator+=(const OperatorPolynomial& other) {
    for (const auto& [m, c] : other.terms_) add(m, c);
    return *this;
}

OperatorPolynomial OperatorPolynomial::scaled(GaussianInteger c) const {
    OperatorPolynomial out;
    for (const auto& [m, v] : terms_) out.add(m, v * c);
    return out;
}

std::string OperatorPolynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::vector<std::pair<OrderedMonomial, GaussianInteger>> items(terms_.begin(), terms_.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return display_before(a.first, b.first); });
    std::string out;
    for (std::size_t k = 0; k < items.size(); ++k) {
        auto [neg, text] = term_text(items[k].second, items[k].first);
        if (k == 0) out += (neg ? "-" : "") + text;
        else out += (neg ? " - " : " + ") + text;
    }
    return out;
}

Word parse_word(std::string_view text) {
    Word w;
    for (char ch : text) {
        if (ch == 'Q' || ch == 'q') w.push_back(Letter::Q);
        else if (ch == 'P' || ch == 'p') w.push_back(Letter::P);
        else if (ch == ' ' || ch == '*') continue;
        else throw InvalidArgument(std::string("word may only contain Q and P, got '") + ch + "'");
    }
    return w;
}

namespace {

using MemoKey = std::string;

MemoKey key_of(std::span<const Letter> word) {
    MemoKey k;
    k.reserve(word.size());
    for (Letter l : word) k.push_back(l == Letter::Q ? 'Q' : 'P');
    return k;
}

OperatorPolynomial reduce_word(const Word& word, std::map<MemoKey, OperatorPolynomial>& memo) {
    auto key = key_of(word);
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    OperatorPolynomial result;
    std::size_t split = word.size();
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
        if (word[i] == Letter::Q && word[i + 1] == Letter::P) {
            split = i;
            break;
        }
    }
    if (split == word.size()) {
        // Already P...PQ...Q.
        int p = 0, q = 0;
        for (Letter l : word) (l == Letter::P ? p : q)++;
        result = OperatorPolynomial::monomial(p, q);
    } else {
        // ...QP... = ...PQ... + i ......
        Word swapped = word;
        std::swap(swapped[split], swapped[split + 1]);
        Word removed;
        removed.reserve(word.size() - 2);
        removed.insert(removed.end(), word.begin(), word.begin() + static_cast<std::ptrdiff_t>(split));
        removed.insert(removed.end(), word.begin() + static_cast<std::ptrdiff_t>(split + 2), word.end());
        result = reduce_word(swapped, memo);
        result += reduce_word(removed, memo).scaled(kImaginaryUnit);
    }
    memo.emplace(std::move(key), result);
    return result;
}

}  // namespace

OperatorPolynomial reduce_to_antistandard(std::span<const Letter> word, int max_order) {
    if (static_cast<int>(word.size()) > max_order)
        throw InvalidArgument("word of length " + std::to_string(word.size()) + " exceeds max order " +
                              std::to_string(max_order));
    std::map<MemoKey, OperatorPolynomial> memo;
    return reduce_word(Word(word.begin(), word.end()), memo);
}

OperatorPolynomial multiply(const OperatorPolynomial& a, const OperatorPolynomial& b, int max_order) {
    if (!a.is_zero() && !b.is_zero() && a.degree() + b.degree() > max_order)
        throw InvalidArgument("product degree " + std::to_string(a.degree() + b.degree()) + " exceeds max order " +
                              std::to_string(max_order));
    OperatorPolynomial out;
    for (const auto& [ma, ca] : a.terms()) {
        for (const auto& [mb, cb] : b.terms()) {
            // P^a (Q^b P^c) Q^d with Q^b P^c = sum_j j! C(b,j) C(c,j) i^j P^(c-j) Q^(b-j)
            const int qb = ma.q_power, pc = mb.p_power;
            for (int j = 0; j <= std::min(qb, pc); ++j) {
                long long mult = exact_factorial(j) * exact_binomial(qb, j) * exact_binomial(pc, j);
                GaussianInteger c = ca * cb * i_power(j) * GaussianInteger{mult, 0};
                out.add({ma.p_power + pc - j, qb - j + mb.q_power}, c);
            }
        }
    }
    return out;
}

namespace {

std::vector<std::vector<PowerTerm>> build_power_terms() {
    std::vector<std::vector<PowerTerm>> table(kMaxOrder + 1);
    // by_mu[k] holds the coefficient polynomial of mu^k nu^(n-k).
    std::vector<OperatorPolynomial> by_mu{OperatorPolynomial::constant({1, 0})};
    const auto q = OperatorPolynomial::monomial(0, 1);
    const auto p = OperatorPolynomial::monomial(1, 0);
    for (int n = 0; n <= kMaxOrder; ++n) {
        for (int k = 0; k <= n; ++k)
            for (const auto& [m, c] : by_mu[static_cast<std::size_t>(k)].terms())
                table[static_cast<std::size_t>(n)].push_back({k, n - k, m, c});
        if (n == kMaxOrder) break;
        std::vector<OperatorPolynomial> next(static_cast<std::size_t>(n + 2));
        for (int k = 0; k <= n; ++k) {
            const auto& poly = by_mu[static_cast<std::size_t>(k)];
            next[static_cast<std::size_t>(k + 1)] += multiply(poly, q);
            next[static_cast<std::size_t>(k)] += multiply(poly, p);
        }
        by_mu = std::move(next);
    }
    return table;
}

std::map<std::pair<int, int>, ComplexPolynomial> build_symmetrized() {
    std::map<std::pair<int, int>, ComplexPolynomial> table;
    for (int total = 0; total <= kMaxOrder; ++total) {
        for (int qp = 0; qp <= total; ++qp) {
            const int pp = total - qp;
            // Enumerate every arrangement of qp Q's and pp P's.
            OperatorPolynomial sum;
            long long count = 0;
            for (unsigned mask = 0; mask < (1u << total); ++mask) {
                if (std::popcount(mask) != qp) continue;
                Word w;
                for (int i = 0; i < total; ++i) w.push_back((mask >> i) & 1u ? Letter::Q : Letter::P);
                OperatorPolynomial acc = OperatorPolynomial::constant({1, 0});
                for (Letter l : w)
                    acc = multiply(acc, l == Letter::Q ? OperatorPolynomial::monomial(0, 1)
                                                       : OperatorPolynomial::monomial(1, 0));
                sum += acc;
                ++count;
            }
            ComplexPolynomial poly;
            for (const auto& [m, c] : sum.terms()) poly[m] = c.to_complex() / static_cast<double>(count);
            table.emplace(std::make_pair(qp, pp), std::move(poly));
        }
    }
    return table;
}

}  // namespace

const std::vector<PowerTerm>& quadrature_power_terms(int n) {
    static const auto table = build_power_terms();
    if (n < 0 || n > kMaxOrder) throw InvalidArgument("quadrature power " + std::to_string(n) + " out of range");
    return table[static_cast<std::size_t>(n)];
}

ComplexPolynomial expand_quadrature_power(double mu, double nu, int n) {
    ComplexPolynomial out;
    for (const auto& t : quadrature_power_terms(n)) {
        double w = std::pow(mu, t.mu_power) * std::pow(nu, t.nu_power);
        if (w == 0.0) continue;
        out[t.monomial] += t.coeff.to_complex() * w;
    }
    return out;
}

const ComplexPolynomial& weyl_symmetrized(int q_power, int p_power) {
    static const auto table = build_symmetrized();
    auto it = table.find({q_power, p_power});
    if (it == table.end()) throw InvalidArgument("symmetrized monomial degree exceeds max order");
    return it->second;
}

double classical_limit(const ComplexPolynomial& poly, double q, double p) {
    int top = -1;
    for (const auto& [m, c] : poly) top = std::max(top, m.degree());
    double sum = 0.0;
    for (const auto& [m, c] : poly)
        if (m.degree() == top) sum += c.real() * std::pow(p, m.p_power) * std::pow(q, m.q_power);
    return sum;
}

Complex expectation(const ComplexPolynomial& poly, const std::function<Complex(OrderedMonomial)>& moment) {
    Complex sum = 0.0;
    for (const auto& [m, c] : poly) sum += c * moment(m);
    return sum;
}

Complex expectation(const OperatorPolynomial& poly, const std::function<Complex(OrderedMonomial)>& moment) {
    Complex sum = 0.0;
    for (const auto& [m, c] : poly.terms()) sum += c.to_complex() * moment(m);
    return sum;
}

std::string to_string(const ComplexPolynomial& poly) {
    std::vector<std::pair<OrderedMonomial, Complex>> items(poly.begin(), poly.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return display_before(a.first, b.first); });
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : items) {
        if (c == 0.0) continue;
        if (!first) os << " + ";
        first = false;
        os << '(' << c.real() << (c.imag() < 0 ? "-" : "+") << std::fabs(c.imag()) << "i)";
        auto mono = monomial_text(m);
        if (!mono.empty()) os << ' ' << mono;
    }
    return first ? "0" : os.str();
}

}  // namespace qtomo
