#include "nsbox/distribution.hpp"

#include "nsbox/errors.hpp"

#include <sstream>

namespace nsbox {

namespace {

void check_sizes(int xs, int ys, int as, int bs) {
    if (xs < 1 || ys < 1 || as < 1 || bs < 1)
        throw ShapeError("alphabet sizes must be positive");
}

std::string idx_str(int x, int y, int a = -1, int b = -1) {
    std::ostringstream os;
    os << "(x=" << x << ",y=" << y;
    if (a >= 0) os << ",a=" << a;
    if (b >= 0) os << ",b=" << b;
    os << ")";
    return os.str();
}

} // namespace

ConditionalDistribution::ConditionalDistribution(int x_size, int y_size,
                                                 int a_size, int b_size)
    : xs_(x_size), ys_(y_size), as_(a_size), bs_(b_size) {
    check_sizes(xs_, ys_, as_, bs_);
    probs_.assign(static_cast<std::size_t>(xs_) * ys_ * as_ * bs_, Rational(0));
}

std::size_t ConditionalDistribution::index(int x, int y, int a, int b) const {
    if (x < 0 || x >= xs_ || y < 0 || y >= ys_ || a < 0 || a >= as_ || b < 0 ||
        b >= bs_)
        throw ShapeError("index out of range " + idx_str(x, y, a, b));
    return ((static_cast<std::size_t>(x) * ys_ + y) * as_ + a) * bs_ + b;
}

const Rational& ConditionalDistribution::at(int x, int y, int a, int b) const {
    return probs_[index(x, y, a, b)];
}

void ConditionalDistribution::set(int x, int y, int a, int b, Rational v) {
    probs_[index(x, y, a, b)] = std::move(v);
}

bool ConditionalDistribution::operator==(
    const ConditionalDistribution& other) const {
    return xs_ == other.xs_ && ys_ == other.ys_ && as_ == other.as_ &&
           bs_ == other.bs_ && probs_ == other.probs_;
}

ConditionalDistribution ConditionalDistribution::uniform(int x_size, int y_size,
                                                         int a_size,
                                                         int b_size) {
    ConditionalDistribution p(x_size, y_size, a_size, b_size);
    const Rational u(1, static_cast<long long>(a_size) * b_size);
    for (int x = 0; x < x_size; ++x)
        for (int y = 0; y < y_size; ++y)
            for (int a = 0; a < a_size; ++a)
                for (int b = 0; b < b_size; ++b) p.set(x, y, a, b, u);
    return p;
}

ValidationReport validate(const ConditionalDistribution& p) {
    ValidationReport rep;
    const int X = p.x_size(), Y = p.y_size(), A = p.a_size(), B = p.b_size();
    rep.normalized_per_input.assign(static_cast<std::size_t>(X) * Y, true);

    auto note = [&rep](const Rational& defect, const std::string& what) {
        const Rational mag = boost::multiprecision::abs(defect);
        if (mag > rep.worst_violation) rep.worst_violation = mag;
        rep.offending.push_back(what);
    };

    for (int x = 0; x < X; ++x)
        for (int y = 0; y < Y; ++y) {
            Rational sum = 0;
            for (int a = 0; a < A; ++a)
                for (int b = 0; b < B; ++b) {
                    const Rational& v = p.at(x, y, a, b);
                    if (v < 0) {
                        rep.nonnegative = false;
                        note(v, "negative entry at " + idx_str(x, y, a, b));
                    }
                    sum += v;
                }
            if (sum != 1) {
                rep.all_normalized = false;
                rep.normalized_per_input[static_cast<std::size_t>(x) * Y + y] =
                    false;
                note(sum - 1, "row sum " + rational_str(sum) + " at " +
                                  idx_str(x, y));
            }
        }

    // Alice's marginal must not move with y; reference column y = 0.
    for (int x = 0; x < X; ++x)
        for (int a = 0; a < A; ++a) {
            Rational ref = 0;
            for (int b = 0; b < B; ++b) ref += p.at(x, 0, a, b);
            for (int y = 1; y < Y; ++y) {
                Rational s = 0;
                for (int b = 0; b < B; ++b) s += p.at(x, y, a, b);
                if (s != ref) {
                    rep.non_signaling = false;
                    note(s - ref, "P(a=" + std::to_string(a) +
                                      "|x=" + std::to_string(x) +
                                      ") depends on y=" + std::to_string(y));
                }
            }
        }
    for (int y = 0; y < Y; ++y)
        for (int b = 0; b < B; ++b) {
            Rational ref = 0;
            for (int a = 0; a < A; ++a) ref += p.at(0, y, a, b);
            for (int x = 1; x < X; ++x) {
                Rational s = 0;
                for (int a = 0; a < A; ++a) s += p.at(x, y, a, b);
                if (s != ref) {
                    rep.non_signaling = false;
                    note(s - ref, "P(b=" + std::to_string(b) +
                                      "|y=" + std::to_string(y) +
                                      ") depends on x=" + std::to_string(x));
                }
            }
        }
    return rep;
}

Rational marginal_a(const ConditionalDistribution& p, int a, int x) {
    Rational ref = 0;
    for (int b = 0; b < p.b_size(); ++b) ref += p.at(x, 0, a, b);
    for (int y = 1; y < p.y_size(); ++y) {
        Rational s = 0;
        for (int b = 0; b < p.b_size(); ++b) s += p.at(x, y, a, b);
        if (s != ref)
            throw SignalingError("marginal_a ill-defined: P(a|x) depends on y");
    }
    return ref;
}

Rational marginal_b(const ConditionalDistribution& p, int b, int y) {
    Rational ref = 0;
    for (int a = 0; a < p.a_size(); ++a) ref += p.at(0, y, a, b);
    for (int x = 1; x < p.x_size(); ++x) {
        Rational s = 0;
        for (int a = 0; a < p.a_size(); ++a) s += p.at(x, y, a, b);
        if (s != ref)
            throw SignalingError("marginal_b ill-defined: P(b|y) depends on x");
    }
    return ref;
}

Rational tv_distance(const ConditionalDistribution& p,
                     const ConditionalDistribution& q) {
    if (p.x_size() != q.x_size() || p.y_size() != q.y_size() ||
        p.a_size() != q.a_size() || p.b_size() != q.b_size())
        throw ShapeError("tv_distance: alphabet sizes differ");
    Rational worst = 0;
    for (int x = 0; x < p.x_size(); ++x)
        for (int y = 0; y < p.y_size(); ++y) {
            Rational l1 = 0;
            for (int a = 0; a < p.a_size(); ++a)
                for (int b = 0; b < p.b_size(); ++b)
                    l1 += boost::multiprecision::abs(p.at(x, y, a, b) -
                                                     q.at(x, y, a, b));
            l1 /= 2;
            if (l1 > worst) worst = l1;
        }
    return worst;
}

Rational chsh_value(const ConditionalDistribution& p) {
    if (p.x_size() != 2 || p.y_size() != 2 || p.a_size() != 2 ||
        p.b_size() != 2)
        throw DomainError("chsh_value requires binary alphabets");
    Rational win = 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    if ((a ^ b) == (x & y)) win += p.at(x, y, a, b);
    return win / 4;
}

std::pair<int, int> sample(const ConditionalDistribution& p, int x, int y,
                           RngStream& rng) {
    std::vector<Rational> block;
    block.reserve(static_cast<std::size_t>(p.a_size()) * p.b_size());
    for (int a = 0; a < p.a_size(); ++a)
        for (int b = 0; b < p.b_size(); ++b) block.push_back(p.at(x, y, a, b));
    const std::size_t i = rng.categorical(block);
    return {static_cast<int>(i) / p.b_size(),
            static_cast<int>(i) % p.b_size()};
}

double FloatTable::at(int x, int y, int a, int b) const {
    return probs[((static_cast<std::size_t>(x) * y_size + y) * a_size + a) *
                     b_size +
                 b];
}

void FloatTable::set(int x, int y, int a, int b, double v) {
    probs[((static_cast<std::size_t>(x) * y_size + y) * a_size + a) * b_size +
          b] = v;
}

} // namespace nsbox
