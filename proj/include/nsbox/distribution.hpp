#pragma once

#include "nsbox/rational.hpp"
#include "nsbox/rng.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace nsbox {

/// Bipartite conditional distribution P(ab|xy) over dense index alphabets,
/// stored as exact rationals. No floating point ever touches the table.
class ConditionalDistribution {
public:
    ConditionalDistribution(int x_size, int y_size, int a_size, int b_size);

    int x_size() const { return xs_; }
    int y_size() const { return ys_; }
    int a_size() const { return as_; }
    int b_size() const { return bs_; }

    const Rational& at(int x, int y, int a, int b) const;
    void set(int x, int y, int a, int b, Rational v);

    bool operator==(const ConditionalDistribution& other) const;

    /// Independent uniform outputs: every entry 1/(a_size*b_size).
    static ConditionalDistribution uniform(int x_size, int y_size,
                                           int a_size, int b_size);

private:
    std::size_t index(int x, int y, int a, int b) const;

    int xs_, ys_, as_, bs_;
    std::vector<Rational> probs_;
};

struct ValidationReport {
    bool shape_ok = true;
    bool all_normalized = true;
    bool nonnegative = true;
    bool non_signaling = true;
    std::vector<bool> normalized_per_input; // indexed x*y_size + y
    Rational worst_violation = 0;           // max |defect| over all checks
    std::vector<std::string> offending;     // human-readable descriptions

    bool ok() const { return all_normalized && nonnegative && non_signaling; }
};

/// Checks normalization, nonnegativity, and the exact marginal equalities
/// on both sides. Equality is exact rational equality, never approximate.
ValidationReport validate(const ConditionalDistribution& p);

/// P(a|x), independent of y. Throws SignalingError if the marginal actually
/// depends on y (ill-defined for signaling systems).
Rational marginal_a(const ConditionalDistribution& p, int a, int x);
/// P(b|y), the mirror image.
Rational marginal_b(const ConditionalDistribution& p, int b, int y);

/// Worst-case total-variation distance: max over input pairs of half the
/// L1 distance between output distributions. Zero iff the tables are equal.
Rational tv_distance(const ConditionalDistribution& p,
                     const ConditionalDistribution& q);

/// CHSH winning probability (1/4) sum_{xy} P(a xor b = xy | xy).
/// Requires all four alphabets binary.
Rational chsh_value(const ConditionalDistribution& p);

/// Exact sample from P(.|xy); deterministic given the stream state.
std::pair<int, int> sample(const ConditionalDistribution& p, int x, int y,
                           RngStream& rng);

/// Float-valued table awaiting exact repair.
struct FloatTable {
    int x_size = 0, y_size = 0, a_size = 0, b_size = 0;
    std::vector<double> probs; // same layout as ConditionalDistribution

    double at(int x, int y, int a, int b) const;
    void set(int x, int y, int a, int b, double v);
};

/// Turns an approximately non-signaling float table into an exactly
/// non-signaling rational one, entrywise within `tolerance` of the input.
///
/// Procedure: round entries to a trial denominator, project exactly onto
/// the normalization + non-signaling affine subspace (rational linear
/// algebra), and if any entry went negative mix toward the uniform box by
/// the smallest weight that restores nonnegativity. Trial denominators
/// sweep upward to max_denominator; if none lands within tolerance,
/// throws RationalizeError advising a larger denominator.
ConditionalDistribution rationalize(const FloatTable& table,
                                    const Integer& max_denominator,
                                    double tolerance);

} // namespace nsbox
