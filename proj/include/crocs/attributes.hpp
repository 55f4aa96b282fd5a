#pragma once

#include <limits>
#include <vector>

namespace crocs {

/// Cardinalities of the discrete patient-attribute vocabulary. The number of
/// prototype slots is the product of the three counts.
struct AttributeSpace {
    int class_count = 0;
    int sex_count = 2;
    int age_bin_count = 4;

    int combo_count() const { return class_count * sex_count * age_bin_count; }
    bool operator==(const AttributeSpace&) const = default;
};

/// One (disease class, sex, age bin) triple. Equality is componentwise.
struct AttributeSet {
    int class_id = 0;
    int sex_id = 0;
    int age_bin = 0;

    bool operator==(const AttributeSet&) const = default;
};

/// Sentinel that selects the uniform-attraction limit exactly.
inline constexpr double kInfiniteTau = std::numeric_limits<double>::infinity();

void validate_space(const AttributeSpace& space);
void validate_member(const AttributeSpace& space, const AttributeSet& attrs);

/// All combinations in canonical order: class-major, then sex, then age bin.
/// Position j in this list is the prototype index for combination j.
std::vector<AttributeSet> enumerate_combinations(const AttributeSpace& space);

/// Canonical prototype index of `attrs` under the enumeration above.
int canonical_index(const AttributeSpace& space, const AttributeSet& attrs);

/// Number of mismatched attributes, in {0, 1, 2, 3}.
int hamming(const AttributeSpace& space, const AttributeSet& a, const AttributeSet& b);

/// Attribute-match score q = (1/tau_omega) * (#matching attributes).
/// tau_omega must be positive or kInfiniteTau; the infinite case returns 0
/// for every pair.
double match_score(const AttributeSpace& space, const AttributeSet& a,
                   const AttributeSet& b, double tau_omega);

/// Attraction weights over all combo_count prototypes in canonical order:
/// softmax of q over the same-class subset, exactly zero off-class. The
/// result is a probability distribution for every valid input.
std::vector<double> attraction_weights(const AttributeSet& attrs,
                                       const AttributeSpace& space,
                                       double tau_omega);

}  // namespace crocs
