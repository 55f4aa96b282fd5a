#include "crocs/attributes.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace crocs {

void validate_space(const AttributeSpace& space) {
    if (space.class_count < 1 || space.sex_count < 1 || space.age_bin_count < 1) {
        throw std::invalid_argument("attribute space counts must all be >= 1");
    }
}

void validate_member(const AttributeSpace& space, const AttributeSet& attrs) {
    validate_space(space);
    const bool ok = attrs.class_id >= 0 && attrs.class_id < space.class_count &&
                    attrs.sex_id >= 0 && attrs.sex_id < space.sex_count &&
                    attrs.age_bin >= 0 && attrs.age_bin < space.age_bin_count;
    if (!ok) {
        throw std::invalid_argument(
            "attribute set (" + std::to_string(attrs.class_id) + "," +
            std::to_string(attrs.sex_id) + "," + std::to_string(attrs.age_bin) +
            ") outside its space");
    }
}

std::vector<AttributeSet> enumerate_combinations(const AttributeSpace& space) {
    validate_space(space);
    std::vector<AttributeSet> combos;
    combos.reserve(static_cast<std::size_t>(space.combo_count()));
    for (int c = 0; c < space.class_count; ++c) {
        for (int s = 0; s < space.sex_count; ++s) {
            for (int a = 0; a < space.age_bin_count; ++a) {
                combos.push_back({c, s, a});
            }
        }
    }
    return combos;
}

int canonical_index(const AttributeSpace& space, const AttributeSet& attrs) {
    validate_member(space, attrs);
    return (attrs.class_id * space.sex_count + attrs.sex_id) * space.age_bin_count +
           attrs.age_bin;
}

int hamming(const AttributeSpace& space, const AttributeSet& a, const AttributeSet& b) {
    validate_member(space, a);
    validate_member(space, b);
    return (a.class_id != b.class_id) + (a.sex_id != b.sex_id) + (a.age_bin != b.age_bin);
}

double match_score(const AttributeSpace& space, const AttributeSet& a,
                   const AttributeSet& b, double tau_omega) {
    validate_member(space, a);
    validate_member(space, b);
    if (std::isinf(tau_omega)) return 0.0;
    if (!(tau_omega > 0.0)) {
        throw std::invalid_argument("tau_omega must be positive or infinite");
    }
    const int matches =
        (a.class_id == b.class_id) + (a.sex_id == b.sex_id) + (a.age_bin == b.age_bin);
    return static_cast<double>(matches) / tau_omega;
}

std::vector<double> attraction_weights(const AttributeSet& attrs,
                                       const AttributeSpace& space,
                                       double tau_omega) {
    validate_member(space, attrs);
    const auto combos = enumerate_combinations(space);
    std::vector<double> weights(combos.size(), 0.0);

    // Softmax over the same-class subset with max subtraction: q reaches
    // 3/tau_omega, which overflows exp() for small tau_omega.
    double max_q = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < combos.size(); ++j) {
        if (combos[j].class_id != attrs.class_id) continue;
        max_q = std::max(max_q, match_score(space, attrs, combos[j], tau_omega));
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < combos.size(); ++j) {
        if (combos[j].class_id != attrs.class_id) continue;
        weights[j] = std::exp(match_score(space, attrs, combos[j], tau_omega) - max_q);
        denom += weights[j];
    }
    for (std::size_t j = 0; j < combos.size(); ++j) {
        if (weights[j] != 0.0) weights[j] /= denom;
    }
    return weights;
}

}  // namespace crocs
