#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crocs/attributes.hpp"
#include "crocs/matrix.hpp"

namespace crocs {

enum class SplitTag { kUnsplit, kTrain, kVal, kTest };

enum class NormalizationMode { kMinMax, kStandardize };

struct RawAttributes {
    int class_id = 0;
    int sex_id = 0;
    double age_years = 0.0;
};

/// One fixed-length single-lead signal segment. `attrs` is filled in by
/// bin_ages for labelled segments only.
struct Segment {
    long instance_id = 0;
    long patient_id = 0;
    int lead = 0;
    std::vector<double> values;
    bool labelled = false;
    RawAttributes raw;
    std::optional<AttributeSet> attrs;
};

struct Dataset {
    std::vector<Segment> segments;
    std::vector<SplitTag> split;  // parallel to segments
    AttributeSpace space;
    std::vector<double> age_boundaries;  // age_bin_count - 1 cut points, set by bin_ages

    std::size_t size() const { return segments.size(); }
};

/// Attribute-conditioned quasi-periodic waveforms: the harmonic content and
/// baseline offset of the template are set by class, the base rate by age
/// (older -> slower), and the positive/negative half-wave gains by sex. Each
/// segment adds seeded phase jitter and Gaussian noise. The offset separates
/// classes in raw signal space but cancels under per-segment normalization,
/// which sees shape only. Deterministic under seed.
Dataset generate_synthetic(const AttributeSpace& space, int patients,
                           int segments_per_patient, int signal_len,
                           double noise_sd, std::uint64_t seed);

/// Header: instance_id,patient_id,lead,class,sex,age_years,labelled,v_0,...
/// Unlabelled rows leave class/sex/age_years empty. Single-lead only.
Dataset ingest_csv(const std::string& path, const AttributeSpace& space);
void write_csv(const Dataset& dataset, const std::string& path);

/// Patient-level split by seeded shuffle and cumulative ratio; every segment
/// of a patient receives the same tag. Ratios must sum to 1.
Dataset split_patients(Dataset dataset, std::array<double, 3> ratios,
                       std::uint64_t seed);

/// Computes age-bin boundaries (linear-interpolation quantiles of the
/// labelled training patients' ages) and assigns attrs to every labelled
/// segment in all splits. Ages exactly on a boundary fall in the lower bin.
Dataset bin_ages(Dataset dataset);

/// Per-segment normalization: kMinMax maps onto [0, 1] and rejects constant
/// segments; kStandardize maps to mean 0, sd 1.
Dataset normalize(Dataset dataset, NormalizationMode mode);

/// Stacks the values of the selected split (all segments when kUnsplit) into
/// a row-per-segment matrix, returning the segment indices alongside.
struct SplitView {
    Matrix signals;
    std::vector<std::size_t> segment_indices;
};
SplitView collect_split(const Dataset& dataset, SplitTag tag, bool labelled_only);

}  // namespace crocs
