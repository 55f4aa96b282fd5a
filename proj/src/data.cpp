#include "crocs/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "crocs/kernels.hpp"
#include "crocs/rng.hpp"

namespace crocs {

namespace {

constexpr double kAgeLow = 20.0;
constexpr double kAgeHigh = 90.0;
constexpr double kBasePeriods = 8.0;   // periods per segment at the youngest age
constexpr double kPeriodDrop = 3.0;    // lost across the full age range
constexpr double kPhaseJitter = 0.35;  // per-segment phase offset, in periods
constexpr double kSexGain = 0.45;      // half-wave gain asymmetry
constexpr double kClassOffset = 0.4;   // per-class baseline shift; cancels under
                                       // per-segment normalization

double class_template(int class_id, double phase) {
    const double two_pi = 2.0 * std::numbers::pi;
    // Fundamental plus one class-specific harmonic.
    return std::sin(two_pi * phase) +
           0.8 * std::sin(two_pi * (class_id + 2) * phase + 0.5);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

[[noreturn]] void csv_error(const std::string& path, std::size_t line,
                            const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset generate_synthetic(const AttributeSpace& space, int patients,
                           int segments_per_patient, int signal_len,
                           double noise_sd, std::uint64_t seed) {
    validate_space(space);
    require(patients >= 1, "patients must be >= 1");
    require(segments_per_patient >= 1, "segments_per_patient must be >= 1");
    require(signal_len >= 64, "signal_len must be >= 64");
    require(noise_sd >= 0.0, "noise_sd must be non-negative");

    Dataset dataset;
    dataset.space = space;

    Rng patient_rng(derive_seed(seed, 1));
    long instance_id = 0;
    for (int p = 0; p < patients; ++p) {
        const int class_id = static_cast<int>(patient_rng.index(space.class_count));
        const int sex_id = static_cast<int>(patient_rng.index(space.sex_count));
        const double age = patient_rng.uniform(kAgeLow, kAgeHigh);

        const double periods =
            kBasePeriods - kPeriodDrop * (age - kAgeLow) / (kAgeHigh - kAgeLow);
        const double pos_gain = sex_id == 0 ? 1.0 + kSexGain : 1.0 - kSexGain;
        const double neg_gain = sex_id == 0 ? 1.0 - kSexGain : 1.0 + kSexGain;

        for (int s = 0; s < segments_per_patient; ++s) {
            Rng seg_rng(derive_seed(seed, 0x10000 + static_cast<std::uint64_t>(instance_id)));
            const double phase0 = seg_rng.uniform(0.0, kPhaseJitter);

            Segment segment;
            segment.instance_id = instance_id++;
            segment.patient_id = p;
            segment.labelled = true;
            segment.raw = {class_id, sex_id, age};
            segment.values.resize(signal_len);
            for (int t = 0; t < signal_len; ++t) {
                const double phase = periods * t / signal_len + phase0;
                double v = class_template(class_id, phase);
                v *= v >= 0.0 ? pos_gain : neg_gain;
                v += kClassOffset * class_id;
                if (noise_sd > 0.0) v += noise_sd * seg_rng.normal();
                segment.values[t] = v;
            }
            dataset.segments.push_back(std::move(segment));
        }
    }
    dataset.split.assign(dataset.segments.size(), SplitTag::kUnsplit);
    return dataset;
}

void write_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");

    const std::size_t width = dataset.segments.empty() ? 0 : dataset.segments[0].values.size();
    out << "instance_id,patient_id,lead,class,sex,age_years,labelled";
    for (std::size_t i = 0; i < width; ++i) out << ",v_" << i;
    out << "\n";

    for (const Segment& s : dataset.segments) {
        out << s.instance_id << "," << s.patient_id << "," << s.lead << ",";
        if (s.labelled) {
            out << s.raw.class_id << "," << s.raw.sex_id << ","
                << format_double(s.raw.age_years);
        } else {
            out << ",,";
        }
        out << "," << (s.labelled ? 1 : 0);
        for (double v : s.values) out << "," << format_double(v);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

Dataset ingest_csv(const std::string& path, const AttributeSpace& space) {
    validate_space(space);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    Dataset dataset;
    dataset.space = space;

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, header expected");
    ++line_no;
    if (line.rfind("instance_id,patient_id,lead,class,sex,age_years,labelled", 0) != 0) {
        csv_error(path, line_no, "unexpected header");
    }

    std::size_t expect_width = 0;
    std::set<int> leads;
    std::vector<std::string> fields;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        fields.clear();
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() < 8) csv_error(path, line_no, "too few columns");

        const auto parse_long = [&](const std::string& text, const char* name) {
            try {
                std::size_t used = 0;
                const long v = std::stol(text, &used);
                if (used != text.size()) throw std::invalid_argument(text);
                return v;
            } catch (const std::exception&) {
                csv_error(path, line_no, std::string("bad ") + name + " value '" + text + "'");
            }
        };
        const auto parse_double = [&](const std::string& text, const char* name) {
            try {
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
                return v;
            } catch (const std::exception&) {
                csv_error(path, line_no, std::string("bad ") + name + " value '" + text + "'");
            }
        };

        Segment segment;
        segment.instance_id = parse_long(fields[0], "instance_id");
        segment.patient_id = parse_long(fields[1], "patient_id");
        segment.lead = static_cast<int>(parse_long(fields[2], "lead"));
        leads.insert(segment.lead);
        if (leads.size() > 1) {
            csv_error(path, line_no, "multiple leads present; only single-lead data is supported");
        }
        segment.labelled = parse_long(fields[6], "labelled") != 0;
        if (segment.labelled) {
            segment.raw.class_id = static_cast<int>(parse_long(fields[3], "class"));
            segment.raw.sex_id = static_cast<int>(parse_long(fields[4], "sex"));
            segment.raw.age_years = parse_double(fields[5], "age_years");
            if (segment.raw.class_id < 0 || segment.raw.class_id >= space.class_count) {
                csv_error(path, line_no, "class id out of range");
            }
            if (segment.raw.sex_id < 0 || segment.raw.sex_id >= space.sex_count) {
                csv_error(path, line_no, "sex id out of range");
            }
        } else if (!fields[3].empty() || !fields[4].empty() || !fields[5].empty()) {
            csv_error(path, line_no, "unlabelled row must leave class/sex/age_years empty");
        }

        const std::size_t width = fields.size() - 7;
        if (expect_width == 0) {
            expect_width = width;
        } else if (width != expect_width) {
            csv_error(path, line_no,
                      "row has " + std::to_string(width) + " samples, expected " +
                          std::to_string(expect_width));
        }
        segment.values.resize(width);
        for (std::size_t i = 0; i < width; ++i) {
            segment.values[i] = parse_double(fields[7 + i], "sample");
        }
        dataset.segments.push_back(std::move(segment));
    }
    dataset.split.assign(dataset.segments.size(), SplitTag::kUnsplit);
    return dataset;
}

Dataset split_patients(Dataset dataset, std::array<double, 3> ratios,
                       std::uint64_t seed) {
    const double total = ratios[0] + ratios[1] + ratios[2];
    require(std::abs(total - 1.0) < 1e-9, "split ratios must sum to 1");

    std::vector<long> patients;
    for (const Segment& s : dataset.segments) {
        if (std::find(patients.begin(), patients.end(), s.patient_id) == patients.end()) {
            patients.push_back(s.patient_id);
        }
    }
    require(patients.size() >= 5, "need at least 5 patients to split");

    Rng rng(seed);
    rng.shuffle(patients);
    const std::size_t n = patients.size();
    const std::size_t n_train = static_cast<std::size_t>(std::lround(ratios[0] * n));
    const std::size_t n_train_val =
        static_cast<std::size_t>(std::lround((ratios[0] + ratios[1]) * n));

    std::vector<std::pair<long, SplitTag>> assignment;
    assignment.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SplitTag tag = SplitTag::kTest;
        if (i < n_train) tag = SplitTag::kTrain;
        else if (i < n_train_val) tag = SplitTag::kVal;
        assignment.emplace_back(patients[i], tag);
    }

    dataset.split.assign(dataset.segments.size(), SplitTag::kUnsplit);
    for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
        const long pid = dataset.segments[i].patient_id;
        for (const auto& [patient, tag] : assignment) {
            if (patient == pid) {
                dataset.split[i] = tag;
                break;
            }
        }
    }
    return dataset;
}

Dataset bin_ages(Dataset dataset) {
    // One age observation per distinct labelled training patient.
    std::vector<long> seen;
    std::vector<double> ages;
    for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
        const Segment& s = dataset.segments[i];
        if (dataset.split[i] != SplitTag::kTrain || !s.labelled) continue;
        if (std::find(seen.begin(), seen.end(), s.patient_id) != seen.end()) continue;
        seen.push_back(s.patient_id);
        ages.push_back(s.raw.age_years);
    }
    if (ages.empty()) {
        throw std::invalid_argument("bin_ages needs labelled training-split ages");
    }
    std::sort(ages.begin(), ages.end());

    const int bins = dataset.space.age_bin_count;
    dataset.age_boundaries.clear();
    for (int b = 1; b < bins; ++b) {
        // Linear-interpolation quantile at b/bins.
        const double h = (static_cast<double>(ages.size()) - 1.0) * b / bins;
        const std::size_t lo = static_cast<std::size_t>(h);
        const double frac = h - static_cast<double>(lo);
        double q = ages[lo];
        if (lo + 1 < ages.size()) q += frac * (ages[lo + 1] - ages[lo]);
        dataset.age_boundaries.push_back(q);
    }

    for (Segment& s : dataset.segments) {
        if (!s.labelled) continue;
        int bin = 0;
        while (bin < bins - 1 && s.raw.age_years > dataset.age_boundaries[bin]) ++bin;
        s.attrs = AttributeSet{s.raw.class_id, s.raw.sex_id, bin};
    }
    return dataset;
}

Dataset normalize(Dataset dataset, NormalizationMode mode) {
    for (Segment& s : dataset.segments) {
        const std::size_t n = s.values.size();
        if (n == 0) continue;
        double* v = s.values.data();
        if (mode == NormalizationMode::kMinMax) {
            const double hi = kernels::max_value(v, n);
            double lo = v[0];
            for (std::size_t i = 1; i < n; ++i) lo = std::min(lo, v[i]);
            if (hi == lo) {
                throw std::invalid_argument("instance " + std::to_string(s.instance_id) +
                                            " is constant; min-max normalization undefined");
            }
            const double inv = 1.0 / (hi - lo);
            for (std::size_t i = 0; i < n; ++i) v[i] = (v[i] - lo) * inv;
        } else {
            const double mean = kernels::sum(v, n) / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) v[i] -= mean;
            const double sd = std::sqrt(kernels::sumsq(v, n) / static_cast<double>(n));
            if (sd > 0.0) kernels::scale(v, n, 1.0 / sd);
        }
    }
    return dataset;
}

SplitView collect_split(const Dataset& dataset, SplitTag tag, bool labelled_only) {
    SplitView view;
    std::size_t width = 0;
    for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
        if (tag != SplitTag::kUnsplit && dataset.split[i] != tag) continue;
        if (labelled_only && !dataset.segments[i].labelled) continue;
        view.segment_indices.push_back(i);
        width = dataset.segments[i].values.size();
    }
    view.signals = Matrix(view.segment_indices.size(), width);
    for (std::size_t r = 0; r < view.segment_indices.size(); ++r) {
        const auto& values = dataset.segments[view.segment_indices[r]].values;
        std::copy(values.begin(), values.end(), view.signals.row(r));
    }
    return view;
}

}  // namespace crocs
