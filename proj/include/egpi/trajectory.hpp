#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace egpi {

struct Units {
    std::string input = "counts";
    std::string output = "deg";

    friend bool operator==(const Units&, const Units&) = default;
};

/// Time-stamped input samples with optional measured output.
///
/// t is strictly increasing; theta, when present, is aligned with t and v.
struct Trajectory {
    std::vector<double> t;
    std::vector<double> v;
    std::optional<std::vector<double>> theta;
    std::optional<Units> units;

    std::size_t size() const noexcept { return t.size(); }
    bool has_theta() const noexcept { return theta.has_value(); }

    /// Throws InputError if empty, misaligned, non-finite or t is not strictly increasing.
    void validate() const;

    /// Copy with every v and theta replaced by its absolute value.
    Trajectory absolute() const;
};

}  // namespace egpi
