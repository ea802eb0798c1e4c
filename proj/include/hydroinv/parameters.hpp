#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hydroinv {

/// Raised when an input value is rejected (non-finite, out of domain, malformed).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a parameter value lies outside its calibration bounds.
class OutOfBoundsError : public InputError {
public:
    OutOfBoundsError(std::string name, double value, double lower, double upper);
    const std::string& parameter() const noexcept { return name_; }

private:
    std::string name_;
};

/**
 * The 21 calibration parameters, in calibration-table order.
 *
 * The enumerator value is the column index used everywhere a ParameterSet
 * is stored as a flat row (ensemble matrices, parameter files, targets).
 */
enum class Param : std::size_t {
    SURLAG,
    CN,
    RCHRG_DP,
    GWQMN,
    GW_REVAP,
    REVAPMN,
    GW_DELAY,
    ALPHA_BF,
    SOL_K,
    SOL_AWC,
    ESCO,
    OV_N,
    CH_K2,
    CH_N2,
    SFTMP,
    SMTMP,
    SMFMX,
    SMFMN,
    TIMP,
    EPCO,
    CANMX,
};

inline constexpr std::size_t kNumParams = 21;

constexpr std::size_t index(Param p) noexcept { return static_cast<std::size_t>(p); }

/// The seven discharge-sensitive parameters, most sensitive first.
inline constexpr std::array<Param, 7> kSensitiveParams = {
    Param::SFTMP, Param::SMTMP,  Param::SMFMX,   Param::CH_K2,
    Param::CH_N2, Param::ALPHA_BF, Param::RCHRG_DP,
};

enum class Modification { Replace, Relative };

struct ParameterSpec {
    std::string name;
    double lower = 0.0;
    double upper = 0.0;
    std::string unit;
    Modification mode = Modification::Replace;
    std::string spatial_scale;
    std::string description;

    double range() const noexcept { return upper - lower; }
    double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

/**
 * Ordered collection of parameter bounds.
 *
 * Construction enforces lower < upper for every entry. The default space is
 * the 21-row calibration table; custom spaces (e.g. with an appended dummy
 * column for sensitivity tests) can be built from any spec list.
 */
class ParameterSpace {
public:
    explicit ParameterSpace(std::vector<ParameterSpec> specs);

    /// The 21 watershed parameters with their calibration bounds.
    static const ParameterSpace& standard();

    std::size_t size() const noexcept { return specs_.size(); }
    const ParameterSpec& operator[](std::size_t i) const { return specs_.at(i); }
    const ParameterSpec& operator[](Param p) const { return specs_.at(index(p)); }
    const std::vector<ParameterSpec>& specs() const noexcept { return specs_; }

    /// Column index for a name; throws InputError when the name is unknown.
    std::size_t index_of(std::string_view name) const;
    std::vector<std::string> names() const;

    /// Throws OutOfBoundsError naming the first offending entry.
    void check(std::span<const double> values) const;
    bool contains(std::span<const double> values) const noexcept;

private:
    std::vector<ParameterSpec> specs_;
};

/// Ordered vector of parameter values keyed to a ParameterSpace.
class ParameterSet {
public:
    ParameterSet() : values_(kNumParams, 0.0) {}
    explicit ParameterSet(std::vector<double> values) : values_(std::move(values)) {}

    /// Midpoint of every range in the space.
    static ParameterSet midpoint(const ParameterSpace& space = ParameterSpace::standard());

    double operator[](Param p) const { return values_.at(index(p)); }
    double& operator[](Param p) { return values_.at(index(p)); }
    double operator[](std::size_t i) const { return values_.at(i); }
    double& operator[](std::size_t i) { return values_.at(i); }

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& data() noexcept { return values_; }

    bool operator==(const ParameterSet&) const = default;

private:
    std::vector<double> values_;
};

}  // namespace hydroinv
