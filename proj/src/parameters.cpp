#include "hydroinv/parameters.hpp"

#include <cmath>
#include <sstream>

namespace hydroinv {

namespace {

std::string bounds_message(const std::string& name, double value, double lower, double upper) {
    std::ostringstream os;
    os.precision(17);
    os << "parameter " << name << " = " << value << " outside [" << lower << ", " << upper << "]";
    return os.str();
}

}  // namespace

OutOfBoundsError::OutOfBoundsError(std::string name, double value, double lower, double upper)
    : InputError(bounds_message(name, value, lower, upper)), name_(std::move(name)) {}

ParameterSpace::ParameterSpace(std::vector<ParameterSpec> specs) : specs_(std::move(specs)) {
    if (specs_.empty()) throw InputError("parameter space must not be empty");
    for (const auto& s : specs_) {
        if (!(std::isfinite(s.lower) && std::isfinite(s.upper)) || !(s.lower < s.upper)) {
            throw InputError("parameter " + s.name + ": lower bound must be below upper bound");
        }
    }
}

const ParameterSpace& ParameterSpace::standard() {
    using M = Modification;
    static const ParameterSpace space({
        {"SURLAG", 1, 12, "-", M::Replace, "HRU", "Surface runoff lag coefficient"},
        {"CN", 40, 95, "-", M::Relative, "HRU", "SCS runoff curve number"},
        {"RCHRG_DP", 0, 1, "-", M::Replace, "HRU", "Deep aquifer percolation fraction"},
        {"GWQMN", 0, 5000, "mm", M::Replace, "HRU",
         "Threshold depth of water in the shallow aquifer required for return flow"},
        {"GW_REVAP", 0, 0.2, "-", M::Replace, "HRU", "Groundwater revap coefficient"},
        {"REVAPMN", 1, 500, "mm", M::Replace, "HRU",
         "Threshold depth of water in the shallow aquifer for revap"},
        {"GW_DELAY", 1, 100, "days", M::Replace, "HRU", "Groundwater delay"},
        {"ALPHA_BF", 0.01, 0.99, "1/day", M::Replace, "HRU", "Baseflow alpha factor"},
        {"SOL_K", 0.001, 1000, "mm/h", M::Relative, "HRU", "Saturated hydraulic conductivity"},
        {"SOL_AWC", 0.01, 0.35, "mm/mm", M::Relative, "HRU", "Available water capacity of the soil layer"},
        {"ESCO", 0.01, 1, "-", M::Replace, "HRU", "Soil evaporation compensation factor"},
        {"OV_N", 0.008, 0.6, "-", M::Replace, "HRU", "Manning's n for overland flow"},
        {"CH_K2", 0, 200, "mm/h", M::Replace, "Sub-basin",
         "Effective hydraulic conductivity in main channel alluvium"},
        {"CH_N2", 0.016, 0.15, "-", M::Replace, "Sub-basin", "Manning's n for the main channel"},
        {"SFTMP", -5, 5, "degC", M::Replace, "Basin", "Snowfall temperature"},
        {"SMTMP", -5, 5, "degC", M::Replace, "Basin", "Snow melt base temperature"},
        {"SMFMX", 1.4, 6.9, "mm/degC/day", M::Replace, "Basin", "Maximum melt rate for snow during the year"},
        {"SMFMN", 1.4, 6.9, "mm/degC/day", M::Replace, "Basin", "Minimum melt rate for snow during the year"},
        {"TIMP", 0.01, 1, "-", M::Replace, "Basin", "Snowpack temperature lag factor"},
        {"EPCO", 0.01, 1, "-", M::Replace, "Basin", "Plant uptake compensation factor"},
        {"CANMX", 0, 10, "mm", M::Replace, "HRU", "Maximum canopy storage"},
    });
    return space;
}

std::size_t ParameterSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (specs_[i].name == name) return i;
    }
    throw InputError("unknown parameter name: " + std::string(name));
}

std::vector<std::string> ParameterSpace::names() const {
    std::vector<std::string> out;
    out.reserve(specs_.size());
    for (const auto& s : specs_) out.push_back(s.name);
    return out;
}

void ParameterSpace::check(std::span<const double> values) const {
    if (values.size() != specs_.size()) {
        throw InputError("parameter set has " + std::to_string(values.size()) + " values, expected " +
                         std::to_string(specs_.size()));
    }
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const auto& s = specs_[i];
        if (!std::isfinite(values[i])) throw InputError("parameter " + s.name + " is not finite");
        if (values[i] < s.lower || values[i] > s.upper) {
            throw OutOfBoundsError(s.name, values[i], s.lower, s.upper);
        }
    }
}

bool ParameterSpace::contains(std::span<const double> values) const noexcept {
    if (values.size() != specs_.size()) return false;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (!(values[i] >= specs_[i].lower && values[i] <= specs_[i].upper)) return false;
    }
    return true;
}

ParameterSet ParameterSet::midpoint(const ParameterSpace& space) {
    std::vector<double> v(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) v[i] = space[i].midpoint();
    return ParameterSet(std::move(v));
}

}  // namespace hydroinv
