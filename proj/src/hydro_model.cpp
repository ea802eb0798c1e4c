#include "hydroinv/hydro_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hydroinv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_finite(const DailyForcing& day, const ParameterSet& params) {
    if (!std::isfinite(day.prcp_mm) || !std::isfinite(day.tmax_c) || !std::isfinite(day.tmin_c)) {
        throw InputError("non-finite forcing on " + format_date(day.date));
    }
    if (day.prcp_mm < 0.0) throw InputError("negative precipitation on " + format_date(day.date));
    const auto& space = ParameterSpace::standard();
    if (params.size() != kNumParams) throw InputError("parameter set must have 21 values");
    for (std::size_t i = 0; i < kNumParams; ++i) {
        if (!std::isfinite(params[i])) throw InputError("parameter " + space[i].name + " is not finite");
    }
}

}  // namespace

bool WatershedState::valid() const noexcept {
    const double storages[] = {snow_mm, canopy_mm, soil_mm, surface_lag_mm, recharge_transit_mm, aquifer_mm,
                               channel_mm};
    for (double s : storages) {
        if (!std::isfinite(s) || s < 0.0) return false;
    }
    return std::isfinite(snow_temp_c);
}

double melt_factor(double smfmx, double smfmn, int doy) {
    return 0.5 * (smfmx + smfmn) + 0.5 * (smfmx - smfmn) * std::sin(kTwoPi * (doy - 81) / 365.0);
}

double scs_runoff(double w_mm, double cn) {
    const double s = 25.4 * (1000.0 / cn - 10.0);
    const double ia = 0.2 * s;
    if (w_mm <= ia) return 0.0;
    return (w_mm - ia) * (w_mm - ia) / (w_mm + 0.8 * s);
}

double hargreaves_pet(double tmax_c, double tmin_c, double latitude_deg, int doy) {
    // Extraterrestrial radiation (MJ m-2 day-1) from latitude and day of year.
    const double phi = latitude_deg * std::numbers::pi / 180.0;
    const double dr = 1.0 + 0.033 * std::cos(kTwoPi * doy / 365.0);
    const double decl = 0.409 * std::sin(kTwoPi * doy / 365.0 - 1.39);
    const double ws = std::acos(std::clamp(-std::tan(phi) * std::tan(decl), -1.0, 1.0));
    const double ra = (24.0 * 60.0 / std::numbers::pi) * 0.0820 * dr *
                      (ws * std::sin(phi) * std::sin(decl) + std::cos(phi) * std::cos(decl) * std::sin(ws));
    const double tmean = 0.5 * (tmax_c + tmin_c);
    const double range = std::max(0.0, tmax_c - tmin_c);
    return std::max(0.0, 0.0023 * 0.408 * std::max(0.0, ra) * (tmean + 17.8) * std::sqrt(range));
}

double mm_per_day_to_m3s(double mm_per_day, double area_km2) { return mm_per_day * area_km2 / 86.4; }

WatershedState initial_state(const ParameterSet& params, const SiteConstants& site) {
    WatershedState s;
    s.soil_mm = 0.5 * params[Param::SOL_AWC] * site.soil_depth_mm;
    s.aquifer_mm = params[Param::GWQMN];
    return s;
}

StepResult step(const WatershedState& in, const DailyForcing& day, const ParameterSet& p, int doy,
                const SiteConstants& site, const ModelConstants& k) {
    require_finite(day, p);
    WatershedState s = in;
    DailyFluxes f;
    f.precipitation = day.prcp_mm;
    const double tmean = day.tmean_c();

    // Snow partition, snowpack temperature, melt.
    if (tmean <= p[Param::SFTMP]) {
        f.snowfall = day.prcp_mm;
    } else {
        f.rainfall = day.prcp_mm;
    }
    s.snow_mm += f.snowfall;
    s.snow_temp_c = (1.0 - p[Param::TIMP]) * s.snow_temp_c + p[Param::TIMP] * tmean;
    if (s.snow_mm > 0.0) {
        const double drive = 0.5 * (s.snow_temp_c + day.tmax_c) - p[Param::SMTMP];
        if (drive > 0.0) {
            f.melt = std::min(s.snow_mm, melt_factor(p[Param::SMFMX], p[Param::SMFMN], doy) * drive);
            s.snow_mm -= f.melt;
        }
    }

    // Canopy.
    f.pet = hargreaves_pet(day.tmax_c, day.tmin_c, site.latitude_deg, doy);
    f.interception = std::clamp(p[Param::CANMX] - s.canopy_mm, 0.0, f.rainfall);
    s.canopy_mm += f.interception;
    const double throughfall = f.rainfall - f.interception;
    f.canopy_evaporation = std::min(s.canopy_mm, f.pet);
    s.canopy_mm -= f.canopy_evaporation;

    // Curve-number runoff and infiltration.
    const double water_input = throughfall + f.melt;
    f.surface_runoff = std::min(water_input, scs_runoff(water_input, p[Param::CN]));
    s.soil_mm += water_input - f.surface_runoff;

    // Soil evapotranspiration.
    const double field_capacity = p[Param::SOL_AWC] * site.soil_depth_mm;
    const double demand_pet = f.pet - f.canopy_evaporation;
    const double evap_demand = demand_pet * 0.4 * (1.0 - 0.5 * p[Param::ESCO]);
    const double transp_demand = demand_pet * 0.6 * (0.5 + 0.5 * p[Param::EPCO]);
    const double moisture = std::min(1.0, s.soil_mm / (k.et_moisture_fraction * field_capacity));
    f.soil_et = std::min(s.soil_mm, (evap_demand + transp_demand) * moisture);
    s.soil_mm -= f.soil_et;

    // Drainage above field capacity, saturation overflow.
    const double drainable = k.drainable_porosity * site.soil_depth_mm;
    if (s.soil_mm > field_capacity) {
        const double excess = s.soil_mm - field_capacity;
        const double drain = excess * -std::expm1(-24.0 * p[Param::SOL_K] / drainable);
        f.lateral_flow = k.lateral_fraction * drain;
        f.percolation = drain - f.lateral_flow;
        s.soil_mm -= drain;
        if (s.soil_mm > field_capacity + drainable) {
            f.saturation_excess = s.soil_mm - (field_capacity + drainable);
            s.soil_mm = field_capacity + drainable;
        }
    }

    // Surface runoff lag.
    const double tconc = k.tconc_hours * std::pow(p[Param::OV_N] / 0.1, k.tconc_ovn_exponent);
    s.surface_lag_mm += f.surface_runoff + f.saturation_excess;
    f.surface_release = s.surface_lag_mm * -std::expm1(-p[Param::SURLAG] / tconc);
    s.surface_lag_mm -= f.surface_release;

    // Groundwater recharge through the delay store.
    s.recharge_transit_mm += f.percolation;
    f.recharge = s.recharge_transit_mm * -std::expm1(-1.0 / p[Param::GW_DELAY]);
    s.recharge_transit_mm -= f.recharge;
    f.deep_loss = p[Param::RCHRG_DP] * f.recharge;
    s.aquifer_mm += f.recharge - f.deep_loss;

    if (s.aquifer_mm > p[Param::REVAPMN]) {
        f.revap = std::min(s.aquifer_mm - p[Param::REVAPMN], p[Param::GW_REVAP] * f.pet);
        s.aquifer_mm -= f.revap;
    }
    if (s.aquifer_mm > p[Param::GWQMN]) {
        f.baseflow = (s.aquifer_mm - p[Param::GWQMN]) * -std::expm1(-p[Param::ALPHA_BF]);
        s.aquifer_mm -= f.baseflow;
    }

    // Channel: transmission loss on all inflow, linear reservoir for quick flow.
    const double loss_fraction = -std::expm1(-p[Param::CH_K2] / k.transmission_scale_mmh);
    const double quick_in = f.surface_release + f.lateral_flow;
    const double quick_loss = quick_in * loss_fraction;
    const double base_loss = f.baseflow * loss_fraction;
    f.transmission_loss = quick_loss + base_loss;
    s.channel_mm += quick_in - quick_loss;
    const double residence = k.channel_residence_days * std::pow(p[Param::CH_N2] / 0.05, k.channel_n_exponent) *
                             std::pow(p[Param::OV_N] / 0.1, k.channel_ovn_exponent);
    f.channel_outflow = s.channel_mm * -std::expm1(-1.0 / residence);
    s.channel_mm -= f.channel_outflow;
    f.discharge = f.channel_outflow + (f.baseflow - base_loss);

    return {s, f};
}

DischargeSeries simulate(const ParameterSet& params, const ForcingSeries& forcing, int warmup_days,
                         const ModelConstants& constants) {
    if (forcing.empty()) throw InputError("forcing series is empty");
    if (warmup_days < 0 || static_cast<std::size_t>(warmup_days) >= forcing.size()) {
        throw InputError("forcing length must exceed warm-up days");
    }
    ParameterSpace::standard().check(params.values());

    DischargeSeries out;
    out.start = forcing.days[static_cast<std::size_t>(warmup_days)].date;
    out.q_m3s.reserve(forcing.size() - static_cast<std::size_t>(warmup_days));
    WatershedState state = initial_state(params, forcing.site);
    for (std::size_t i = 0; i < forcing.size(); ++i) {
        const auto& day = forcing.days[i];
        auto r = step(state, day, params, day_of_year(day.date), forcing.site, constants);
        state = r.state;
        if (i >= static_cast<std::size_t>(warmup_days)) {
            out.q_m3s.push_back(mm_per_day_to_m3s(r.fluxes.discharge, forcing.site.area_km2));
        }
    }
    return out;
}

SimulationTrace simulate_trace(const ParameterSet& params, const ForcingSeries& forcing,
                               const WatershedState& initial, const ModelConstants& constants) {
    ParameterSpace::standard().check(params.values());
    SimulationTrace trace;
    trace.states.reserve(forcing.size() + 1);
    trace.fluxes.reserve(forcing.size());
    trace.states.push_back(initial);
    for (const auto& day : forcing.days) {
        auto r = step(trace.states.back(), day, params, day_of_year(day.date), forcing.site, constants);
        trace.states.push_back(r.state);
        trace.fluxes.push_back(r.fluxes);
    }
    return trace;
}

}  // namespace hydroinv
