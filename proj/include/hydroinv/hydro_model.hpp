#pragma once

#include <vector>

#include "hydroinv/forcing.hpp"
#include "hydroinv/parameters.hpp"

namespace hydroinv {

/**
 * Lumped daily conceptual watershed model driven by the 21 calibration
 * parameters.
 *
 * Per-day process chain:
 *  1. precipitation falls as snow when mean air temperature <= SFTMP;
 *  2. snowpack temperature lags air temperature with factor TIMP;
 *  3. degree-day melt with a seasonal factor between SMFMN (winter solstice)
 *     and SMFMX (summer solstice), driven by the mean of snowpack temperature
 *     and tmax above SMTMP;
 *  4. rain is intercepted up to CANMX; canopy water evaporates first;
 *  5. SCS curve-number runoff (CN) from throughfall plus melt;
 *  6. infiltration fills a soil bucket of capacity SOL_AWC x soil depth;
 *     evapotranspiration against Hargreaves potential, with soil evaporation
 *     reduced by ESCO and plant uptake increased by EPCO;
 *  7. water above field capacity drains at a rate set by SOL_K into lateral
 *     flow and percolation; water above saturation becomes surface runoff;
 *  8. surface runoff passes a lag store releasing 1 - exp(-SURLAG / t_conc)
 *     per day, t_conc growing with OV_N;
 *  9. percolation reaches the shallow aquifer through a delay store with
 *     time constant GW_DELAY; a fraction RCHRG_DP is lost to the deep aquifer;
 * 10. revap (GW_REVAP x PET) above REVAPMN, baseflow (1 - exp(-ALPHA_BF)) x
 *     storage above GWQMN;
 * 11. channel transmission loss 1 - exp(-CH_K2 / 400) applied to all
 *     channel inflow; quick flow is routed through a linear channel reservoir
 *     whose residence time grows with CH_N2 and OV_N, baseflow enters the
 *     outlet directly.
 *
 * Every flux is non-negative and the water balance closes each day.
 */

/// Fixed process constants of the stand-in model.
struct ModelConstants {
    double drainable_porosity = 0.10;      ///< saturation minus field capacity, fraction of soil depth
    double lateral_fraction = 0.30;        ///< share of soil drainage leaving as lateral flow
    double tconc_hours = 4.0;              ///< concentration time at OV_N = 0.1
    double tconc_ovn_exponent = 0.6;
    double channel_residence_days = 1.0;   ///< at CH_N2 = 0.05 and OV_N = 0.1
    double channel_n_exponent = 0.6;
    double channel_ovn_exponent = 0.1;
    double transmission_scale_mmh = 400.0;
    double et_moisture_fraction = 0.5;     ///< ET unrestricted above this fraction of field capacity
};

struct WatershedState {
    double snow_mm = 0.0;             ///< snow water equivalent
    double snow_temp_c = 0.0;         ///< snowpack temperature
    double canopy_mm = 0.0;
    double soil_mm = 0.0;
    double surface_lag_mm = 0.0;      ///< surface runoff awaiting release
    double recharge_transit_mm = 0.0; ///< percolated water in the vadose delay store
    double aquifer_mm = 0.0;          ///< shallow aquifer
    double channel_mm = 0.0;

    /// Sum of all water storages (snow temperature excluded).
    double total_water() const noexcept {
        return snow_mm + canopy_mm + soil_mm + surface_lag_mm + recharge_transit_mm + aquifer_mm + channel_mm;
    }
    bool valid() const noexcept;
    bool operator==(const WatershedState&) const = default;
};

/// Daily fluxes in mm/day (pet also mm/day).
struct DailyFluxes {
    double precipitation = 0.0;
    double snowfall = 0.0;
    double rainfall = 0.0;
    double melt = 0.0;
    double interception = 0.0;
    double canopy_evaporation = 0.0;
    double surface_runoff = 0.0;   ///< SCS curve-number runoff
    double saturation_excess = 0.0;
    double surface_release = 0.0;
    double soil_et = 0.0;
    double lateral_flow = 0.0;
    double percolation = 0.0;
    double recharge = 0.0;
    double deep_loss = 0.0;
    double revap = 0.0;
    double baseflow = 0.0;
    double transmission_loss = 0.0;
    double channel_outflow = 0.0;
    double discharge = 0.0;        ///< channel outflow plus net baseflow
    double pet = 0.0;

    double evapotranspiration() const noexcept { return canopy_evaporation + soil_et + revap; }
    /// Water leaving the control volume.
    double total_outflow() const noexcept {
        return discharge + evapotranspiration() + deep_loss + transmission_loss;
    }
};

struct StepResult {
    WatershedState state;
    DailyFluxes fluxes;
};

/// Seasonal degree-day melt factor (mm/degC/day).
double melt_factor(double smfmx, double smfmn, int day_of_year);
/// SCS runoff depth for water input `w_mm` and curve number `cn`.
double scs_runoff(double w_mm, double cn);
/// Hargreaves potential evapotranspiration (mm/day).
double hargreaves_pet(double tmax_c, double tmin_c, double latitude_deg, int day_of_year);
/// mm/day over the watershed to m^3/s.
double mm_per_day_to_m3s(double mm_per_day, double area_km2);

/// Initial state used by simulate(): soil at half field capacity, aquifer at GWQMN.
WatershedState initial_state(const ParameterSet& params, const SiteConstants& site);

/// One daily step. Throws InputError on non-finite forcing or parameters.
StepResult step(const WatershedState& state, const DailyForcing& day, const ParameterSet& params,
                int day_of_year, const SiteConstants& site = {}, const ModelConstants& constants = {});

struct DischargeSeries {
    Date start;
    std::vector<double> q_m3s;

    std::size_t size() const noexcept { return q_m3s.size(); }
};

/// Full trace of a run, warm-up included.
struct SimulationTrace {
    std::vector<WatershedState> states;  ///< states[0] is the initial state; size = days + 1
    std::vector<DailyFluxes> fluxes;
};

/**
 * Runs the model over the whole forcing and returns discharge for the days
 * after `warmup_days`. Parameters must lie within the standard bounds.
 */
DischargeSeries simulate(const ParameterSet& params, const ForcingSeries& forcing, int warmup_days = 365,
                         const ModelConstants& constants = {});

SimulationTrace simulate_trace(const ParameterSet& params, const ForcingSeries& forcing,
                               const WatershedState& initial, const ModelConstants& constants = {});

}  // namespace hydroinv
