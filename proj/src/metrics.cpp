#include "hydroinv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hydroinv/io.hpp"
#include "hydroinv/parameters.hpp"

namespace hydroinv {

namespace {

void check_pair(std::span<const double> obs, std::span<const double> sim, const char* what) {
    if (obs.size() != sim.size()) {
        throw InputError(std::string(what) + ": length mismatch (" + std::to_string(obs.size()) + " vs " +
                         std::to_string(sim.size()) + ")");
    }
    if (obs.size() < 2) throw InputError(std::string(what) + ": need at least 2 values");
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct Moments {
    double mo, ms, so, ss, cov;
};

Moments moments(std::span<const double> o, std::span<const double> s) {
    Moments m{mean(o), mean(s), 0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double a = o[i] - m.mo;
        const double b = s[i] - m.ms;
        m.so += a * a;
        m.ss += b * b;
        m.cov += a * b;
    }
    const double n = static_cast<double>(o.size());
    m.so = std::sqrt(m.so / n);
    m.ss = std::sqrt(m.ss / n);
    m.cov /= n;
    return m;
}

}  // namespace

double nse(std::span<const double> obs, std::span<const double> sim) {
    check_pair(obs, sim, "nse");
    const double mo = mean(obs);
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        sse += (obs[i] - sim[i]) * (obs[i] - sim[i]);
        sst += (obs[i] - mo) * (obs[i] - mo);
    }
    if (sst == 0.0) throw InputError("nse: observations are constant");
    return 1.0 - sse / sst;
}

double lognse(std::span<const double> obs, std::span<const double> sim, double epsilon) {
    check_pair(obs, sim, "lognse");
    std::vector<double> lo(obs.size()), ls(sim.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double a = obs[i] + epsilon;
        const double b = sim[i] + epsilon;
        if (!(a > 0.0) || !(b > 0.0)) {
            throw InputError("lognse: non-positive shifted flow at index " + std::to_string(i));
        }
        lo[i] = std::log(a);
        ls[i] = std::log(b);
    }
    return nse(lo, ls);
}

double pearson(std::span<const double> obs, std::span<const double> sim) {
    check_pair(obs, sim, "pearson");
    const auto m = moments(obs, sim);
    if (m.so == 0.0 || m.ss == 0.0) throw InputError("pearson: constant series");
    return std::clamp(m.cov / (m.so * m.ss), -1.0, 1.0);
}

double r2_score(std::span<const double> obs, std::span<const double> sim) {
    const double r = pearson(obs, sim);
    return r * r;
}

double kge(std::span<const double> obs, std::span<const double> sim) {
    check_pair(obs, sim, "kge");
    const auto m = moments(obs, sim);
    if (m.so == 0.0) throw InputError("kge: observations have zero variance");
    if (m.mo == 0.0) throw InputError("kge: observations have zero mean");
    const double r = m.ss == 0.0 ? 0.0 : std::clamp(m.cov / (m.so * m.ss), -1.0, 1.0);
    const double alpha = m.ss / m.so;
    const double beta = m.ms / m.mo;
    return 1.0 - std::sqrt((r - 1.0) * (r - 1.0) + (alpha - 1.0) * (alpha - 1.0) + (beta - 1.0) * (beta - 1.0));
}

PercentError percent_error(double truth, double estimate) {
    if (truth == 0.0) return {estimate - truth, true};
    return {100.0 * (estimate - truth) / std::abs(truth), false};
}

std::vector<PercentError> percent_error(std::span<const double> truth, std::span<const double> estimate) {
    if (truth.size() != estimate.size()) throw InputError("percent_error: length mismatch");
    std::vector<PercentError> out(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) out[i] = percent_error(truth[i], estimate[i]);
    return out;
}

BandStats band_stats(std::span<const double> obs, const Matrix& members) {
    if (members.rows() < 2) throw InputError("band_stats: need at least 2 ensemble members");
    if (members.cols() != obs.size()) throw InputError("band_stats: member length does not match observations");
    if (obs.empty()) throw InputError("band_stats: empty series");
    double width = 0.0;
    std::size_t inside = 0;
    for (std::size_t t = 0; t < obs.size(); ++t) {
        double lo = members(0, t), hi = members(0, t);
        for (std::size_t r = 1; r < members.rows(); ++r) {
            lo = std::min(lo, members(r, t));
            hi = std::max(hi, members(r, t));
        }
        width += hi - lo;
        if (obs[t] >= lo && obs[t] <= hi) ++inside;
    }
    const double n = static_cast<double>(obs.size());
    return {width / n, static_cast<double>(inside) / n};
}

MetricsReport evaluate(std::span<const double> obs, std::span<const double> sim, const std::string& period,
                       double log_epsilon) {
    MetricsReport r;
    r.period = period;
    r.nse = nse(obs, sim);
    r.lognse = lognse(obs, sim, log_epsilon);
    r.kge = kge(obs, sim);
    r.pearson_r = pearson(obs, sim);
    r.r2 = r.pearson_r * r.pearson_r;
    return r;
}

std::string format_report(const MetricsReport& r) {
    std::ostringstream os;
    os << "period=" << r.period << '\n'
       << "r2=" << io::format_double(r.r2) << '\n'
       << "nse=" << io::format_double(r.nse) << '\n'
       << "lognse=" << io::format_double(r.lognse) << '\n'
       << "kge=" << io::format_double(r.kge) << '\n'
       << "pearson_r=" << io::format_double(r.pearson_r) << '\n';
    return os.str();
}

MetricsReport parse_report(const std::string& text) {
    MetricsReport r;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string_view val = io::trim(std::string_view(line).substr(eq + 1));
        if (key == "period") r.period = std::string(val);
        else if (key == "r2") r.r2 = io::parse_double(val);
        else if (key == "nse") r.nse = io::parse_double(val);
        else if (key == "lognse") r.lognse = io::parse_double(val);
        else if (key == "kge") r.kge = io::parse_double(val);
        else if (key == "pearson_r") r.pearson_r = io::parse_double(val);
        else throw InputError("metrics report: unknown field '" + key + "'");
    }
    return r;
}

}  // namespace hydroinv
