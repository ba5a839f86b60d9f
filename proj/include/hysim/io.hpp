#pragma once

// Output plumbing: JSON documents for trajectories, verdicts and robustness
// signals, plus flat CSV suitable for band plots. Interval endpoints are
// emitted as decimal strings with outward decimal rounding (lo rounded down,
// hi rounded up) so that a reader parsing the file still holds a valid
// enclosure at any digit count.

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hysim/monitor.hpp"

namespace hysim {

using nlohmann::json;

namespace detail {

inline std::string format_digits(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

// One unit in the last decimal place of the `digits`-digit representation.
inline double decimal_ulp(double v, int digits) {
    if (v == 0 || !std::isfinite(v)) return 0.0;
    double mag = std::floor(std::log10(std::fabs(v)));
    return std::pow(10.0, mag - digits + 1);
}

inline std::string decimal_down(double v, int digits) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
    std::string s = format_digits(v, digits);
    for (int i = 0; i < 4; ++i) {
        double r = std::strtod(s.c_str(), nullptr);
        if (r <= v) return s;
        s = format_digits(r - decimal_ulp(r, digits) * (i + 1), digits);
    }
    return format_digits(std::nextafter(v, -rnd::inf), 17);
}

inline std::string decimal_up(double v, int digits) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
    std::string s = format_digits(v, digits);
    for (int i = 0; i < 4; ++i) {
        double r = std::strtod(s.c_str(), nullptr);
        if (r >= v) return s;
        s = format_digits(r + decimal_ulp(r, digits) * (i + 1), digits);
    }
    return format_digits(std::nextafter(v, rnd::inf), 17);
}

} // namespace detail

inline json to_json(const Interval& iv, int digits = 17) {
    if (iv.is_empty()) return json{{"empty", true}};
    return json{{"lo", detail::decimal_down(iv.lo(), digits)},
                {"hi", detail::decimal_up(iv.hi(), digits)}};
}

inline json to_json(const Box& b, int digits = 17) {
    json a = json::array();
    for (std::size_t i = 0; i < b.dim(); ++i) a.push_back(to_json(b[i], digits));
    return a;
}

inline json to_json(const Trajectory& traj, const std::vector<std::string>& var_names = {},
                    int digits = 17) {
    json j;
    j["status"] = to_string(traj.status);
    if (!traj.failure_reason.empty()) j["failure_reason"] = traj.failure_reason;
    j["t_end"] = detail::decimal_down(traj.t_end, digits);
    j["mode"] = traj.ptope_mode ? "ptope" : "box";
    if (!var_names.empty()) j["variables"] = var_names;
    json runs = json::array();
    for (const auto& run : traj.runs) {
        json r;
        r["location"] = run.location;
        r["t_valid_end"] = detail::decimal_down(run.t_valid_end, digits);
        json segs = json::array();
        for (const auto& seg : run.segments) {
            json s;
            s["t"] = to_json(Interval(seg.t_start, seg.t_end), digits);
            s["x_end"] = to_json(seg.x_end.to_box(), digits);
            segs.push_back(std::move(s));
        }
        r["segments"] = std::move(segs);
        runs.push_back(std::move(r));
    }
    j["runs"] = std::move(runs);
    json events = json::array();
    for (const auto& ev : traj.events) {
        json e;
        e["source"] = ev.source;
        e["target"] = ev.target;
        e["transition"] = ev.transition_index;
        e["tau"] = to_json(ev.tau, digits);
        e["state_at_crossing"] = to_json(ev.state_at_crossing, digits);
        e["state_after"] = to_json(ev.state_after, digits);
        events.push_back(std::move(e));
    }
    j["events"] = std::move(events);
    return j;
}

inline json to_json(const Verdict& v) {
    json j;
    j["verdict"] = to_string(v);
    return j;
}

inline json to_json(const RobustnessSignal& rs, int digits = 17) {
    json j;
    j["horizon"] = detail::decimal_up(rs.horizon, digits);
    json segs = json::array();
    for (const auto& s : rs.segs) {
        json e;
        e["t"] = to_json(s.time, digits);
        e["value"] = to_json(s.value, digits);
        e["monotone"] = s.mono == Mono::Inc ? "inc" : (s.mono == Mono::Dec ? "dec" : "unknown");
        segs.push_back(std::move(e));
    }
    j["segments"] = std::move(segs);
    return j;
}

// CSV band plot of a trajectory: each row is one sub-window of a segment
// with the per-variable enclosure over it.
inline void export_trajectory_csv(const Trajectory& traj, std::ostream& os,
                                  const std::vector<std::string>& var_names,
                                  int nplot = 4, int digits = 17) {
    os << "t.lo,t.hi";
    for (const auto& v : var_names) os << "," << v << ".lo," << v << ".hi";
    os << "\n";
    for (const auto& run : traj.runs) {
        for (const auto& seg : run.segments) {
            double a = seg.t_start;
            double b = std::min(seg.t_end, run.t_valid_end);
            if (!(b > a)) continue;
            for (int i = 0; i < nplot; ++i) {
                Interval w(a + (b - a) * i / nplot, a + (b - a) * (i + 1) / nplot);
                Box x = seg.eval_global(w);
                os << detail::decimal_down(w.lo(), digits) << ","
                   << detail::decimal_up(w.hi(), digits);
                for (std::size_t k = 0; k < x.dim(); ++k)
                    os << "," << detail::decimal_down(x[k].lo(), digits) << ","
                       << detail::decimal_up(x[k].hi(), digits);
                os << "\n";
            }
        }
    }
}

inline void export_robustness_csv(const RobustnessSignal& rs, std::ostream& os,
                                  int digits = 17) {
    os << "t.lo,t.hi,v.lo,v.hi,monotone\n";
    for (const auto& s : rs.segs)
        os << detail::decimal_down(s.time.lo(), digits) << ","
           << detail::decimal_up(s.time.hi(), digits) << ","
           << detail::decimal_down(s.value.lo(), digits) << ","
           << detail::decimal_up(s.value.hi(), digits) << ","
           << (s.mono == Mono::Inc ? "inc" : (s.mono == Mono::Dec ? "dec" : "unknown"))
           << "\n";
}

} // namespace hysim
