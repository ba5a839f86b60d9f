#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "hysim/parser.hpp"
#include "hysim/simulate.hpp"
#include "reference.hpp"

using namespace hysim;

static const char* kFlatBall = R"(
let g = 1   let c = 0.9
var x, vx
init Fall, 1, 0
at Fall wait vx, -g
    once (x, -vx) goto Fall then x, -c*vx
end
)";

static const char* kBbSin = R"(
let g = 1    let c = 0.9    let f = 0.05    let x0 = 1
var    t, x, vx
init   Fall, 0, 2+x0, 0
at Fall wait 1, vx, -g + f*vx^2
    once (sin(t)-x, cos(t)-vx,   c*vx - (c+1)*cos(t))
                       goto Fall then t, x, -c*vx + (c+1)*cos(t)
    once (sin(t)-x, cos(t)-vx, -c*vx + (c+1)*cos(t))
                       goto Rise then t, x, -c*vx + (c+1)*cos(t)
end
at Rise wait 1, vx, -g - f*vx^2
    once (vx, true)  goto Fall then t, x, vx
    once (sin(t)-x, cos(t)-vx)
                       goto Rise then t, x, -c*vx + (c+1)*cos(t)
end
)";

TEST_CASE("flat ball bounce times match the closed form") {
    Model m = parse_model(kFlatBall, 1);
    SimOptions o;
    o.max_time = 26.5; // Zeno accumulation is at 19*sqrt(2) = 26.87
    o.max_jumps = 30;
    Trajectory tr = simulate(m, o);
    REQUIRE(tr.events.size() == 30);
    auto exact = refsim::flat_ball_bounce_times(1.0, 1.0, 0.9, 30);
    for (std::size_t k = 0; k < 30; ++k) {
        INFO("bounce ", k);
        CHECK(tr.events[k].tau.contains(exact[k]));
        CHECK(tr.events[k].tau.width() <= 1e-7);
    }
    // impact states: x = 0, vx before reset is -v_k
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(tr.events[k].state_at_crossing[0].contains(0.0));
        double vk = std::sqrt(2.0) * std::pow(0.9, (double)k);
        CHECK(tr.events[k].state_at_crossing[1].contains(-vk));
        CHECK(tr.events[k].state_after[1].contains(0.9 * vk));
    }
}

TEST_CASE("bb-sin runs verified jumps and respects location switching") {
    Model m = parse_model(kBbSin, 1);
    SimOptions o;
    o.max_time = 15.0;
    Trajectory tr = simulate(m, o);
    CHECK(tr.events.size() >= 10);
    CHECK(tr.t_end >= 15.0 - 1e-9);
    CHECK(tr.verified());
    // every event's tau is ordered, with the target matching the next run
    for (std::size_t k = 0; k + 1 < tr.events.size(); ++k)
        CHECK(tr.events[k].tau.hi() <= tr.events[k + 1].tau.lo());
    REQUIRE(tr.runs.size() == tr.events.size() + 1);
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
        CHECK(tr.events[k].source == tr.runs[k].location);
        CHECK(tr.events[k].target == tr.runs[k + 1].location);
    }
    // the crossing state satisfies the guard: sin(t) - x contains 0
    for (const auto& ev : tr.events) {
        if (ev.source == "Rise" && ev.transition_index == 0) continue; // vx = 0 guard
        Interval g = sin(ev.tau) - ev.state_at_crossing[1];
        CHECK(g.contains(0.0));
    }
}

TEST_CASE("bb-sin enclosure contains the RK4 reference bounce trace") {
    Model m = parse_model(kBbSin, 1);
    SimOptions o;
    o.max_time = 12.0;
    Trajectory tr = simulate(m, o);
    auto ref = refsim::bb_sin_reference(1.0, 12.0, 0.9, 1e-2);
    // reference bounce times: scan the first few taus against a direct
    // re-simulation; the coarse grid of `above` also cross-checks x > 2 at
    // the sampled instants against the flow enclosures
    std::size_t si = 0, run = 0;
    int checked = 0, misses = 0;
    for (std::size_t k = 0; k < ref.above.size(); ++k) {
        double t = k * ref.grid;
        if (t >= tr.t_end) break;
        while (run < tr.runs.size() && tr.runs[run].t_valid_end < t) { ++run; si = 0; }
        if (run == tr.runs.size()) break;
        const auto& segs = tr.runs[run].segments;
        while (si < segs.size() && segs[si].t_end < t) ++si;
        if (si == segs.size() || segs[si].t_start > t) continue; // jump gap
        Box e = segs[si].eval_global(Interval(t));
        bool above = e[1].lo() > 2.0, below = e[1].hi() < 2.0;
        if (above && !ref.above[k]) ++misses;
        if (below && ref.above[k]) ++misses;
        ++checked;
    }
    CHECK(checked > 500);
    CHECK(misses == 0);
}

TEST_CASE("interval initial sets still simulate and shrink jump counts") {
    Model pt = parse_model(kBbSin, 1);
    SimOptions o;
    o.max_time = 12.0;
    Trajectory tp = simulate(pt, o);

    // same model with the initial height widened to a 1e-2 interval
    Model wm = parse_model(kBbSin, 1);
    wm.initial_state[1] = constant(Interval(2.995, 3.005));
    Trajectory tw = simulate(wm, o);
    CHECK(tw.events.size() < tp.events.size());
    CHECK(tw.events.size() >= 1);
}

TEST_CASE("max_jumps and max_time caps are respected") {
    Model m = parse_model(kFlatBall, 1);
    SimOptions o;
    o.max_time = 100.0;
    o.max_jumps = 3;
    Trajectory tr = simulate(m, o);
    CHECK(tr.events.size() == 3);
    o.max_jumps = 100000;
    o.max_time = 2.0;
    tr = simulate(m, o);
    CHECK(tr.events.size() == 1); // only the first bounce at sqrt(2) < 2
    CHECK(tr.t_end == doctest::Approx(2.0));
}

TEST_CASE("box mode dies earlier than parallelotope mode on bb-sin") {
    Model m = parse_model(kBbSin, 1);
    SimOptions o;
    o.max_time = 40.0;
    Trajectory tp = simulate(m, o);
    SimOptions ob = o;
    ob.ode.box_mode = true;
    Trajectory tb = simulate(parse_model(kBbSin, 1), ob);
    CHECK(tp.events.size() > tb.events.size());
}

TEST_CASE("grazing guard contact is reported as a failure, not an answer") {
    // thrown up with exactly the energy to reach the guard level: from
    // x(0) = 0 with vx(0) = 1 under x'' = -2, the apex x = 1/4 at t = 1/2
    // touches the guard x - 1/4 = 0 tangentially
    const char* graze = R"(
var x, vx
init Up, 0, 1
at Up wait vx, 0-2
    once (x - 0.25, 1) goto Up then x, vx
end
)";
    Model m = parse_model(graze, 1);
    SimOptions o;
    o.max_time = 3.0;
    Trajectory tr = simulate(m, o);
    // apex is exactly 1/8 at t = 1/4: tangential contact
    CHECK(tr.status != SimStatus::Completed);
    CHECK(!tr.verified());
    CHECK(!tr.failure_reason.empty());
}

TEST_CASE("trajectory validity ends at the first failure") {
    Model m = parse_model(kFlatBall, 1);
    SimOptions o;
    o.max_time = 22.0; // past the Zeno accumulation near t = 26.9? no: 19*sqrt(2)=26.87
    o.max_jumps = 100000;
    Trajectory tr = simulate(m, o);
    // either completes the horizon or fails verified=false with reason
    if (tr.status == SimStatus::Completed) {
        CHECK(tr.t_end >= 22.0 - 1e-9);
    } else {
        CHECK(!tr.failure_reason.empty());
        CHECK(tr.t_end <= 22.0);
    }
}
