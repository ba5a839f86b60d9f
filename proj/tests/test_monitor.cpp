#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hysim/monitor.hpp"
#include "hysim/parser.hpp"

using namespace hysim;

static const char* kClock = R"(
var t, x
init Only, 0, 1
at Only wait 1, 0
end
prop F[0,5] (t - 3)
)";

static const char* kRot = R"(
var x1, x2
init Rot, 1, 0
at Rot wait -x2, x1
end
prop F (x2 - 0.5)
)";

TEST_CASE("Kleene truth operations") {
    CHECK(truth_not(Truth::True) == Truth::False);
    CHECK(truth_not(Truth::Unknown) == Truth::Unknown);
    CHECK(truth_and(Truth::True, Truth::Unknown) == Truth::Unknown);
    CHECK(truth_and(Truth::False, Truth::Unknown) == Truth::False);
    CHECK(truth_or(Truth::True, Truth::Unknown) == Truth::True);
    CHECK(truth_or(Truth::False, Truth::Unknown) == Truth::Unknown);
}

TEST_CASE("signal push merges adjacent equal pieces") {
    Signal s;
    s.horizon = 3.0;
    s.push(0.0, 1.0, Truth::True);
    s.push(1.0, 2.0, Truth::True);
    s.push(2.0, 3.0, Truth::False);
    CHECK(s.pieces.size() == 2);
    CHECK(s.at(0.5) == Truth::True);
    CHECK(s.at(1.999) == Truth::True);
    CHECK(s.at(2.0) == Truth::False);
}

TEST_CASE("clock verdicts across the operator set") {
    Model m = parse_model(kClock, 1);
    SimOptions o;
    o.max_time = 10.0;
    Trajectory tr = simulate(m, o);
    REQUIRE(tr.verified());

    CHECK(evaluate(m, tr).valid());                           // F[0,5](t-3)
    CHECK(evaluate(m, tr, stl_eventually(stl_atom(sub(var(1), constant(2.0))), true, 0, 5))
              .unsat());                                      // x = 1 never > 2
    CHECK(evaluate(m, tr, stl_always(stl_atom(sub(var(1), constant(0.5))), true, 0, 5))
              .valid());                                      // x = 1 > 0.5 always
    // untimed F with a witness inside the horizon decides early
    CHECK(evaluate(m, tr, stl_until(stl_true(), stl_atom(sub(var(0), constant(3.0))),
                                    false, 0, 0))
              .valid());
    // timed G reaching past the horizon with no falsification is unknown
    Verdict v = evaluate(m, tr, stl_always(stl_atom(sub(var(1), constant(0.5))), true, 0, 20));
    CHECK(v.value == Truth::Unknown);
    CHECK(v.reason == UnknownReason::HorizonTooShort);
    CHECK(to_string(v) == "unknown(horizon-too-short)");

    // and/or composition
    Stl good = stl_atom(sub(var(1), constant(0.5)));
    Stl bad = stl_atom(sub(var(1), constant(2.0)));
    CHECK(evaluate(m, tr, stl_always(stl_and(good, stl_not(bad)), true, 0, 5)).valid());
    CHECK(evaluate(m, tr, stl_always(stl_or(bad, good), true, 0, 5)).valid());
    CHECK(evaluate(m, tr, stl_always(stl_and(good, bad), true, 0, 5)).unsat());
}

TEST_CASE("atomic signal localizes zero crossings tightly") {
    Model m = parse_model(kClock, 1);
    SimOptions o;
    o.max_time = 10.0;
    Trajectory tr = simulate(m, o);
    Signal s = atomic_signal(m, tr, sub(var(0), constant(3.0)));
    auto iv = s.truth_intervals();
    REQUIRE(iv.size() == 1);
    CHECK(iv[0].first.contains(3.0));
    CHECK(iv[0].first.width() < 1e-8);
    CHECK(s.at(2.9) == Truth::False);
    CHECK(s.at(3.1) == Truth::True);
}

TEST_CASE("rotation onsets sit at the arcsin instants") {
    Model m = parse_model(kRot, 1);
    SimOptions o;
    o.max_time = 4 * M_PI;
    Trajectory tr = simulate(m, o);
    REQUIRE(tr.verified());
    Signal s = atomic_signal(m, tr, sub(var(1), constant(0.5)));
    auto iv = s.truth_intervals();
    // x2(t) = sin(t) > 0.5 on (pi/6, 5pi/6) + 2k pi: two periods fit
    REQUIRE(iv.size() == 2);
    CHECK(iv[0].first.contains(M_PI / 6));
    CHECK(iv[0].second.contains(5 * M_PI / 6));
    CHECK(iv[1].first.contains(M_PI / 6 + 2 * M_PI));
    CHECK(iv[1].second.contains(5 * M_PI / 6 + 2 * M_PI));
    CHECK(iv[0].first.width() < 1e-6);
}

TEST_CASE("robustness signal encloses the dense reference") {
    Model m = parse_model(kRot, 1);
    SimOptions o;
    o.max_time = 4 * M_PI;
    Trajectory tr = simulate(m, o);
    RobustnessSignal rs = robustness(m, tr);
    REQUIRE(!rs.segs.empty());
    int misses = 0;
    double maxw = 0;
    for (int i = 0; i < 1000; ++i) {
        double t = rs.horizon * i / 1000.0;
        double best = -2;
        for (double u = t; u <= rs.horizon; u += 1e-4)
            best = std::max(best, std::sin(u) - 0.5);
        Interval enc = rs.at(t);
        if (!enc.contains(best)) ++misses;
        maxw = std::max(maxw, enc.width());
    }
    CHECK(misses == 0);
    CHECK(maxw < 0.1);
    // sign of rho(0) agrees with the boolean verdict
    Interval r0 = rs.at(0.0);
    CHECK(r0.lo() > 0);
    CHECK(evaluate(m, tr).valid());
}

TEST_CASE("robustness duality G(p) = -F(-p)") {
    Model m = parse_model(kRot, 1);
    SimOptions o;
    o.max_time = 4 * M_PI;
    Trajectory tr = simulate(m, o);
    Expr p = sub(var(1), constant(0.5));
    RobustnessSignal rg = robustness(
        m, tr, stl_not(stl_until(stl_true(), stl_not(stl_atom(p)), false, 0, 0)));
    RobustnessSignal rf =
        robustness(m, tr, stl_until(stl_true(), stl_atom(neg(p)), false, 0, 0));
    for (int i = 0; i < 100; ++i) {
        double t = rg.horizon * i / 100.0;
        CHECK(rg.at(t).intersects(-rf.at(t)));
    }
}

TEST_CASE("timed robustness is rejected explicitly") {
    Model m = parse_model(kRot, 1);
    SimOptions o;
    o.max_time = 4.0;
    Trajectory tr = simulate(m, o);
    CHECK_THROWS_AS(
        robustness(m, tr, stl_eventually(stl_atom(sub(var(1), constant(0.5))), true, 0, 2)),
        UnsupportedTimedRobustness);
}

TEST_CASE("verification failure downgrades conclusive-looking verdicts") {
    // tangential guard contact leaves the trajectory unverified; a property
    // that looks decided on the valid prefix must come back unknown with
    // the verification-failed reason when the horizon is not covered
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
    REQUIRE(!tr.verified());
    Verdict v = evaluate(m, tr, stl_always(stl_atom(sub(constant(2.0), var(0))), true, 0, 3));
    CHECK(v.value == Truth::Unknown);
    CHECK(v.reason == UnknownReason::VerificationFailed);
}

TEST_CASE("until with a left operand that fails before the witness") {
    Model m = parse_model(kClock, 1);
    SimOptions o;
    o.max_time = 10.0;
    Trajectory tr = simulate(m, o);
    // (t < 2) U[0,5] (t > 3): left side dies at t = 2 before the right side
    // can fire at t = 3, so the until is unsat at time 0
    Stl left = stl_atom(sub(constant(2.0), var(0)));
    Stl right = stl_atom(sub(var(0), constant(3.0)));
    CHECK(evaluate(m, tr, stl_until(left, right, true, 0, 5)).unsat());
    // (t < 4) U[0,5] (t > 3) holds: witness at 3+ while left still true
    Stl left2 = stl_atom(sub(constant(4.0), var(0)));
    CHECK(evaluate(m, tr, stl_until(left2, right, true, 0, 5)).valid());
}

TEST_CASE("boundary atoms come back unknown, not decided") {
    // x = 1 exactly: atom x - 1 evaluates to zero width at zero
    Model m = parse_model(kClock, 1);
    SimOptions o;
    o.max_time = 10.0;
    Trajectory tr = simulate(m, o);
    Verdict v = evaluate(m, tr, stl_always(stl_atom(sub(var(1), constant(1.0))), true, 0, 5));
    CHECK(v.value == Truth::Unknown);
    CHECK(v.reason == UnknownReason::BoundaryAtZero);
}
