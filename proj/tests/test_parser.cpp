#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "hysim/parser.hpp"

using namespace hysim;

static const char* kFig = R"(
let g = 1    let c = 0.9    let f = 0.05    let x0 = R 5

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

prop   G[0,10] F[0,5] (x-2)
)";

TEST_CASE("reference model parses to the expected AST") {
    Model m = parse_model(kFig, 1);

    CHECK(m.variables == std::vector<std::string>{"t", "x", "vx"});
    CHECK(m.dim() == 3);
    CHECK(m.initial_location == "Fall");
    REQUIRE(m.initial_state.size() == 3);

    // let-bound constants fold; x0 is a sampled point in [0, 5]
    REQUIRE(m.constants.count("g") == 1);
    CHECK(m.constants.at("g").contains(1.0));
    CHECK(m.constants.at("c").contains(0.9));
    CHECK(m.constants.at("f").contains(0.05));
    Interval x0 = m.constants.at("x0");
    CHECK(x0.is_point());
    CHECK(x0.lo() >= 0.0);
    CHECK(x0.hi() <= 5.0);

    Box init = m.initial_box();
    CHECK(init[0].contains(0.0));
    CHECK(init[1].same(Interval(2.0) + x0));
    CHECK(init[2].contains(0.0));

    REQUIRE(m.locations.size() == 2);
    const Location& fall = m.locations[0];
    const Location& rise = m.locations[1];
    CHECK(fall.name == "Fall");
    CHECK(rise.name == "Rise");
    CHECK(fall.field.dim() == 3);
    // dt/dt = 1, dx/dt = vx at any state
    Box probe = Box::from_points({0.3, 1.0, -0.7});
    CHECK(eval_box(fall.field.components[0], probe).contains(1.0));
    CHECK(eval_box(fall.field.components[1], probe).contains(-0.7));
    // Fall drag: -g + f vx^2; Rise drag: -g - f vx^2
    CHECK(eval_box(fall.field.components[2], probe).contains(-1 + 0.05 * 0.49));
    CHECK(eval_box(rise.field.components[2], probe).contains(-1 - 0.05 * 0.49));

    REQUIRE(fall.transitions.size() == 2);
    REQUIRE(rise.transitions.size() == 2);
    CHECK(fall.transitions[0].target == "Fall");
    CHECK(fall.transitions[1].target == "Rise");
    CHECK(rise.transitions[0].target == "Fall");
    CHECK(rise.transitions[1].target == "Rise");
    // guard lists: first entry is the equation, the rest are > 0 side
    // conditions; a literal `true` is dropped
    CHECK(fall.transitions[0].guard_ineqs.size() == 2);
    CHECK(fall.transitions[1].guard_ineqs.size() == 2);
    CHECK(rise.transitions[0].guard_ineqs.size() == 0);
    CHECK(rise.transitions[1].guard_ineqs.size() == 1);
    // guard of Rise->Fall is vx = 0
    CHECK(eval_box(rise.transitions[0].guard_eq, probe).contains(-0.7));
    REQUIRE(fall.transitions[0].reset.size() == 3);
    // reset keeps t and x
    CHECK(eval_box(fall.transitions[0].reset[0], probe).contains(0.3));
    CHECK(eval_box(fall.transitions[0].reset[1], probe).contains(1.0));

    // G[0,10] F[0,5] (x-2) desugars to !(T U[0,10] !(T U[0,5] atom))
    REQUIRE(m.property.has_value());
    Stl p = *m.property;
    REQUIRE(p->op == StlOp::Not);
    REQUIRE(p->a->op == StlOp::Until);
    CHECK(p->a->timed);
    CHECK(p->a->t_lo == 0.0);
    CHECK(p->a->t_hi == 10.0);
    REQUIRE(p->a->b->op == StlOp::Not);
    const Stl& inner = p->a->b->a;
    REQUIRE(inner->op == StlOp::Until);
    CHECK(inner->timed);
    CHECK(inner->t_hi == 5.0);
    REQUIRE(inner->b->op == StlOp::Atom);
    CHECK(eval_box(inner->b->atom, probe).contains(1.0 - 2.0));
    CHECK(stl_required_horizon(p) == 15.0);
}

TEST_CASE("seeded R values are reproducible and seed-sensitive") {
    Model a1 = parse_model(kFig, 12345);
    Model a2 = parse_model(kFig, 12345);
    Model b = parse_model(kFig, 12346);
    CHECK(a1.constants.at("x0").same(a2.constants.at("x0")));
    CHECK(!a1.constants.at("x0").same(b.constants.at("x0")));
    // a batch of seeds stays in range and is spread out
    double lo = 5, hi = 0;
    for (std::uint64_t s = 1; s <= 100; ++s) {
        Interval v = parse_model(kFig, s).constants.at("x0");
        CHECK(v.lo() >= 0.0);
        CHECK(v.hi() <= 5.0);
        lo = std::min(lo, v.lo());
        hi = std::max(hi, v.hi());
    }
    CHECK(lo < 1.0);
    CHECK(hi > 4.0);
}

TEST_CASE("expression printing round-trips through the parser") {
    Model m = parse_model(kFig, 3);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (const auto& loc : m.locations) {
        for (std::size_t i = 0; i < loc.field.dim(); ++i) {
            std::string printed = to_string(loc.field.components[i], m.variables);
            std::string src = "var t, x, vx\ninit A, 0, 0, 0\nat A wait 1, 1, " +
                              printed + "\nend\n";
            Model m2 = parse_model(src, 1);
            const Expr& reparsed = m2.locations[0].field.components[2];
            for (int it = 0; it < 50; ++it) {
                Box env = Box::from_points({d(rng), d(rng), d(rng)});
                Interval x = eval_box(loc.field.components[i], env);
                Interval y = eval_box(reparsed, env);
                CHECK(x.intersects(y));
                CHECK(std::fabs(x.midpoint() - y.midpoint()) < 1e-12 * (1 + x.mag()));
            }
        }
    }
}

TEST_CASE("malformed inputs produce located errors") {
    // Each entry is a self-contained bad model. All must throw a parser
    // error whose message pins down a location (line:col for syntax, a
    // line reference for semantic errors).
    const char* bad[] = {
        // structural
        "init A, 0\nat A wait 1\nend\n",                          // missing var
        "var x\nat A wait 1\nend\n",                              // missing init
        "var x\ninit A, 0\n",                                     // no locations
        "var x\ninit B, 0\nat A wait 1\nend\n",                   // unknown init location
        "var x\ninit A, 0\nat A wait 1\n",                        // missing end
        "var x\ninit A, 0, 1\nat A wait 1\nend\n",                // init arity too high
        "var x, y\ninit A, 0\nat A wait 1, 1\nend\n",             // init arity too low
        "var x\ninit A, 0\nat A wait 1, 1\nend\n",                // field arity too high
        "var x, y\ninit A, 0, 0\nat A wait 1\nend\n",             // field arity too low
        // transitions
        "var x\ninit A, 0\nat A wait 1\nonce (x) goto B then x\nend\n",   // unknown target
        "var x\ninit A, 0\nat A wait 1\nonce x goto A then x\nend\n",     // guard not parenthesized
        "var x\ninit A, 0\nat A wait 1\nonce () goto A then x\nend\n",    // empty guard list
        "var x\ninit A, 0\nat A wait 1\nonce (x) goto A then x, x\nend\n",// reset arity
        "var x\ninit A, 0\nat A wait 1\nonce (x) goto A\nend\n",          // missing then
        // expressions
        "var x\ninit A, 0\nat A wait 1 +\nend\n",                 // dangling operator
        "var x\ninit A, 0\nat A wait bogus(x)\nend\n",            // unknown function
        "var x\ninit A, 0\nat A wait y\nend\n",                   // unknown identifier
        "var x\ninit A, 0\nat A wait x^1.5\nend\n",               // fractional exponent
        "var x\ninit A, 0\nat A wait x^(0-2)\nend\n",             // negative exponent
        "var x\ninit A, 0\nat A wait (1))\nend\n",                // unbalanced parens
        // let and prop
        "let a\nvar x\ninit A, 0\nat A wait 1\nend\n",            // let without =
        "var x\ninit A, 0\nat A wait 1\nend\nprop G[5,1] (x)\n",  // reversed bounds
        "var x\ninit A, 0\nat A wait 1\nend\nprop G[0,10 (x)\n",  // missing bracket
        "var x\ninit A, 0\nat A wait 1\nend\nprop (x\n",          // unterminated prop
    };
    int n = 0;
    for (const char* src : bad) {
        ++n;
        bool threw = false;
        std::string msg;
        try {
            parse_model(src, 1);
        } catch (const SyntaxError& e) {
            threw = true;
            msg = e.what();
            CHECK(e.line >= 1);
            CHECK(e.col >= 1);
        } catch (const SemanticError& e) {
            threw = true;
            msg = e.what();
        }
        INFO("variant ", n, ": ", src);
        CHECK(threw);
        // every message names a location in the source ("at 3:7" or "at line 3")
        CHECK(msg.find(" at ") != std::string::npos);
    }
    CHECK(n >= 20);
}
