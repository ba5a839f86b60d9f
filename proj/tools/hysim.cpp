// Command line front end: load a model, simulate, monitor, export.
//
// Exit codes: 0 success (verdicts, including unknown, live in the output),
// 1 model parse error, 2 runtime failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hysim/io.hpp"
#include "hysim/parser.hpp"

namespace fs = std::filesystem;
using namespace hysim;

namespace {

struct RunConfig {
    std::string model_path;
    std::uint64_t seed = 1;
    int max_jumps = 1000;
    double max_time = 20.0;
    std::string mode = "ptope";
    int order = 10;
    double tol_event = 1e-10;
    std::string monitor = "auto"; // auto|bool|rob|off
    int batch = 1;
    std::string out_dir = ".";
    std::string format = "json";
    int digits = 17;
    bool compare = false;
};

SimOptions sim_options(const RunConfig& cfg) {
    SimOptions o;
    o.ode.box_mode = cfg.mode == "box";
    o.ode.order = cfg.order;
    o.tol_event = cfg.tol_event;
    o.max_jumps = cfg.max_jumps;
    o.max_time = cfg.max_time;
    return o;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read model file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunResult {
    Trajectory traj;
    std::string verdict_line;
    double seconds = 0;
};

RunResult one_run(const std::string& src, const RunConfig& cfg, std::uint64_t seed) {
    Model m = parse_model(src, seed);
    auto t0 = std::chrono::steady_clock::now();
    RunResult rr;
    rr.traj = simulate(m, sim_options(cfg));
    bool want_bool = cfg.monitor == "bool" || (cfg.monitor == "auto" && m.property);
    bool want_rob = cfg.monitor == "rob";
    if ((want_bool || want_rob) && !m.property)
        throw std::runtime_error("monitoring requested but the model has no prop clause");
    std::string base = "run_" + std::to_string(seed);
    fs::path out(cfg.out_dir);
    if (cfg.format == "json") {
        std::ofstream f(out / (base + ".trajectory.json"));
        f << to_json(rr.traj, m.variables, cfg.digits).dump(2) << "\n";
    } else {
        std::ofstream f(out / (base + ".trajectory.csv"));
        export_trajectory_csv(rr.traj, f, m.variables, 4, cfg.digits);
    }
    {
        std::ofstream f(out / (base + ".certificate.txt"));
        f << verification_certificate(rr.traj);
    }
    if (want_bool) {
        Verdict v = evaluate(m, rr.traj);
        rr.verdict_line = to_string(v);
    } else if (want_rob) {
        RobustnessSignal rs = robustness(m, rr.traj);
        std::ofstream f(out / (base + ".robustness.csv"));
        export_robustness_csv(rs, f, cfg.digits);
        Interval r0 = rs.at(0.0);
        rr.verdict_line = "rho(0) = [" + detail::decimal_down(r0.lo(), 6) + ", " +
                          detail::decimal_up(r0.hi(), 6) + "]";
    }
    rr.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rr;
}

int do_compare(const std::string& src, RunConfig cfg) {
    for (const char* mode : {"ptope", "box"}) {
        cfg.mode = mode;
        Model m = parse_model(src, cfg.seed);
        auto t0 = std::chrono::steady_clock::now();
        Trajectory tr = simulate(m, sim_options(cfg));
        double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();
        std::size_t phases = 0;
        for (const auto& r : tr.runs) phases += r.segments.size();
        std::cout << mode << ": jumps=" << tr.events.size() << " t_end=" << tr.t_end
                  << " status=" << to_string(tr.status);
        if (!tr.failure_reason.empty()) std::cout << " (" << tr.failure_reason << ")";
        if (phases + tr.events.size() > 0)
            std::cout << " mean_phase_time="
                      << el / (double)(phases + tr.events.size()) << "s";
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"validated hybrid-system simulator and STL monitor"};
    app.add_option("--model", cfg.model_path, "model file")->required();
    app.add_option("--seed", cfg.seed, "seed for R values (batch runs use seed+i)");
    app.add_option("--jumps", cfg.max_jumps, "maximum number of jumps");
    app.add_option("--time", cfg.max_time, "maximum simulated time");
    app.add_option("--mode", cfg.mode, "enclosure mode")
        ->check(CLI::IsMember({"ptope", "box"}));
    app.add_option("--order", cfg.order, "Taylor series order")->check(CLI::Range(2, 40));
    app.add_option("--tol-event", cfg.tol_event, "event time tolerance")
        ->check(CLI::PositiveNumber);
    app.add_option("--monitor", cfg.monitor, "monitoring mode")
        ->check(CLI::IsMember({"auto", "bool", "rob", "off"}));
    app.add_option("--batch", cfg.batch, "number of seeded runs")->check(CLI::Range(1, 1000000));
    app.add_option("--out", cfg.out_dir, "output directory");
    app.add_option("--format", cfg.format, "trajectory file format")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--digits", cfg.digits, "decimal digits in output enclosures")
        ->check(CLI::Range(3, 17));
    app.add_flag("--compare", cfg.compare, "run both modes and report jump counts");
    CLI11_PARSE(app, argc, argv);

    std::string src;
    try {
        src = read_file(cfg.model_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        parse_model(src, cfg.seed); // surface syntax errors up front
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    }

    try {
        fs::create_directories(cfg.out_dir);
        if (cfg.compare) return do_compare(src, cfg);

        int n_valid = 0, n_unsat = 0, n_unknown = 0;
        double total = 0;
        for (int i = 0; i < cfg.batch; ++i) {
            std::uint64_t seed = cfg.seed + (std::uint64_t)i;
            RunResult rr = one_run(src, cfg, seed);
            total += rr.seconds;
            if (!rr.verdict_line.empty()) {
                std::cout << "seed " << seed << ": " << rr.verdict_line << "\n";
                if (rr.verdict_line == "valid") ++n_valid;
                else if (rr.verdict_line == "unsat") ++n_unsat;
                else if (rr.verdict_line.rfind("unknown", 0) == 0) ++n_unknown;
            } else {
                std::cout << "seed " << seed << ": " << to_string(rr.traj.status)
                          << " jumps=" << rr.traj.events.size() << " t_end=" << rr.traj.t_end
                          << "\n";
            }
        }
        if (cfg.batch > 1) {
            std::cout << "# valid & # unsat & # unknown & mean time\n"
                      << n_valid << " & " << n_unsat << " & " << n_unknown << " & "
                      << total / cfg.batch << "s\n";
            std::ofstream agg(fs::path(cfg.out_dir) / "aggregate.csv");
            agg << "valid,unsat,unknown,mean_time\n"
                << n_valid << "," << n_unsat << "," << n_unknown << ","
                << total / cfg.batch << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
