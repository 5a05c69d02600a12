// neurodrill: command line front end for the simulation, localization,
// tracking and drilling pipelines.

#include <neurodrill/bench.hpp>
#include <neurodrill/event_io.hpp>
#include <neurodrill/report.hpp>
#include <neurodrill/scenario.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

using namespace neurodrill;

namespace {

struct Options {
    std::string scenario = "default";
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> speed;
    std::optional<std::string> lighting;
    std::string events;
    std::string poses;
};

int exit_code(ErrorCode c) {
    return c == ErrorCode::ValidationError || c == ErrorCode::ParseError ? 1 : 2;
}

void emit(const Report& r, const Options& o) {
    if (o.out.empty()) {
        std::cout << r.to_csv();
    } else {
        r.write(o.out);
    }
}

ScenarioConfig configure(const Options& o) {
    ScenarioConfig c = load_scenario(o.scenario);
    if (o.seed) {
        c.seed = *o.seed;
        c.drill.seed = *o.seed;
    }
    if (o.lighting) {
        c.lighting_level(*o.lighting);
        c.lighting = *o.lighting;
    }
    if (o.speed && !(*o.speed > 0.0)) fail(ErrorCode::ValidationError, "--speed: must be positive");
    return c;
}

std::string pose_path_for(const std::string& events) { return events + ".poses.txt"; }

int run(const std::string& cmd, const Options& o) {
    ScenarioConfig c = configure(o);
    if (cmd == "simulate") {
        if (o.out.empty()) fail(ErrorCode::ValidationError, "--out: simulate needs an output path");
        const auto stream = simulate_scan(c, o.speed.value_or(c.drill.scan_speed), c.lighting, c.seed);
        save_events(stream, o.out);
        save_pose_log(stream.poses, pose_path_for(o.out));
        std::cerr << stream.events.size() << " events, " << stream.poses.samples.size() << " poses\n";
    } else if (cmd == "localize") {
        EventStream stream;
        if (!o.events.empty()) {
            const std::string poses = o.poses.empty() ? pose_path_for(o.events) : o.poses;
            if (!std::filesystem::exists(o.events))
                fail(ErrorCode::ValidationError, "--events: file not found: " + o.events);
            if (!std::filesystem::exists(poses)) fail(ErrorCode::ValidationError, "--poses: file not found: " + poses);
            stream = load_events(o.events, poses);
        } else {
            stream = simulate_scan(c, o.speed.value_or(c.drill.scan_speed), c.lighting, c.seed);
        }
        MultiviewCell cell = localize_cell(c, stream);
        emit(localization_report(c, cell), o);
    } else if (cmd == "track") {
        emit(tracking_report(c, run_tracking(c, {o.speed.value_or(c.bench.tracking_speeds.back())})), o);
    } else if (cmd == "drill") {
        DrillSetup s = c.drill_setup();
        if (o.speed) s.scan_speed = *o.speed;
        emit(drill_report(c, run_drill_sequence(s)), o);
    } else if (cmd == "bench-multiview") {
        const std::vector<double> speeds = o.speed ? std::vector<double>{*o.speed} : c.bench.speeds;
        const std::vector<std::string> lighting = o.lighting ? std::vector<std::string>{*o.lighting} : c.bench.lighting;
        emit(bench_multiview(c, speeds, lighting), o);
    } else if (cmd == "bench-tracking") {
        const std::vector<double> speeds = o.speed ? std::vector<double>{*o.speed} : c.bench.tracking_speeds;
        const auto series = run_tracking(c, speeds);
        std::cerr << tracking_summary(c, series).to_csv();
        emit(tracking_report(c, series), o);
    } else if (cmd == "bench-drilling") {
        if (o.speed) c.drill.scan_speed = *o.speed;
        emit(bench_drilling(c), o);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-camera guided robotic drilling: simulation and benchmarks"};
    app.require_subcommand(1, 1);
    Options o;
    const char* names[][2] = {
        {"simulate", "simulate the localization scan and write an event file plus pose log"},
        {"localize", "localize the workpiece holes from a scan"},
        {"track", "track the first hole during a look-down pass"},
        {"drill", "run the full drilling sequence on one workpiece"},
        {"bench-multiview", "localization error over scan speed and lighting"},
        {"bench-tracking", "tracking error time series, Bayesian and frame baselines"},
        {"bench-drilling", "drilling error over jittered workpieces"},
    };
    for (const auto& n : names) {
        auto* sub = app.add_subcommand(n[0], n[1]);
        sub->add_option("--scenario", o.scenario, "scenario JSON path or 'default'");
        sub->add_option("--out", o.out, "output path (stdout when omitted)");
        sub->add_option("--seed", o.seed, "random seed override");
        sub->add_option("--speed", o.speed, "camera speed in m/s");
        sub->add_option("--lighting", o.lighting, "'adequate', 'low' or a positive level");
        if (std::string(n[0]) == "localize") {
            sub->add_option("--events", o.events, "event file to localize instead of simulating");
            sub->add_option("--poses", o.poses, "pose log for --events (default <events>.poses.txt)");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        return run(cmd, o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
