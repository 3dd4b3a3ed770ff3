#pragma once

// File formats: flat INI-style run configuration, CSV schedules and
// trajectories (fixed headers, %.17g so re-runs reproduce bytes), JSON
// reports via nlohmann::json.

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qoctl/analytic.hpp"
#include "qoctl/bloch.hpp"
#include "qoctl/dissipators.hpp"
#include "qoctl/dynamics.hpp"
#include "qoctl/errors.hpp"
#include "qoctl/optimizer.hpp"
#include "qoctl/pmp.hpp"
#include "qoctl/version.hpp"

namespace qoctl {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// INI-style configuration: [section] headers, key = value lines, # comments.

struct IniFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static std::string trim(const std::string& s) {
        auto b = s.find_first_not_of(" \t\r\n");
        auto e = s.find_last_not_of(" \t\r\n");
        return b == std::string::npos ? "" : s.substr(b, e - b + 1);
    }

    static IniFile parse(std::istream& in, const std::string& origin = "<config>") {
        IniFile ini;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw input_error(origin + ":" + std::to_string(lineno) +
                                      ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw input_error(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            ini.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        return ini;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        auto s = sections.find(section);
        if (s == sections.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }
    double get_double(const std::string& section, const std::string& key, double fallback) const {
        auto v = get(section, key);
        if (!v) return fallback;
        try {
            return std::stod(*v);
        } catch (...) {
            throw input_error("config: " + section + "." + key + " is not a number: " + *v);
        }
    }
    long get_int(const std::string& section, const std::string& key, long fallback) const {
        auto v = get(section, key);
        if (!v) return fallback;
        try {
            return std::stol(*v);
        } catch (...) {
            throw input_error("config: " + section + "." + key + " is not an integer: " + *v);
        }
    }
};

inline Vec3 parse_vec3(const std::string& text, const std::string& what) {
    std::istringstream is(text);
    Vec3 v;
    if (!(is >> v.x >> v.y >> v.z))
        throw input_error("config: " + what + " needs three numbers, got: " + text);
    return v;
}

// Resolved run configuration shared by all CLI commands.
struct RunConfig {
    DissipatorModel model;
    Objective objective = Objective::Heat;
    BlochState a0{0.0, 0.0, 0.0};
    BlochState a_tau{0.0, 0.0, 0.0};
    double horizon = 1.0;
    double step = 1e-3;     // integrator dt
    double eps_max = 50.0;
    uint64_t seed = 0;
    std::string out_dir = ".";
    // optimizer block
    int opt_segments = 16;
    int opt_restarts = 200;
    int opt_iterations = 60;
    double target_tol = 1e-3;
    double lambda_bound = 10.0;

    void validate() const {
        model.validate();
        if (!(horizon >= 0.0)) throw input_error("config: horizon must be >= 0");
        if (!(step > 0.0)) throw input_error("config: step must be > 0");
        if (!(eps_max > 0.0)) throw input_error("config: eps_max must be > 0");
        if (!a0.physical() || !a_tau.physical())
            throw input_error("config: boundary Bloch vectors must have norm <= 1");
    }

    static DissipatorKind parse_kind(const std::string& s) {
        if (s == "gibbs") return DissipatorKind::GibbsMixing;
        if (s == "bosonic") return DissipatorKind::Bosonic;
        if (s == "fermionic") return DissipatorKind::Fermionic;
        throw input_error("config: unknown model kind: " + s);
    }
    static Objective parse_objective(const std::string& s) {
        if (s == "heat") return Objective::Heat;
        if (s == "time") return Objective::Time;
        throw input_error("config: unknown objective: " + s);
    }

    static RunConfig from_ini(const IniFile& ini) {
        RunConfig c;
        if (auto v = ini.get("model", "kind")) c.model.kind = parse_kind(*v);
        c.model.gamma = ini.get_double("model", "gamma", c.model.gamma);
        c.model.beta = ini.get_double("model", "beta", c.model.beta);
        if (auto v = ini.get("problem", "objective")) c.objective = parse_objective(*v);
        c.horizon = ini.get_double("problem", "horizon", c.horizon);
        if (auto v = ini.get("boundary", "a0"))
            c.a0 = BlochState::from_vec(parse_vec3(*v, "boundary.a0"));
        if (auto v = ini.get("boundary", "a_tau"))
            c.a_tau = BlochState::from_vec(parse_vec3(*v, "boundary.a_tau"));
        c.step = ini.get_double("integrator", "step", c.step);
        c.eps_max = ini.get_double("integrator", "eps_max", c.eps_max);
        c.seed = uint64_t(ini.get_int("optimizer", "seed", long(c.seed)));
        c.opt_segments = int(ini.get_int("optimizer", "segments", c.opt_segments));
        c.opt_restarts = int(ini.get_int("optimizer", "restarts", c.opt_restarts));
        c.opt_iterations = int(ini.get_int("optimizer", "iterations", c.opt_iterations));
        c.target_tol = ini.get_double("optimizer", "target_tol", c.target_tol);
        c.lambda_bound = ini.get_double("optimizer", "lambda_bound", c.lambda_bound);
        if (auto v = ini.get("output", "dir")) c.out_dir = *v;
        return c;
    }

    json to_json() const {
        return json{
            {"model",
             {{"kind", kind_name(model.kind)}, {"gamma", model.gamma}, {"beta", model.beta}}},
            {"problem", {{"objective", objective_name(objective)}, {"horizon", horizon}}},
            {"boundary",
             {{"a0", {a0.ax, a0.ay, a0.az}}, {"a_tau", {a_tau.ax, a_tau.ay, a_tau.az}}}},
            {"integrator", {{"step", step}, {"eps_max", eps_max}}},
            {"optimizer",
             {{"seed", seed},
              {"segments", opt_segments},
              {"restarts", opt_restarts},
              {"iterations", opt_iterations},
              {"target_tol", target_tol},
              {"lambda_bound", lambda_bound}}},
            {"version", kVersion}};
    }
};

// ---------------------------------------------------------------------------
// CSV formats

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline const char* kTrajectoryHeader = "t,ax,ay,az,qx,qy,qz,eps,heat_cum";

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << kTrajectoryHeader << "\n";
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        os << format_double(traj.times[k]) << ',' << format_double(traj.a[k].ax) << ','
           << format_double(traj.a[k].ay) << ',' << format_double(traj.a[k].az) << ',';
        if (traj.has_costate())
            os << format_double(traj.q[k].qx) << ',' << format_double(traj.q[k].qy) << ','
               << format_double(traj.q[k].qz);
        else
            os << ",,";
        os << ',' << format_double(traj.eps[k]) << ',' << format_double(traj.heat[k]) << "\n";
    }
}

inline Trajectory read_trajectory_csv(std::istream& is, const std::string& origin = "<csv>") {
    Trajectory traj;
    std::string line;
    if (!std::getline(is, line))
        throw input_error(origin + ": empty trajectory file");
    if (IniFile::trim(line) != kTrajectoryHeader)
        throw input_error(origin + ":1: expected header '" + kTrajectoryHeader + "'");
    int lineno = 1;
    bool costate_missing = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (IniFile::trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        while (cells.size() < 9) cells.push_back("");
        auto num = [&](int i) {
            try {
                return std::stod(cells[i]);
            } catch (...) {
                throw input_error(origin + ":" + std::to_string(lineno) +
                                  ": bad number in column " + std::to_string(i + 1));
            }
        };
        traj.times.push_back(num(0));
        traj.a.push_back({num(1), num(2), num(3)});
        if (IniFile::trim(cells[4]).empty())
            costate_missing = true;
        else
            traj.q.push_back({num(4), num(5), num(6)});
        traj.eps.push_back(num(7));
        traj.heat.push_back(num(8));
    }
    if (traj.times.empty()) throw input_error(origin + ": no samples");
    if (costate_missing) traj.q.clear();
    traj.lambda.assign(traj.times.size(), LambdaCoefficients{});
    return traj;
}

// Schedule CSV: header t,eps,l0,l1,l2,l3; optional lines
// "quench,<time>,<ax>,<ay>,<az>,<angle>". Infinite eps entries are clamped to
// +/- eps_max.
inline const char* kScheduleHeader = "t,eps,l0,l1,l2,l3";

inline ControlSchedule read_schedule_csv(std::istream& is, double eps_max,
                                         const std::string& origin = "<schedule>") {
    std::string line;
    if (!std::getline(is, line)) throw input_error(origin + ": empty schedule file");
    if (IniFile::trim(line) != kScheduleHeader)
        throw input_error(origin + ":1: expected header '" + std::string(kScheduleHeader) + "'");
    ControlSchedule sched;
    std::vector<double> times;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        std::string trimmed = IniFile::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(trimmed);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        auto num = [&](std::size_t i) {
            if (i >= cells.size())
                throw input_error(origin + ":" + std::to_string(lineno) + ": missing column " +
                                  std::to_string(i + 1));
            std::string t = IniFile::trim(cells[i]);
            if (t == "inf" || t == "+inf") return HUGE_VAL;
            if (t == "-inf") return -HUGE_VAL;
            try {
                return std::stod(t);
            } catch (...) {
                throw input_error(origin + ":" + std::to_string(lineno) + ": bad number '" + t +
                                  "'");
            }
        };
        if (IniFile::trim(cells[0]) == "quench") {
            Quench q;
            q.time = num(1);
            q.axis = {num(2), num(3), num(4)};
            double n = q.axis.norm();
            if (n < 1e-12)
                throw input_error(origin + ":" + std::to_string(lineno) + ": zero quench axis");
            q.axis = q.axis * (1.0 / n);
            q.angle = num(5);
            sched.quenches.push_back(q);
            continue;
        }
        times.push_back(num(0));
        double e = num(1);
        if (std::isinf(e)) e = e > 0 ? eps_max : -eps_max;
        sched.eps.push_back(e);
        sched.lambda.push_back({num(2), num(3), num(4), num(5)});
    }
    if (times.size() < 2) throw input_error(origin + ": need at least two schedule samples");
    sched.t0 = times.front();
    sched.t1 = times.back();
    sched.n_steps = int(times.size()) - 1;
    double h = (sched.t1 - sched.t0) / sched.n_steps;
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - (sched.t0 + double(k) * h)) > 1e-9 * std::max(1.0, std::abs(h)))
            throw input_error(origin + ": schedule grid must be uniform (sample " +
                              std::to_string(k) + ")");
    sched.validate();
    return sched;
}

// ---------------------------------------------------------------------------
// JSON reports

inline json report_line_json(const ConditionResidual& c) {
    return json{{"eq", c.name}, {"raw", c.raw}, {"relative", c.relative}, {"pass", c.pass}};
}

inline void write_report_jsonl(std::ostream& os, const PmpReport& rep) {
    for (const auto& c : rep.conditions) os << report_line_json(c).dump() << "\n";
    os << json{{"eq", "pseudo_hamiltonian"},
               {"K", rep.K},
               {"objective", objective_name(rep.objective)},
               {"model", kind_name(rep.model.kind)},
               {"pass", rep.all_pass()}}
              .dump()
       << "\n";
}

inline json protocol_to_json(const Protocol& proto) {
    json segments = json::array();
    for (const auto& seg : proto.segments) {
        if (std::holds_alternative<QuenchSegment>(seg)) {
            const auto& q = std::get<QuenchSegment>(seg);
            segments.push_back({{"type", "quench"},
                                {"axis", {q.axis.x, q.axis.y, q.axis.z}},
                                {"angle", q.angle}});
        } else {
            const auto& e = std::get<OpenEvolutionSegment>(seg);
            segments.push_back({{"type", "open_evolution"},
                                {"duration", e.duration},
                                {"K", e.K},
                                {"sign", e.sign},
                                {"times", e.times},
                                {"eps", e.eps},
                                {"lambda", "zero"}});
        }
    }
    json j{{"objective", objective_name(proto.objective)},
           {"model", kind_name(proto.model.kind)},
           {"gamma", proto.model.gamma},
           {"beta", proto.model.beta},
           {"segments", segments},
           {"boundary",
            {{"rho0", {proto.rho0.ax, proto.rho0.ay, proto.rho0.az}},
             {"rho_tau", {proto.rho_tau.ax, proto.rho_tau.ay, proto.rho_tau.az}}}},
           {"predicted_cost", proto.predicted_cost},
           {"zero_time_branch", proto.zero_time_branch},
           {"nonmarkov_caveat", proto.nonmarkov_caveat}};
    if (!proto.note.empty()) j["note"] = proto.note;
    return j;
}

inline void write_reachability_csv(std::ostream& os, const std::vector<ReachabilityRow>& rows) {
    os << "target_az,min_time,reachable,feasible\n";
    for (const auto& r : rows)
        os << format_double(r.target_az) << ',' << format_double(r.min_time) << ','
           << (r.reachable ? 1 : 0) << ',' << (r.feasible ? 1 : 0) << "\n";
}

}  // namespace qoctl
