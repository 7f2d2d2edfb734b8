#include "mesh/cli.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mesh/commands.hpp"
#include "mesh/error.hpp"
#include "mesh/parallel.hpp"

#ifndef MESH_VERSION
#define MESH_VERSION "0.0.0"
#endif

namespace mesh::cli {
namespace {

using nlohmann::json;
using Command = int (*)(CommandContext&);

const std::map<std::string, std::pair<Command, const char*>>& commands() {
    static const std::map<std::string, std::pair<Command, const char*>> table{
        {"summarize", {cmd_summarize, "Outcome counts and percentages"}},
        {"fit", {cmd_fit, "Penalized MLE or MCMC fit on a train/test split"}},
        {"compare", {cmd_compare, "Score-only, teams and players models on one split"}},
        {"mvp", {cmd_mvp, "Per-team MVP/LVP penalty cascade"}},
        {"pairs", {cmd_pairs, "Player-pair selection along the pair penalty path"}},
        {"gnet", {cmd_gnet, "Goals scored/stopped contributions from a coefficient file"}},
        {"simulate", {cmd_simulate, "Synthetic league with known truth"}},
        {"validate", {cmd_validate, "Posterior-quantile calibration and invariant checks"}},
    };
    return table;
}

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 0;
    std::vector<std::string> assignments;
    std::string events, roster, coefficients, counts;
    std::string manifest;
    bool verify = false;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "INI configuration file");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Run directory");
    sub->add_option("--threads", o.threads, "Worker threads (results do not depend on it)");
    sub->add_option("--set", o.assignments, "Override a setting: section.key=value")->take_all();
}

json error_json(const char* kind, const std::string& message, int code) {
    return {{"error", kind}, {"message", message}, {"exit_code", code}};
}

json digests(const std::vector<std::filesystem::path>& files, const std::filesystem::path* base) {
    json j = json::object();
    for (const auto& f : files) {
        const std::string key = base ? std::filesystem::relative(f, *base).generic_string()
                                     : std::filesystem::absolute(f).generic_string();
        j[key] = sha256_file(f);
    }
    return j;
}

int execute(const std::string& name, RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& out_dir,
            unsigned threads, std::ostream& out, const json* expected) {
    const auto it = commands().find(name);
    if (it == commands().end()) throw UsageError("unknown command '" + name + "'");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw UsageError("output directory not writable: " + out_dir.string());
    set_thread_count(threads);

    CommandContext ctx{cfg, out_dir, seed, out, {}, {}};
    if (expected) {
        // Inputs must be unchanged for a rerun to mean anything.
        for (const auto& [path, digest] : (*expected)["inputs"].items()) {
            if (!std::filesystem::exists(path)) throw DataError("manifest input missing: " + path);
            if (sha256_file(path) != digest.get<std::string>())
                throw DataError("manifest input changed since the recorded run: " + path);
        }
    }
    const int code = it->second.first(ctx);

    json m{{"command", name},
           {"version", MESH_VERSION},
           {"seed", seed},
           {"threads", thread_count()},
           {"exit_code", code},
           {"config", cfg.resolved()},
           {"inputs", digests(ctx.inputs, nullptr)},
           {"outputs", digests(ctx.outputs, &out_dir)}};
    std::ofstream(out_dir / "manifest.json") << m.dump(2) << '\n';

    if (expected) {
        std::vector<std::string> differ;
        const auto& want = (*expected)["outputs"];
        for (const auto& [path, digest] : want.items())
            if (!m["outputs"].contains(path) || m["outputs"][path] != digest) differ.push_back(path);
        if (!differ.empty()) {
            std::string list;
            for (const auto& d : differ) list += (list.empty() ? "" : ", ") + d;
            throw NumericalError("rerun outputs differ from the manifest: " + list);
        }
        out << "rerun reproduced " << want.size() << " outputs\n";
    }
    return code;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Competing-hazards ratings for full-strength hockey play"};
    app.set_version_flag("--version", MESH_VERSION);
    app.require_subcommand(1);
    Options o;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : commands()) {
        auto* sub = app.add_subcommand(name, entry.second);
        add_common(sub, o);
        subs[name] = sub;
    }
    subs["summarize"]->add_option("--events", o.events, "Events CSV");
    subs["summarize"]->add_option("--roster", o.roster, "Roster CSV");
    subs["summarize"]->add_option("--counts", o.counts, "Published totals: away,none,home");
    for (const char* n : {"fit", "compare", "mvp", "pairs"}) {
        subs[n]->add_option("--events", o.events, "Events CSV");
        subs[n]->add_option("--roster", o.roster, "Roster CSV");
    }
    subs["gnet"]->add_option("--coefficients", o.coefficients, "CSV: player,position,time_s,omega,delta");
    auto* rerun = app.add_subcommand("rerun", "Repeat a recorded run from its manifest");
    rerun->add_option("--manifest", o.manifest, "manifest.json of the earlier run")->required();
    rerun->add_option("--out", o.out, "Run directory")->required();
    rerun->add_option("--threads", o.threads, "Worker threads");
    rerun->add_flag("--verify", o.verify, "Fail unless every output matches the manifest digest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        err << error_json("usage", msg, 1).dump() << '\n';
        return 1;
    }

    try {
        const unsigned threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
        if (rerun->parsed()) {
            std::ifstream in(o.manifest);
            if (!in) throw DataError("cannot open manifest " + o.manifest);
            json m;
            try {
                m = json::parse(in);
            } catch (const json::exception& e) {
                throw DataError(std::string("malformed manifest: ") + e.what());
            }
            RunConfig cfg;
            for (const auto& [k, v] : m.at("config").items()) cfg.set(k, v.get<std::string>());
            return execute(m.at("command").get<std::string>(), cfg, m.at("seed").get<std::uint64_t>(), o.out,
                           threads, out, o.verify ? &m : nullptr);
        }
        std::string name;
        for (const auto& [n, sub] : subs)
            if (sub->parsed()) name = n;
        RunConfig cfg = o.config.empty() ? RunConfig{} : RunConfig::from_ini(o.config);
        for (const auto& a : o.assignments) cfg.set_assignment(a);
        if (!o.events.empty()) cfg.set("data.events", o.events);
        if (!o.roster.empty()) cfg.set("data.roster", o.roster);
        if (!o.coefficients.empty()) cfg.set("gnet.coefficients", o.coefficients);
        if (!o.counts.empty()) cfg.set("summarize.counts", o.counts);
        const std::uint64_t seed = o.seed ? *o.seed : cfg.u64("run.seed", 1);
        const std::string out_dir = o.out.empty() ? cfg.str("run.out", "mesh-run") : o.out;
        return execute(name, cfg, seed, out_dir, threads, out, nullptr);
    } catch (const UsageError& e) {
        err << error_json("usage", e.what(), 1).dump() << '\n';
        return 1;
    } catch (const DataError& e) {
        err << error_json("data", e.what(), 2).dump() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        err << error_json("numerical", e.what(), 3).dump() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        err << error_json("usage", e.what(), 1).dump() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << error_json("data", e.what(), 2).dump() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << error_json("numerical", e.what(), 3).dump() << '\n';
        return 3;
    }
}

}  // namespace mesh::cli
