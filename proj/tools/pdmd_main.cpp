// Command line front end: dataset generation, rank sweeps, piecewise DMD
// convergence runs and report aggregation. Every command is deterministic
// given its flags and seed; the run manifest (written last) is the only file
// with a volatile field (wall-clock duration).

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pdmd/dmd.hpp"
#include "pdmd/piecewise.hpp"
#include "pdmd/qb.hpp"
#include "pdmd/rdpde.hpp"
#include "pdmd/rng.hpp"
#include "pdmd/snapshots.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Exit codes, stable across releases:
//   0 success, 2 usage, 3 I/O or file format, 4 numerical failure,
//   5 non-convergence (partition floor reached before tol).
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitNoConvergence = 5;

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class ManifestWriter {
public:
    ManifestWriter(std::string command, fs::path out_dir)
        : command_(std::move(command)), out_dir_(std::move(out_dir)),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(out_dir_);
    }

    void set_config(json cfg) { config_ = std::move(cfg); }
    void add_output(const fs::path& p) { outputs_.push_back(p.filename().string()); }

    fs::path path_for(const std::string& filename) const { return out_dir_ / filename; }
    const fs::path& dir() const { return out_dir_; }

    // Written last so a manifest implies the listed outputs exist.
    void finalize() {
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        json m;
        m["command"] = command_;
        m["tool_version"] = kToolVersion;
        m["config"] = config_;
        m["duration_seconds"] =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
        m["outputs"] = outputs_;
        std::ofstream out(out_dir_ / "manifest.json", std::ios::trunc);
        if (!out) {
            throw pdmd::IoError("cannot write manifest in " + out_dir_.string());
        }
        out << m.dump(2) << "\n";
    }

private:
    std::string command_;
    fs::path out_dir_;
    std::chrono::steady_clock::time_point start_;
    json config_;
    std::vector<std::string> outputs_;
};

std::ofstream open_csv(const fs::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) {
        throw pdmd::IoError("cannot open " + p.string());
    }
    return out;
}

json kinetics_json(const pdmd::Kinetics& k) {
    json j;
    std::visit(
        [&](const auto& kk) {
            using T = std::decay_t<decltype(kk)>;
            if constexpr (std::is_same_v<T, pdmd::FhnKinetics>) {
                j = {{"type", "fhn"}, {"d_u", kk.d_u}, {"b", kk.b}, {"gamma", kk.gamma},
                     {"c", kk.c}};
            } else if constexpr (std::is_same_v<T, pdmd::LambdaOmegaKinetics>) {
                j = {{"type", "lambda_omega"}, {"rho", kk.rho}, {"beta", kk.beta}};
            } else {
                j = {{"type", "dib"}, {"a1", kk.a1}, {"a2", kk.a2}, {"alpha", kk.alpha},
                     {"b", kk.b},     {"c", kk.c},   {"gamma", kk.gamma}, {"k2", kk.k2},
                     {"k3", kk.k3},   {"rho", kk.rho}, {"d", kk.d}};
            }
        },
        k);
    return j;
}

json problem_json(const pdmd::RdpdeProblem& p, std::uint64_t seed) {
    json j;
    j["problem"] = p.name;
    j["kinetics"] = kinetics_json(p.kinetics);
    j["dim"] = p.dim;
    j["domain"] = {{"lx", p.lx}, {"ly", p.ly}};
    j["grid"] = {{"nx", p.nx}, {"ny", p.ny}};
    j["diffusion"] = {{"d_u", p.d_u}, {"d_v", p.d_v}};
    j["bc"] = (p.bc == pdmd::BoundaryKind::fhn_left_flux) ? "fhn_left_flux" : "neumann_zero";
    j["h_t"] = p.h_t;
    j["t_final"] = p.t_final;
    j["kappa"] = p.kappa;
    j["seed"] = seed;
    return j;
}

void write_means_csv(const fs::path& p, const Eigen::VectorXd& mean_u,
                     const Eigen::VectorXd& mean_v, const pdmd::TimeGrid& grid) {
    auto out = open_csv(p);
    out << "k,t,mean_u,mean_v\n";
    for (Eigen::Index k = 0; k < mean_u.size(); ++k) {
        out << k << "," << g17(grid.time_at(static_cast<std::size_t>(k))) << ","
            << g17(mean_u(k)) << "," << g17(mean_v(k)) << "\n";
    }
}

// Options shared by the data-processing subcommands.
struct CommonOpts {
    std::uint64_t seed = 0;
    std::string out = ".";
    int threads = 0;
    double sv_floor = 0.0;
    int oversample = 10;
    int power_iters = 2;
};

void add_common(CLI::App* cmd, CommonOpts& o, double sv_floor_default) {
    o.sv_floor = sv_floor_default;
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--threads", o.threads, "linear algebra threads (0 = library default)");
    cmd->add_option("--sv-floor", o.sv_floor,
                    "relative singular value floor inside DMD fits")
        ->capture_default_str();
    cmd->add_option("--oversample", o.oversample, "QB oversampling columns")
        ->capture_default_str();
    cmd->add_option("--power-iters", o.power_iters, "QB power iterations")
        ->capture_default_str();
}

void apply_threads(const CommonOpts& o) {
    if (o.threads > 0) {
        Eigen::setNbThreads(o.threads);
    }
}

json common_json(const CommonOpts& o) {
    return {{"seed", o.seed},           {"out", o.out},
            {"threads", o.threads},     {"sv_floor", o.sv_floor},
            {"oversample", o.oversample}, {"power_iters", o.power_iters}};
}

// PDMD_CONFIG may name a JSON file of defaults for the common flags;
// explicit command line values win.
void apply_env_config(CLI::App* cmd, CommonOpts& o) {
    const char* path = std::getenv("PDMD_CONFIG");
    if (path == nullptr) {
        return;
    }
    std::ifstream in(path);
    if (!in) {
        throw pdmd::IoError(std::string("PDMD_CONFIG: cannot open ") + path);
    }
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw pdmd::FormatError(std::string("PDMD_CONFIG: bad JSON: ") + e.what());
    }
    auto maybe = [&](const char* flag, auto& value) {
        const std::string key = flag + 2; // strip leading --
        if (cfg.contains(key) && cmd->count(flag) == 0) {
            value = cfg.at(key).get<std::decay_t<decltype(value)>>();
        }
    };
    maybe("--seed", o.seed);
    maybe("--out", o.out);
    maybe("--threads", o.threads);
    maybe("--sv-floor", o.sv_floor);
    maybe("--oversample", o.oversample);
    maybe("--power-iters", o.power_iters);
}

// -- generate -----------------------------------------------------------------

int cmd_generate(const std::string& preset_name, const std::string& scale_name,
                 const CommonOpts& opts) {
    apply_threads(opts);
    const pdmd::PresetName name = pdmd::parse_preset_name(preset_name);
    const pdmd::PresetScale scale = pdmd::parse_preset_scale(scale_name);
    const pdmd::RdpdeProblem problem = pdmd::preset(name, scale, opts.seed);

    ManifestWriter manifest("generate", opts.out);
    json cfg = common_json(opts);
    cfg["preset"] = preset_name;
    cfg["scale"] = scale_name;
    manifest.set_config(cfg);

    const pdmd::SnapshotMatrix data = pdmd::simulate(problem);

    const std::string stem = problem.name;
    const fs::path data_path = manifest.path_for(stem + ".pdmd1");
    data.save(data_path);
    manifest.add_output(data_path);

    const fs::path side_path = manifest.path_for(stem + ".json");
    {
        std::ofstream side(side_path, std::ios::trunc);
        if (!side) {
            throw pdmd::IoError("cannot write " + side_path.string());
        }
        json j = problem_json(problem, opts.seed);
        j["shape"] = {{"rows", data.rows()}, {"cols", data.cols()}};
        side << j.dump(2) << "\n";
    }
    manifest.add_output(side_path);
    manifest.finalize();

    std::cout << "wrote " << data_path.string() << " (" << data.rows() << " x " << data.cols()
              << ")\n";
    return 0;
}

// -- rank sweep ---------------------------------------------------------------

int cmd_rank_sweep(const std::string& data_file, int r_min, int r_max, bool with_means,
                   const CommonOpts& opts) {
    apply_threads(opts);
    const pdmd::SnapshotMatrix data = pdmd::SnapshotMatrix::load(data_file);
    const auto max_rank = std::min(data.rows(), data.cols() - 1);
    if (r_min < 1 || r_max < r_min || static_cast<std::size_t>(r_max) > max_rank) {
        std::cerr << "rank-sweep: rank range [" << r_min << ", " << r_max
                  << "] outside [1, " << max_rank << "]\n";
        return kExitUsage;
    }

    ManifestWriter manifest("rank-sweep", opts.out);
    json cfg = common_json(opts);
    cfg["data"] = data_file;
    cfg["r_min"] = r_min;
    cfg["r_max"] = r_max;
    cfg["means"] = with_means;
    manifest.set_config(cfg);

    const pdmd::ColumnWindow whole{0, data.cols()};
    if (with_means) {
        const fs::path p = manifest.path_for("means_data.csv");
        write_means_csv(p, pdmd::spatial_mean_series(data, pdmd::Field::u),
                        pdmd::spatial_mean_series(data, pdmd::Field::v), data.grid());
        manifest.add_output(p);
    }

    const fs::path sweep_path = manifest.path_for("sweep.csv");
    auto sweep = open_csv(sweep_path);
    sweep << "r,E,status\n";
    for (int r = r_min; r <= r_max; ++r) {
        pdmd::QbConfig qb;
        qb.oversample = opts.oversample;
        qb.power_iters = opts.power_iters;
        qb.seed = pdmd::derive_seed(opts.seed, 0, static_cast<std::uint64_t>(r));
        std::string status = "ok";
        try {
            const pdmd::DmdModel model =
                pdmd::randomized_dmd(data, whole, r, qb, opts.sv_floor);
            const pdmd::Reconstruction rec = pdmd::reconstruct(model, 0, data.cols());
            const double e = pdmd::frob_error(data.data(), rec.values);
            sweep << r << "," << g17(e) << ",ok\n";
            if (with_means) {
                char name[32];
                std::snprintf(name, sizeof(name), "means_r%04d.csv", r);
                const fs::path p = manifest.path_for(name);
                write_means_csv(p,
                                pdmd::spatial_mean_series(rec.values, data.block(),
                                                          pdmd::Field::u),
                                pdmd::spatial_mean_series(rec.values, data.block(),
                                                          pdmd::Field::v),
                                data.grid());
                manifest.add_output(p);
            }
            continue;
        } catch (const pdmd::OverflowError&) {
            status = "overflow";
        } catch (const pdmd::SpectralError&) {
            status = "spectral_error";
        } catch (const pdmd::DegenerateInputError&) {
            status = "degenerate";
        }
        // Blow-ups are data points of the sweep, not failures of the sweep.
        sweep << r << ",," << status << "\n";
    }
    sweep.close();
    manifest.add_output(sweep_path);
    manifest.finalize();
    std::cout << "wrote " << sweep_path.string() << "\n";
    return 0;
}

// -- pdmd ---------------------------------------------------------------------

int cmd_pdmd(const std::string& data_file, const pdmd::PdmdConfig& config, bool save_recon,
             const CommonOpts& opts) {
    apply_threads(opts);
    const pdmd::SnapshotMatrix data = pdmd::SnapshotMatrix::load(data_file);

    ManifestWriter manifest("pdmd", opts.out);
    json cfg = common_json(opts);
    cfg["data"] = data_file;
    cfg["tol_bar"] = config.tol_bar;
    cfg["tol"] = config.tol;
    cfg["n_init"] = config.n_init;
    cfg["dn"] = config.dn;
    cfg["nu_star"] = config.nu_star;
    cfg["rank_cap"] = config.rank_cap;
    cfg["exact_rank"] = (config.rank_rule == pdmd::PdmdConfig::RankRule::exact_rank);
    cfg["save_recon"] = save_recon;
    manifest.set_config(cfg);

    Eigen::MatrixXd recon;
    const pdmd::PdmdOutcome outcome = pdmd::pdmd_converge(data, config, &recon);

    const fs::path trace_path = manifest.path_for("trace.csv");
    {
        auto trace = open_csv(trace_path);
        trace << "N,status,ep,max_rank,failed_subset\n";
        for (const pdmd::TraceRow& row : outcome.trace) {
            trace << row.n_parts << "," << pdmd::to_string(row.status) << ",";
            if (std::isfinite(row.ep)) {
                trace << g17(row.ep);
            }
            trace << "," << row.max_rank << ",";
            if (row.failed_subset != pdmd::no_subset) {
                trace << row.failed_subset;
            }
            trace << "\n";
        }
    }
    manifest.add_output(trace_path);

    const pdmd::PdmdResult& result = outcome.result;
    const bool have_fit = !result.models.empty() && std::isfinite(result.ep);

    json rj;
    rj["status"] = pdmd::to_string(result.status);
    rj["converged"] = outcome.converged;
    rj["n_parts"] = result.n_parts;
    if (have_fit) {
        rj["ep"] = result.ep;
        rj["max_rank"] = pdmd::max_rank(result);
        rj["ranks"] = result.ranks;
        rj["err_inf"] = result.err_inf;
    }
    const fs::path result_path = manifest.path_for("result.json");
    {
        std::ofstream out(result_path, std::ios::trunc);
        out << rj.dump(2) << "\n";
    }
    manifest.add_output(result_path);

    if (have_fit) {
        const fs::path subsets_path = manifest.path_for("subsets.csv");
        {
            auto out = open_csv(subsets_path);
            out << "i,rank,err_inf\n";
            for (std::size_t i = 0; i < result.ranks.size(); ++i) {
                out << i << "," << result.ranks[i] << "," << g17(result.err_inf[i]) << "\n";
            }
        }
        manifest.add_output(subsets_path);

        const fs::path te_path = manifest.path_for("time_error.csv");
        {
            auto out = open_csv(te_path);
            out << "k,t,eps\n";
            for (Eigen::Index k = 0; k < result.eps_time.size(); ++k) {
                out << k << "," << g17(data.grid().time_at(static_cast<std::size_t>(k))) << ","
                    << g17(result.eps_time(k)) << "\n";
            }
        }
        manifest.add_output(te_path);

        // Spatial means of data and reconstruction; the (mean_u, mean_v)
        // column pairs are the phase plane series.
        const fs::path means_path = manifest.path_for("means.csv");
        {
            const auto du = pdmd::spatial_mean_series(data, pdmd::Field::u);
            const auto dv = pdmd::spatial_mean_series(data, pdmd::Field::v);
            const auto ru = pdmd::spatial_mean_series(recon, data.block(), pdmd::Field::u);
            const auto rv = pdmd::spatial_mean_series(recon, data.block(), pdmd::Field::v);
            auto out = open_csv(means_path);
            out << "k,t,mean_u_data,mean_v_data,mean_u_recon,mean_v_recon\n";
            for (Eigen::Index k = 0; k < du.size(); ++k) {
                out << k << "," << g17(data.grid().time_at(static_cast<std::size_t>(k))) << ","
                    << g17(du(k)) << "," << g17(dv(k)) << "," << g17(ru(k)) << ","
                    << g17(rv(k)) << "\n";
            }
        }
        manifest.add_output(means_path);

        if (save_recon) {
            const fs::path rec_path = manifest.path_for("reconstruction.pdmd1");
            pdmd::write_pdmd1(rec_path, recon, data.layout(),
                              static_cast<std::uint64_t>(data.block()), data.grid().t0,
                              data.grid().dt_snap);
            manifest.add_output(rec_path);
        }
    }
    manifest.finalize();

    if (outcome.converged) {
        std::cout << "converged at N=" << result.n_parts << " with ep=" << g17(result.ep)
                  << ", max rank " << pdmd::max_rank(result) << "\n";
        return 0;
    }
    std::cout << "did not reach tol before the partition floor";
    if (have_fit) {
        std::cout << "; best ep=" << g17(result.ep) << " at N=" << result.n_parts;
    }
    std::cout << "\n";
    return kExitNoConvergence;
}

// -- report -------------------------------------------------------------------

int cmd_report(const std::string& dir) {
    std::vector<fs::path> manifests;
    if (!fs::is_directory(dir)) {
        std::cerr << "report: " << dir << " is not a directory\n";
        return kExitIo;
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "manifest.json") {
            manifests.push_back(entry.path());
        }
    }
    std::sort(manifests.begin(), manifests.end());
    if (manifests.empty()) {
        std::cerr << "report: no manifest.json under " << dir << "\n";
        return kExitIo;
    }

    json summary;
    summary["tool_version"] = kToolVersion;
    summary["runs"] = json::array();
    for (const fs::path& mpath : manifests) {
        json m;
        std::ifstream in(mpath);
        in >> m;
        json entry;
        entry["dir"] = mpath.parent_path().string();
        entry["command"] = m.value("command", "");
        entry["duration_seconds"] = m.value("duration_seconds", 0.0);

        const fs::path base = mpath.parent_path();
        if (entry["command"] == "rank-sweep") {
            std::ifstream csv(base / "sweep.csv");
            std::string line;
            std::getline(csv, line); // header
            double min_e = std::numeric_limits<double>::infinity();
            int argmin_r = -1;
            int failures = 0;
            while (std::getline(csv, line)) {
                const auto c1 = line.find(',');
                const auto c2 = line.find(',', c1 + 1);
                const std::string e_str = line.substr(c1 + 1, c2 - c1 - 1);
                if (e_str.empty()) {
                    ++failures;
                    continue;
                }
                const double e = std::stod(e_str);
                if (e < min_e) {
                    min_e = e;
                    argmin_r = std::stoi(line.substr(0, c1));
                }
            }
            entry["min_E"] = min_e;
            entry["argmin_r"] = argmin_r;
            entry["failed_ranks"] = failures;
            summary["min_E"] = min_e;
            summary["argmin_r"] = argmin_r;
        } else if (entry["command"] == "pdmd") {
            std::ifstream rin(base / "result.json");
            if (rin) {
                json r;
                rin >> r;
                entry["status"] = r.value("status", "");
                if (r.contains("ep")) entry["ep"] = r["ep"];
                if (r.contains("max_rank")) entry["max_rank"] = r["max_rank"];
                if (r.value("converged", false)) {
                    entry["converged_N"] = r["n_parts"];
                    summary["converged_N"] = r["n_parts"];
                    summary["ep"] = r["ep"];
                    summary["max_rank"] = r["max_rank"];
                }
            }
        } else if (entry["command"] == "generate") {
            entry["outputs"] = m.value("outputs", json::array());
        }
        summary["runs"].push_back(entry);
    }

    const fs::path out_path = fs::path(dir) / "summary.json";
    {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) {
            throw pdmd::IoError("cannot write " + out_path.string());
        }
        out << summary.dump(2) << "\n";
    }
    std::cout << summary.dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"piecewise DMD toolkit: reaction-diffusion dataset generation, "
                 "randomized DMD rank sweeps, piecewise refinement runs"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "simulate a preset and write a PDMD1 dataset");
    std::string gen_preset, gen_scale = "paper";
    CommonOpts gen_opts;
    gen->add_option("--preset", gen_preset,
                    "fhn | lambda_omega | dib_turing | dib_turing_hopf")
        ->required();
    gen->add_option("--scale", gen_scale, "paper | desk")->capture_default_str();
    add_common(gen, gen_opts, 0.0);

    // rank-sweep
    auto* sweep = app.add_subcommand("rank-sweep", "randomized DMD error over a rank range");
    std::string sweep_data;
    int r_min = 1, r_max = 1;
    bool with_means = false;
    CommonOpts sweep_opts;
    sweep->add_option("--data", sweep_data, "PDMD1 dataset")->required();
    sweep->add_option("--r-min", r_min, "first rank")->capture_default_str();
    sweep->add_option("--r-max", r_max, "last rank")->required();
    sweep->add_flag("--means", with_means, "also write per-rank spatial mean series");
    add_common(sweep, sweep_opts, 0.0);

    // pdmd
    auto* pw = app.add_subcommand("pdmd", "piecewise DMD refinement until tol");
    std::string pw_data;
    pdmd::PdmdConfig pw_cfg;
    bool save_recon = false;
    CommonOpts pw_opts;
    pw->add_option("--data", pw_data, "PDMD1 dataset")->required();
    pw->add_option("--tol-bar", pw_cfg.tol_bar, "per-subset worst-column gate")
        ->capture_default_str();
    pw->add_option("--tol", pw_cfg.tol, "global Frobenius stopping tolerance")
        ->capture_default_str();
    pw->add_option("--n-init", pw_cfg.n_init, "initial partition size")->capture_default_str();
    pw->add_option("--dn", pw_cfg.dn, "partition increment")->capture_default_str();
    pw->add_option("--nu-star", pw_cfg.nu_star, "minimum subset width")->capture_default_str();
    pw->add_option("--rank-cap", pw_cfg.rank_cap, "per-subset target rank cap")
        ->capture_default_str();
    bool exact_rank = false;
    pw->add_flag("--exact-rank", exact_rank,
                 "target the measured numerical rank of each subset");
    pw->add_flag("--save-recon", save_recon, "write the assembled reconstruction");
    add_common(pw, pw_opts, pdmd::PdmdConfig{}.sv_floor);

    // report
    auto* rep = app.add_subcommand("report", "aggregate run manifests into summary.json");
    std::string rep_dir;
    rep->add_option("--dir", rep_dir, "directory containing run outputs")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            apply_env_config(gen, gen_opts);
            return cmd_generate(gen_preset, gen_scale, gen_opts);
        }
        if (sweep->parsed()) {
            apply_env_config(sweep, sweep_opts);
            return cmd_rank_sweep(sweep_data, r_min, r_max, with_means, sweep_opts);
        }
        if (pw->parsed()) {
            apply_env_config(pw, pw_opts);
            pw_cfg.qb.oversample = pw_opts.oversample;
            pw_cfg.qb.power_iters = pw_opts.power_iters;
            pw_cfg.qb.seed = pw_opts.seed;
            pw_cfg.sv_floor = pw_opts.sv_floor;
            pw_cfg.rank_rule = exact_rank ? pdmd::PdmdConfig::RankRule::exact_rank
                                          : pdmd::PdmdConfig::RankRule::capped_width;
            return cmd_pdmd(pw_data, pw_cfg, save_recon, pw_opts);
        }
        if (rep->parsed()) {
            return cmd_report(rep_dir);
        }
    } catch (const pdmd::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const pdmd::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const pdmd::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const pdmd::BlowUpError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const pdmd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
