#include "graspvae/cli.hpp"

#include "graspvae/dataset.hpp"
#include "graspvae/errors.hpp"
#include "graspvae/explorer.hpp"
#include "graspvae/hgg.hpp"
#include "graspvae/kpca.hpp"
#include "graspvae/metrics.hpp"
#include "graspvae/sweep.hpp"
#include "graspvae/task.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace graspvae::cli {
namespace {

namespace fs = std::filesystem;

class PathError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "path"; }
};

enum class LogLevel { quiet, info, debug };

LogLevel log_level() {
    const char* env = std::getenv("GRASPVAE_LOG");
    if (!env) return LogLevel::info;
    const std::string v(env);
    if (v == "quiet" || v == "off" || v == "0") return LogLevel::quiet;
    if (v == "debug" || v == "2") return LogLevel::debug;
    return LogLevel::info;
}

struct Log {
    std::ostream& sink;
    LogLevel level = log_level();
    void info(const std::string& msg) const {
        if (level != LogLevel::quiet) sink << msg << '\n';
    }
    void debug(const std::string& msg) const {
        if (level == LogLevel::debug) sink << msg << '\n';
    }
};

void require_input(const char* flag, const std::string& path) {
    if (path.empty()) throw UsageError(std::string("missing required option ") + flag);
    if (!fs::is_regular_file(path)) throw PathError(std::string(flag) + ": no such file '" + path + "'");
}

void require_output(const char* flag, const std::string& path, bool required = true) {
    if (path.empty()) {
        if (required) throw UsageError(std::string("missing required option ") + flag);
        return;
    }
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent))
        throw PathError(std::string(flag) + ": directory '" + parent.string() + "' does not exist");
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PathError("cannot write '" + path + "'");
    return out;
}

std::vector<std::string> config_values(const nlohmann::json& v) {
    auto scalar = [](const nlohmann::json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    std::vector<std::string> out;
    if (v.is_array())
        for (const auto& x : v) out.push_back(scalar(x));
    else
        out.push_back(scalar(v));
    return out;
}

/// Fills options not given on the command line from a JSON object. Keys are
/// long flag names without dashes; a nested object under the subcommand name
/// overrides top-level keys.
void apply_config(CLI::App& sub, const std::string& path) {
    if (path.empty()) return;
    require_input("--config", path);
    std::ifstream in(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("invalid config JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("config file must hold a JSON object");
    nlohmann::json merged = nlohmann::json::object();
    for (const auto& [k, v] : j.items())
        if (!v.is_object()) merged[k] = v;
    if (j.contains(sub.get_name()) && j.at(sub.get_name()).is_object())
        for (const auto& [k, v] : j.at(sub.get_name()).items()) merged[k] = v;

    for (CLI::Option* opt : sub.get_options()) {
        if (opt->count() > 0) continue;
        for (const auto& name : opt->get_lnames()) {
            if (name == "config" || !merged.contains(name)) continue;
            for (const auto& s : config_values(merged.at(name))) opt->add_result(s);
            opt->run_callback();
            break;
        }
    }
}

TabletopPlane plane_or_default(const std::vector<double>& coeffs, const SyntheticGraspTask& task) {
    if (coeffs.empty()) return task.poses.front().plane;
    if (coeffs.size() != 4) throw UsageError("--plane takes four coefficients a,b,c,d");
    return TabletopPlane::make(coeffs[0], coeffs[1], coeffs[2], coeffs[3]);
}

SyntheticGraspTask task_or_default(const std::string& path) {
    if (path.empty()) return SyntheticGraspTask::default_task();
    require_input("--task", path);
    return load_task(path);
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

struct Options {
    std::uint64_t seed = 1;
    std::string config;
    std::string task;
    std::string data;
    std::string model;
    std::string out;
    std::string csv;
    std::string json;
    std::string loss_log;
    std::size_t per_pose = 75;
    // training
    int latent_dim = 3;
    double kl_coeff = 0.0005;
    int epochs = 2000;
    int batch_size = 16;
    double lr = 1e-3;
    std::size_t network_size = 0;
    std::vector<int> main_widths;
    // generation
    std::size_t count = 100;
    std::vector<double> plane;
    std::vector<double> diameters = {0.5, 1.0};
    int points = 8;
    std::vector<int> axes = {0, 1};
    std::vector<double> center;
    // kernel-PCA
    std::string kernel = "rbf";
    double gamma = 0.0;
    double bandwidth_scale = 3.0;
    double threshold = 0.9;
    // evaluation / sweeps
    std::size_t samples = 1000;
    std::vector<std::size_t> sizes = {12000, 30000};
    std::vector<int> latent_dims = {2, 5};
    std::vector<double> kl_coeffs = {0.0002, 0.01};
    std::vector<std::uint64_t> seeds = {1};
    int jobs = 1;
};

void cmd_gen_data(const Options& o, std::ostream& out, const Log& log) {
    require_output("--out", o.out);
    require_output("--csv", o.csv, false);
    const auto task = task_or_default(o.task);
    std::mt19937_64 rng(o.seed);
    const auto records = generate_primitive_records(task, o.per_pose, rng);
    {
        auto f = open_output(o.out);
        write_dataset(f, records);
    }
    if (!o.csv.empty()) {
        auto f = open_output(o.csv);
        write_csv(f, records);
    }
    log.info("generated " + std::to_string(records.size()) + " primitives over " +
             std::to_string(task.poses.size()) + " stable poses");
    out << records.size() << " records written to " << o.out << '\n';
}

void cmd_train(const Options& o, std::ostream& out, const Log& log) {
    require_input("--data", o.data);
    require_output("--out", o.out);
    require_output("--loss-log", o.loss_log, false);
    const GraspDataset data = load_dataset(o.data);
    HggArchitecture arch;
    if (o.network_size > 0) arch = HggArchitecture::for_size(o.latent_dim, o.network_size);
    if (!o.main_widths.empty()) arch.main_widths = o.main_widths;
    arch.latent_dim = o.latent_dim;

    TrainingConfig cfg;
    cfg.kl_coefficient = o.kl_coeff;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.learning_rate = o.lr;
    cfg.seed = o.seed;
    cfg.validate(data.size());

    HggModel model = build_hgg(arch, data.stats, o.seed);
    log.info("training " + std::to_string(model.parameter_count()) + " parameters on " +
             std::to_string(data.size()) + " records");
    const int every = std::max(1, o.epochs / 10);
    const auto report = train(model, data, cfg, [&](int epoch, const EpochLoss& l) {
        if (epoch % every == 0 || epoch == 1) log.info("epoch " + std::to_string(epoch) + " loss " + fixed(l.total, 6));
        log.debug("epoch " + std::to_string(epoch) + " recon_pos " + fixed(l.position, 8) + " recon_ori " +
                  fixed(l.orientation, 8) + " recon_spread " + fixed(l.spread, 8) + " kl " + fixed(l.kl, 6));
    });
    save_model(o.out, model);
    if (!o.loss_log.empty()) {
        auto f = open_output(o.loss_log);
        write_loss_log(f, report);
    }
    out << "parameters " << model.parameter_count() << '\n';
    if (!report.epochs.empty()) {
        const auto& last = report.epochs.back();
        out << "final_loss " << fixed(last.total, 8) << " kl " << fixed(last.kl, 6) << '\n';
    }
    out << "kl_per_variable";
    for (Eigen::Index i = 0; i < report.final_kl_per_variable.size(); ++i)
        out << ' ' << fixed(report.final_kl_per_variable[i], 6);
    out << "\nused_latent_variables " << report.used_latent_variables << '\n';
    if (report.guarded_normalizations > 0)
        log.info("warning: quaternion normalizer guard fired " + std::to_string(report.guarded_normalizations) +
                 " times");
}

void cmd_generate(const Options& o, std::ostream& out, const Log& log) {
    require_input("--model", o.model);
    require_output("--out", o.out);
    require_output("--csv", o.csv, false);
    const HggModel model = load_model(o.model);
    const TabletopPlane plane = plane_or_default(o.plane, task_or_default(o.task));
    std::mt19937_64 rng(o.seed);
    const auto samples = sample_prior_latents(model, plane, o.count, rng);
    {
        auto f = open_output(o.out);
        write_latent_samples(f, samples, plane);
    }
    if (!o.csv.empty()) {
        auto f = open_output(o.csv);
        write_latent_csv(f, samples);
    }
    log.info("decoded " + std::to_string(samples.size()) + " prior samples");
    out << samples.size() << " configurations written to " << o.out << '\n';
}

void cmd_sweep_latent(const Options& o, std::ostream& out, const Log& log) {
    require_input("--model", o.model);
    require_output("--out", o.out);
    require_output("--csv", o.csv, false);
    const HggModel model = load_model(o.model);
    if (o.axes.size() != 2) throw UsageError("--axes takes two latent indices");
    SweepPlan plan;
    plan.plane = plane_or_default(o.plane, task_or_default(o.task));
    plan.diameters = o.diameters;
    plan.points_per_circle = o.points;
    plan.axis_a = o.axes[0];
    plan.axis_b = o.axes[1];
    if (!o.center.empty()) plan.center = Eigen::Map<const Eigen::VectorXd>(o.center.data(), Eigen::Index(o.center.size()));
    const auto samples = sweep(model, plan);
    {
        auto f = open_output(o.out);
        write_latent_samples(f, samples, plan.plane);
    }
    if (!o.csv.empty()) {
        auto f = open_output(o.csv);
        write_latent_csv(f, samples);
    }
    log.info("visited " + std::to_string(samples.size()) + " latent points");
    out << samples.size() << " configurations written to " << o.out << '\n';
}

void cmd_estimate_dim(const Options& o, std::ostream& out, const Log&) {
    require_input("--data", o.data);
    require_output("--json", o.json, false);
    const GraspDataset data = load_dataset(o.data);
    Eigen::MatrixXd points(static_cast<Eigen::Index>(data.size()), 8);
    for (std::size_t i = 0; i < data.size(); ++i)
        points.row(static_cast<Eigen::Index>(i)) = normalize_grasp(data.records[i].grasp, data.stats).transpose();
    KpcaConfig cfg;
    cfg.kernel = kernel_from_string(o.kernel);
    if (o.gamma > 0.0) cfg.gamma = o.gamma;
    cfg.bandwidth_scale = o.bandwidth_scale;
    cfg.threshold = o.threshold;
    const SpectrumReport report = estimate_dimension(points, cfg);

    out << "component  eigenvalue             cumulative\n";
    const std::size_t shown = std::min<std::size_t>(report.eigenvalues.size(), 12);
    for (std::size_t i = 0; i < shown; ++i)
        out << std::setw(9) << i + 1 << "  " << std::setw(20) << std::setprecision(10) << report.eigenvalues[i] << "  "
            << fixed(report.cumulative[i], 6) << '\n';
    if (report.degenerate) out << "warning: degenerate spectrum (all eigenvalues vanish)\n";
    out << "dimension " << report.dimension << '\n';
    if (!o.json.empty()) {
        auto f = open_output(o.json);
        f << spectrum_to_json(report).dump(2) << '\n';
    }
}

void cmd_eval(const Options& o, std::ostream& out, const Log&) {
    require_input("--model", o.model);
    require_input("--data", o.data);
    require_output("--json", o.json, false);
    const HggModel model = load_model(o.model);
    const GraspDataset data = load_dataset(o.data);
    const auto task = task_or_default(o.task);
    std::mt19937_64 rng(o.seed);
    nlohmann::ordered_json report = nlohmann::ordered_json::array();
    out << "pose        position_error_m  orientation_error_deg  success_share_pct\n";
    for (const auto& pose : task.poses) {
        const auto m = evaluate_model(model, data.records, task, pose.plane, o.samples, rng);
        out << std::left << std::setw(12) << pose.name << std::right << std::setw(16) << fixed(m.mean_position_error, 5)
            << std::setw(23) << fixed(m.mean_orientation_error, 3) << std::setw(19)
            << fixed(100.0 * m.success_share, 1) << '\n';
        nlohmann::ordered_json jm;
        jm["pose"] = pose.name;
        jm["mean_position_error_m"] = m.mean_position_error;
        jm["mean_orientation_error_deg"] = m.mean_orientation_error;
        jm["success_share_pct"] = 100.0 * m.success_share;
        jm["records"] = m.reconstructed;
        jm["samples"] = m.sampled;
        report.push_back(std::move(jm));
    }
    if (!o.json.empty()) {
        auto f = open_output(o.json);
        f << report.dump(2) << '\n';
    }
}

void cmd_hp_sweep(const Options& o, std::ostream& out, const Log& log) {
    require_output("--out", o.out);
    require_output("--json", o.json, false);
    if (o.jobs < 1) throw UsageError("--jobs must be positive");
    const auto task = task_or_default(o.task);
    HyperparameterGrid grid{o.sizes, o.latent_dims, o.kl_coeffs};
    SweepOptions opts;
    opts.training.epochs = o.epochs;
    opts.training.batch_size = o.batch_size;
    opts.training.learning_rate = o.lr;
    opts.per_pose_count = o.per_pose;
    opts.success_samples = o.samples;
    opts.jobs = o.jobs;
    log.info("running " + std::to_string(grid.expand().size() * o.seeds.size()) + " training runs");
    const auto result = run_sweep(task, grid, o.seeds, opts);
    {
        auto f = open_output(o.out);
        write_sweep_csv(f, result.records);
    }
    if (!o.json.empty()) {
        auto f = open_output(o.json);
        f << correlation_to_json(result.table).dump(2) << '\n';
    }
    for (const auto& r : result.records)
        if (!r.ok) log.info("run failed (seed " + std::to_string(r.seed) + "): " + r.error);
    out << std::left << std::setw(24) << "spearman";
    for (const char* h : kHyperparameterNames) out << std::setw(16) << h;
    out << '\n';
    for (std::size_t i = 0; i < kIndicatorNames.size(); ++i) {
        out << std::setw(24) << kIndicatorNames[i];
        for (const auto& v : result.table.rho[i]) out << std::setw(16) << (v ? fixed(*v, 3) : std::string("n/a"));
        out << '\n';
    }
    out << std::right;
}

int exit_code_for(const Error& e) {
    const std::string kind = e.kind();
    if (kind == "path") return kPath;
    if (kind == "usage") return kUsage;
    if (kind == "format") return kFormat;
    if (kind == "numeric") return kNumeric;
    return kValidation;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Conditional VAE grasp-space modeling for an underactuated gripper", "graspvae"};
    app.require_subcommand(1, 1);

    auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Seed for every random draw")->capture_default_str();
        sub->add_option("--config", o.config, "JSON file with option values (flags take precedence)");
    };
    auto training = [&](CLI::App* sub) {
        sub->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
        sub->add_option("--batch-size", o.batch_size, "Minibatch size")->capture_default_str();
        sub->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
    };
    auto plane_opt = [&](CLI::App* sub) {
        sub->add_option("--plane", o.plane, "Tabletop plane a,b,c,d (default: first pose of the task)")
            ->delimiter(',')
            ->expected(4);
        sub->add_option("--task", o.task, "Task JSON used for the default plane");
    };

    std::map<CLI::App*, std::function<void(const Options&, std::ostream&, const Log&)>> handlers;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic primitive grasp dataset");
    common(gen);
    gen->add_option("--task", o.task, "Task definition JSON (default: built-in cylinder task)");
    gen->add_option("--out", o.out, "Output dataset (JSON Lines)");
    gen->add_option("--per-pose", o.per_pose, "Primitives per stable pose")->capture_default_str();
    gen->add_option("--csv", o.csv, "Optional CSV export");
    handlers[gen] = cmd_gen_data;

    auto* tr = app.add_subcommand("train", "Train a grasp generator on a dataset");
    common(tr);
    training(tr);
    tr->add_option("--data", o.data, "Training dataset (JSON Lines)");
    tr->add_option("--out", o.out, "Output model JSON");
    tr->add_option("--latent-dim", o.latent_dim, "Number of latent variables")->capture_default_str();
    tr->add_option("--kl-coeff", o.kl_coeff, "Coefficient on the KL term")->capture_default_str();
    tr->add_option("--network-size", o.network_size, "Target parameter count (0: default layout)")
        ->capture_default_str();
    tr->add_option("--main-widths", o.main_widths, "Hidden widths of the main encoder")->delimiter(',');
    tr->add_option("--loss-log", o.loss_log, "Optional per-epoch loss CSV");
    handlers[tr] = cmd_train;

    auto* ge = app.add_subcommand("generate", "Decode configurations sampled from the latent prior");
    common(ge);
    plane_opt(ge);
    ge->add_option("--model", o.model, "Trained model JSON");
    ge->add_option("--out", o.out, "Output configurations (JSON Lines)");
    ge->add_option("--count", o.count, "Number of samples")->capture_default_str();
    ge->add_option("--csv", o.csv, "Optional CSV export");
    handlers[ge] = cmd_generate;

    auto* sl = app.add_subcommand("sweep-latent", "Decode the center and concentric circles of the latent space");
    common(sl);
    plane_opt(sl);
    sl->add_option("--model", o.model, "Trained model JSON");
    sl->add_option("--out", o.out, "Output configurations (JSON Lines)");
    sl->add_option("--diameters", o.diameters, "Circle diameters")->delimiter(',')->capture_default_str();
    sl->add_option("--points", o.points, "Points per circle")->capture_default_str();
    sl->add_option("--axes", o.axes, "Two latent axes to sweep")->delimiter(',')->capture_default_str();
    sl->add_option("--center", o.center, "Latent center (default origin)")->delimiter(',');
    sl->add_option("--csv", o.csv, "Optional CSV export");
    handlers[sl] = cmd_sweep_latent;

    auto* ed = app.add_subcommand("estimate-dim", "Kernel-PCA estimate of the grasp-space dimension");
    common(ed);
    ed->add_option("--data", o.data, "Dataset (JSON Lines)");
    ed->add_option("--kernel", o.kernel, "rbf or linear")->capture_default_str();
    ed->add_option("--gamma", o.gamma, "Explicit RBF gamma (0: median heuristic)")->capture_default_str();
    ed->add_option("--bandwidth-scale", o.bandwidth_scale, "Multiplier on the median distance")
        ->capture_default_str();
    ed->add_option("--threshold", o.threshold, "Information fraction to retain")->capture_default_str();
    ed->add_option("--json", o.json, "Optional JSON report");
    handlers[ed] = cmd_estimate_dim;

    auto* ev = app.add_subcommand("eval", "Reconstruction errors and oracle success share per stable pose");
    common(ev);
    ev->add_option("--model", o.model, "Trained model JSON");
    ev->add_option("--data", o.data, "Training dataset (JSON Lines)");
    ev->add_option("--task", o.task, "Task definition JSON");
    ev->add_option("--samples", o.samples, "Prior samples per pose")->capture_default_str();
    ev->add_option("--json", o.json, "Optional JSON report");
    handlers[ev] = cmd_eval;

    auto* hp = app.add_subcommand("hp-sweep", "Hyperparameter grid with Spearman correlation table");
    common(hp);
    training(hp);
    hp->add_option("--task", o.task, "Task definition JSON");
    hp->add_option("--out", o.out, "Output CSV of sweep records");
    hp->add_option("--json", o.json, "Optional JSON correlation table");
    hp->add_option("--sizes", o.sizes, "Network sizes (parameters)")->delimiter(',')->capture_default_str();
    hp->add_option("--latent-dims", o.latent_dims, "Latent dimensions")->delimiter(',')->capture_default_str();
    hp->add_option("--kl-coeffs", o.kl_coeffs, "KL coefficients")->delimiter(',')->capture_default_str();
    hp->add_option("--seeds", o.seeds, "Seeds, one run per grid point each")->delimiter(',')->capture_default_str();
    hp->add_option("--per-pose", o.per_pose, "Primitives per stable pose")->capture_default_str();
    hp->add_option("--samples", o.samples, "Prior samples per pose for the success share")->capture_default_str();
    hp->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str();
    handlers[hp] = cmd_hp_sweep;

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: kind=usage code=" << kUsage << ": " << one_line(e.what()) << '\n';
        return kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    const Log log{err};
    try {
        apply_config(*sub, o.config);
        handlers.at(sub)(o, out, log);
    } catch (const Error& e) {
        const int code = exit_code_for(e);
        err << "error: kind=" << e.kind() << " code=" << code << ": " << one_line(e.what()) << '\n';
        return code;
    } catch (const CLI::ParseError& e) {
        err << "error: kind=usage code=" << kUsage << ": " << one_line(e.what()) << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: kind=internal code=" << kInternal << ": " << one_line(e.what()) << '\n';
        return kInternal;
    }
    return kOk;
}

}  // namespace graspvae::cli
