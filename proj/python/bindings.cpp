#include "graspvae/dataset.hpp"
#include "graspvae/errors.hpp"
#include "graspvae/explorer.hpp"
#include "graspvae/hgg.hpp"
#include "graspvae/kpca.hpp"
#include "graspvae/metrics.hpp"
#include "graspvae/task.hpp"

#include <pybind11/eigen.h>
#include <pybind11/gil_safe_call_once.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

namespace py = pybind11;
using namespace graspvae;

namespace {

using Rows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

SyntheticGraspTask task_from(const std::optional<std::string>& path) {
    return path ? load_task(*path) : SyntheticGraspTask::default_task();
}

TabletopPlane plane_from(const Eigen::Vector4d& p) { return TabletopPlane::make(p); }

GraspConfiguration config_from(const Vector8d& v) {
    return GraspConfiguration::make(v.head<3>(), Eigen::Quaterniond(v[6], v[3], v[4], v[5]), v[7], 1e-6);
}

Rows stack(const std::vector<LatentSample>& samples, bool latents) {
    const Eigen::Index cols = latents ? (samples.empty() ? 0 : samples.front().latent.size()) : 8;
    Rows out(static_cast<Eigen::Index>(samples.size()), cols);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (latents)
            out.row(static_cast<Eigen::Index>(i)) = samples[i].latent.transpose();
        else
            out.row(static_cast<Eigen::Index>(i)) = samples[i].grasp.as_vector().transpose();
    }
    return out;
}

py::dict report_dict(const TrainingReport& r) {
    py::list total, kl, position, orientation, spread;
    for (const auto& e : r.epochs) {
        total.append(e.total);
        kl.append(e.kl);
        position.append(e.position);
        orientation.append(e.orientation);
        spread.append(e.spread);
    }
    py::dict d;
    d["total"] = total;
    d["kl"] = kl;
    d["recon_position"] = position;
    d["recon_orientation"] = orientation;
    d["recon_spread"] = spread;
    d["kl_per_variable"] = r.final_kl_per_variable;
    d["used_latent_variables"] = r.used_latent_variables;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of the graspvae package";

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result([&] { return py::exception<Error>(m, "Error", PyExc_RuntimeError); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error_type.get_stored(), (std::string(e.kind()) + ": " + e.what()).c_str());
        }
    });

    py::class_<GraspDataset>(m, "Dataset", "Grasp records with their normalization statistics")
        .def_static("load", &load_dataset, py::arg("path"))
        .def("save", [](const GraspDataset& d, const std::string& path) { save_dataset(path, d.records); },
             py::arg("path"))
        .def("__len__", &GraspDataset::size)
        .def(
            "configurations",
            [](const GraspDataset& d) {
                Rows out(static_cast<Eigen::Index>(d.size()), 8);
                for (std::size_t i = 0; i < d.size(); ++i)
                    out.row(static_cast<Eigen::Index>(i)) = d.records[i].grasp.as_vector().transpose();
                return out;
            },
            "N x 8 array: x, y, z, qx, qy, qz, qw, spread")
        .def(
            "planes",
            [](const GraspDataset& d) {
                Rows out(static_cast<Eigen::Index>(d.size()), 4);
                for (std::size_t i = 0; i < d.size(); ++i)
                    out.row(static_cast<Eigen::Index>(i)) = d.records[i].plane.coefficients().transpose();
                return out;
            },
            "N x 4 array of tabletop coefficients a, b, c, d")
        .def(
            "normalized",
            [](const GraspDataset& d) { return Rows(normalized_inputs(d.records, d.stats).transpose()); },
            "N x 12 array of normalized model inputs")
        .def("grasp_types", [](const GraspDataset& d) {
            std::vector<std::optional<int>> out;
            for (const auto& r : d.records) out.push_back(r.grasp_type);
            return out;
        });

    m.def(
        "generate_primitives",
        [](std::size_t per_pose, std::uint64_t seed, const std::optional<std::string>& task) {
            std::mt19937_64 rng(seed);
            return generate_primitives(task_from(task), per_pose, rng);
        },
        py::arg("per_pose") = 75, py::arg("seed") = 1, py::arg("task") = py::none(),
        "Synthetic primitive grasps for every stable pose of the task");

    py::class_<HggModel>(m, "Model", "Trained conditional VAE grasp generator")
        .def_static(
            "train",
            [](const GraspDataset& data, int latent_dim, double kl_coeff, int epochs, int batch_size, double lr,
               std::uint64_t seed, std::size_t network_size) {
                HggArchitecture arch;
                if (network_size > 0) arch = HggArchitecture::for_size(latent_dim, network_size);
                arch.latent_dim = latent_dim;
                TrainingConfig cfg{kl_coeff, epochs, batch_size, lr, seed};
                cfg.validate(data.size());
                TrainingReport report;
                HggModel model = [&] {
                    py::gil_scoped_release release;
                    HggModel mdl = build_hgg(arch, data.stats, seed);
                    report = train(mdl, data, cfg);
                    return mdl;
                }();
                return py::make_tuple(std::move(model), report_dict(report));
            },
            py::arg("dataset"), py::arg("latent_dim") = 3, py::arg("kl_coeff") = 0.0005, py::arg("epochs") = 2000,
            py::arg("batch_size") = 16, py::arg("learning_rate") = 1e-3, py::arg("seed") = 1,
            py::arg("network_size") = 0, "Returns (model, report)")
        .def_static("load", &load_model, py::arg("path"))
        .def("save", [](const HggModel& mdl, const std::string& path) { save_model(path, mdl); }, py::arg("path"))
        .def_property_readonly("latent_dim", &HggModel::latent_dim)
        .def_property_readonly("parameter_count", &HggModel::parameter_count)
        .def(
            "encode",
            [](const HggModel& mdl, const Vector8d& config, const Eigen::Vector4d& plane) {
                const auto d = mdl.encode({config_from(config), plane_from(plane), std::nullopt});
                return py::make_tuple<py::return_value_policy::copy>(d.mean, d.log_variance);
            },
            py::arg("configuration"), py::arg("plane"), "Returns (mean, log_variance)")
        .def(
            "decode",
            [](const HggModel& mdl, const Eigen::VectorXd& z, const Eigen::Vector4d& plane) {
                return Vector8d(mdl.decode(z, plane_from(plane)).as_vector());
            },
            py::arg("latent"), py::arg("plane"))
        .def(
            "sample",
            [](const HggModel& mdl, const Eigen::Vector4d& plane, std::size_t count, std::uint64_t seed) {
                std::mt19937_64 rng(seed);
                const auto s = sample_prior_latents(mdl, plane_from(plane), count, rng);
                return py::make_tuple(stack(s, true), stack(s, false));
            },
            py::arg("plane"), py::arg("count"), py::arg("seed") = 1, "Returns (latents, configurations)")
        .def(
            "sweep",
            [](const HggModel& mdl, const Eigen::Vector4d& plane, std::vector<double> diameters, int points,
               std::pair<int, int> axes, std::optional<Eigen::VectorXd> center) {
                SweepPlan plan;
                plan.plane = plane_from(plane);
                plan.diameters = std::move(diameters);
                plan.points_per_circle = points;
                plan.axis_a = axes.first;
                plan.axis_b = axes.second;
                if (center) plan.center = *center;
                const auto s = sweep(mdl, plan);
                return py::make_tuple(stack(s, true), stack(s, false));
            },
            py::arg("plane"), py::arg("diameters") = std::vector<double>{0.5, 1.0}, py::arg("points") = 8,
            py::arg("axes") = std::pair<int, int>{0, 1}, py::arg("center") = py::none(),
            "Center first, then circles inner to outer. Returns (latents, configurations)");

    m.def(
        "evaluate",
        [](const HggModel& mdl, const GraspDataset& data, std::size_t samples, std::uint64_t seed,
           const std::optional<std::string>& task_path) {
            const auto task = task_from(task_path);
            std::mt19937_64 rng(seed);
            py::list out;
            for (const auto& pose : task.poses) {
                const auto mt = evaluate_model(mdl, data.records, task, pose.plane, samples, rng);
                py::dict d;
                d["pose"] = pose.name;
                d["mean_position_error"] = mt.mean_position_error;
                d["mean_orientation_error"] = mt.mean_orientation_error;
                d["success_share"] = mt.success_share;
                out.append(d);
            }
            return out;
        },
        py::arg("model"), py::arg("dataset"), py::arg("samples") = 1000, py::arg("seed") = 1,
        py::arg("task") = py::none(), "Per-pose reconstruction errors (m, deg) and success share");

    m.def(
        "oracle_success",
        [](const Vector8d& config, const Eigen::Vector4d& plane, const std::optional<std::string>& task) {
            const auto v = oracle_success(task_from(task), {config_from(config), plane_from(plane), std::nullopt});
            return py::make_tuple(v.success, std::string(to_string(v.reason)));
        },
        py::arg("configuration"), py::arg("plane"), py::arg("task") = py::none(), "Returns (success, reason)");

    m.def(
        "estimate_dimension",
        [](const Eigen::MatrixXd& points, const std::string& kernel, std::optional<double> gamma,
           double bandwidth_scale, double threshold) {
            KpcaConfig cfg;
            cfg.kernel = kernel_from_string(kernel);
            cfg.gamma = gamma;
            cfg.bandwidth_scale = bandwidth_scale;
            cfg.threshold = threshold;
            const auto r = estimate_dimension(points, cfg);
            py::dict d;
            d["dimension"] = r.dimension;
            d["eigenvalues"] = r.eigenvalues;
            d["cumulative"] = r.cumulative;
            d["gamma"] = r.gamma;
            d["degenerate"] = r.degenerate;
            return d;
        },
        py::arg("points"), py::arg("kernel") = "rbf", py::arg("gamma") = py::none(), py::arg("bandwidth_scale") = 3.0,
        py::arg("threshold") = 0.9, "Kernel-PCA intrinsic dimension of the rows of `points`");

    m.def(
        "spearman", [](const std::vector<double>& xs, const std::vector<double>& ys) { return spearman(xs, ys); },
        py::arg("xs"), py::arg("ys"));
}
