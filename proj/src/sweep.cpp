#include "graspvae/sweep.hpp"

#include "graspvae/errors.hpp"
#include "graspvae/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <ostream>
#include <thread>

namespace graspvae {

std::vector<Hyperparameters> HyperparameterGrid::expand() const {
    std::vector<Hyperparameters> out;
    for (auto size : network_sizes)
        for (int n : latent_dims)
            for (double beta : kl_coefficients) out.push_back({size, n, beta});
    return out;
}

void HyperparameterGrid::validate() const {
    if (network_sizes.empty() || latent_dims.empty() || kl_coefficients.empty())
        throw ValidationError("every hyperparameter needs at least one value");
    for (auto s : network_sizes)
        if (s < 12000 || s > 30000) throw ValidationError("network size outside 12000-30000 parameters");
    for (int n : latent_dims)
        if (n < 2 || n > 6) throw ValidationError("latent dimension outside 2-6");
    for (double b : kl_coefficients)
        if (!(b >= 0.0002 && b <= 0.01)) throw ValidationError("KL coefficient outside 0.0002-0.01");
}

Indicators compute_indicators(const HggModel& model, const GraspDataset& dataset, const SyntheticGraspTask& task,
                              std::size_t success_samples, std::uint64_t seed) {
    Indicators ind;
    const Eigen::MatrixXd inputs = normalized_inputs(dataset.records, model.stats());
    const Eigen::MatrixXd zero_noise = Eigen::MatrixXd::Zero(model.latent_dim(), inputs.cols());
    ind.reconstruction_error = model.evaluate(inputs, zero_noise, 0.0, false).breakdown.reconstruction;
    const Eigen::VectorXd kl = mean_kl_per_variable(model, dataset.records);
    ind.kl_divergence = kl.mean();
    ind.used_latent_variables = count_used_latents(kl);
    std::mt19937_64 rng(seed);
    double share = 0.0;
    for (const auto& pose : task.poses) share += success_share(model, task, pose.plane, success_samples, rng);
    ind.success_share = share / static_cast<double>(task.poses.size());
    return ind;
}

SweepResult run_sweep(const SyntheticGraspTask& task, const HyperparameterGrid& grid,
                      const std::vector<std::uint64_t>& seeds, const SweepOptions& options) {
    grid.validate();
    task.validate();
    if (seeds.empty()) throw ValidationError("sweep needs at least one seed");
    const auto points = grid.expand();

    SweepResult result;
    result.records.resize(points.size() * seeds.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            auto& r = result.records[i * seeds.size() + s];
            r.hyperparameters = points[i];
            r.seed = seeds[s];
        }

    auto run_one = [&](SweepRecord& r) {
        try {
            std::mt19937_64 data_rng(r.seed);
            const GraspDataset data = generate_primitives(task, options.per_pose_count, data_rng);
            const auto arch = HggArchitecture::for_size(r.hyperparameters.latent_dim, r.hyperparameters.network_size);
            HggModel model = build_hgg(arch, data.stats, r.seed);
            r.parameter_count = model.parameter_count();
            TrainingConfig cfg = options.training;
            cfg.kl_coefficient = r.hyperparameters.kl_coefficient;
            cfg.seed = r.seed;
            train(model, data, cfg);
            r.indicators = compute_indicators(model, data, task, options.success_samples, r.seed);
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
    };

    const auto jobs = static_cast<std::size_t>(std::max(1, options.jobs));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < result.records.size(); i = next++) run_one(result.records[i]);
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < std::min(jobs, result.records.size()); ++j) pool.emplace_back(worker);
    }
    result.table = correlation_table(result.records);
    return result;
}

CorrelationTable correlation_table(const std::vector<SweepRecord>& records) {
    std::array<std::vector<double>, 4> ind;
    std::array<std::vector<double>, 3> hp;
    for (const auto& r : records) {
        if (!r.ok) continue;
        ind[0].push_back(r.indicators.used_latent_variables);
        ind[1].push_back(r.indicators.reconstruction_error);
        ind[2].push_back(r.indicators.kl_divergence);
        ind[3].push_back(r.indicators.success_share);
        hp[0].push_back(r.hyperparameters.latent_dim);
        hp[1].push_back(r.hyperparameters.kl_coefficient);
        hp[2].push_back(static_cast<double>(r.parameter_count));
    }
    CorrelationTable t;
    t.runs_used = ind[0].size();
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t h = 0; h < 3; ++h) {
            try {
                t.rho[i][h] = spearman(ind[i], hp[h]);
            } catch (const Error&) {
                t.rho[i][h].reset();
            }
        }
    return t;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
    out << "network_size,parameter_count,latent_dim,kl_coefficient,seed,ok,reconstruction_error,kl_divergence,"
           "used_latent_variables,success_share\n";
    const auto old = out.precision(17);
    for (const auto& r : records) {
        const auto& h = r.hyperparameters;
        const auto& i = r.indicators;
        out << h.network_size << ',' << r.parameter_count << ',' << h.latent_dim << ',' << h.kl_coefficient << ','
            << r.seed << ',' << (r.ok ? 1 : 0) << ',';
        if (r.ok)
            out << i.reconstruction_error << ',' << i.kl_divergence << ',' << i.used_latent_variables << ','
                << i.success_share;
        else
            out << ",,,";
        out << '\n';
    }
    out.precision(old);
}

nlohmann::ordered_json correlation_to_json(const CorrelationTable& t) {
    nlohmann::ordered_json j;
    j["hyperparameters"] = kHyperparameterNames;
    j["indicators"] = kIndicatorNames;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rho) {
        auto jr = nlohmann::ordered_json::array();
        for (const auto& v : row) jr.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
        rows.push_back(std::move(jr));
    }
    j["spearman"] = std::move(rows);
    j["runs_used"] = t.runs_used;
    return j;
}

}  // namespace graspvae
