#include "graspvae/hgg.hpp"

#include "graspvae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

namespace graspvae {
namespace {

constexpr int kInputSlices[4][2] = {{0, 3}, {3, 4}, {7, 1}, {8, 4}};  // offset, width
constexpr int kFormatVersion = 1;

std::vector<LayerSpec> chain(int input, const std::vector<int>& widths, Activation hidden, int last_width = 0,
                             Activation last = Activation::linear) {
    std::vector<LayerSpec> specs;
    int in = input;
    for (int w : widths) {
        specs.push_back({in, w, hidden});
        in = w;
    }
    if (last_width > 0) specs.push_back({in, last_width, last});
    return specs;
}

std::array<std::vector<LayerSpec>, HggModel::kPartCount> layer_plan(const HggArchitecture& a) {
    std::array<std::vector<LayerSpec>, HggModel::kPartCount> plan;
    const int head_out = a.input_head_widths.back();
    for (std::size_t h = 0; h < 4; ++h) plan[h] = chain(kInputSlices[h][1], a.input_head_widths, Activation::tanh);
    plan[HggModel::kEncMain] = chain(4 * head_out, a.main_widths, Activation::tanh, 2 * a.latent_dim);
    plan[HggModel::kDecTable] = chain(4, a.input_head_widths, Activation::tanh);
    const std::vector<int> reversed(a.main_widths.rbegin(), a.main_widths.rend());
    plan[HggModel::kDecMain] = chain(a.latent_dim + head_out, reversed, Activation::tanh);
    const int trunk = reversed.back();
    plan[HggModel::kDecPosition] = chain(trunk, a.output_head_widths, Activation::tanh, 3, Activation::sigmoid);
    plan[HggModel::kDecOrientation] =
        chain(trunk, a.output_head_widths, Activation::tanh, 4, Activation::quaternion_normalizer);
    plan[HggModel::kDecSpread] = chain(trunk, a.output_head_widths, Activation::tanh, 1, Activation::sigmoid);
    return plan;
}

std::vector<int> int_list(const nlohmann::json& j, const char* key) { return j.at(key).get<std::vector<int>>(); }

}  // namespace

void HggArchitecture::validate() const {
    if (latent_dim < 1) throw ShapeError("latent dimension must be positive");
    if (input_head_widths.empty() || main_widths.empty())
        throw ShapeError("input heads and main networks need at least one hidden layer");
    for (const auto* widths : {&input_head_widths, &main_widths, &output_head_widths}) {
        for (int w : *widths)
            if (w < 1) throw ShapeError("hidden layer width must be positive, got " + std::to_string(w));
    }
}

std::size_t HggArchitecture::parameter_count() const {
    validate();
    std::size_t n = 0;
    for (const auto& specs : layer_plan(*this))
        for (const auto& s : specs) n += static_cast<std::size_t>(s.input_width) * s.output_width + s.output_width;
    return n;
}

HggArchitecture HggArchitecture::for_size(int latent_dim, std::size_t target_parameters) {
    HggArchitecture base;
    base.latent_dim = latent_dim;
    HggArchitecture best = base;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int step = 5; step <= 400; ++step) {
        const double k = step / 100.0;
        HggArchitecture a = base;
        for (auto& w : a.main_widths) w = std::max(1, static_cast<int>(std::lround(w * k)));
        const double gap = std::abs(static_cast<double>(a.parameter_count()) - static_cast<double>(target_parameters));
        if (gap < best_gap) {
            best_gap = gap;
            best = a;
        }
    }
    return best;
}

KlDivergence kl_divergence(const LatentDistribution& dist) {
    KlDivergence kl;
    const auto& mu = dist.mean.array();
    const auto& lv = dist.log_variance.array();
    kl.per_variable = 0.5 * (mu.square() + lv.exp() - 1.0 - lv);
    kl.sum = kl.per_variable.sum();
    return kl;
}

Eigen::VectorXd reparameterize(const LatentDistribution& dist, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(dist.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z[i] = dist.mean[i] + normal(rng) * std::exp(0.5 * dist.log_variance[i]);
    return z;
}

HggModel::HggModel(HggArchitecture arch, NormalizationStats stats, std::array<DenseNetwork, kPartCount> networks)
    : arch_(std::move(arch)), stats_(std::move(stats)), networks_(std::move(networks)) {
    arch_.validate();
    stats_.validate();
    const auto plan = layer_plan(arch_);
    for (std::size_t p = 0; p < kPartCount; ++p) {
        const auto& net = networks_[p];
        bool match = net.size() == plan[p].size();
        for (std::size_t i = 0; match && i < net.size(); ++i) match = net.layer(i).spec == plan[p][i];
        if (!match) throw ShapeError(std::string("network '") + kPartNames[p] + "' does not match the architecture");
    }
}

std::size_t HggModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& net : networks_) n += count_parameters(net);
    return n;
}

Eigen::MatrixXd HggModel::encode_normalized(const Eigen::MatrixXd& inputs) const {
    if (inputs.rows() != 12) throw ShapeError("encoder expects 12 input rows");
    const int head_out = arch_.input_head_widths.back();
    Eigen::MatrixXd heads(4 * head_out, inputs.cols());
    for (int h = 0; h < 4; ++h)
        heads.middleRows(h * head_out, head_out) =
            forward(networks_[h], inputs.middleRows(kInputSlices[h][0], kInputSlices[h][1]));
    return forward(networks_[kEncMain], heads);
}

Eigen::MatrixXd HggModel::decode_normalized(const Eigen::MatrixXd& latents, const Eigen::MatrixXd& planes) const {
    const int n = arch_.latent_dim;
    if (latents.rows() != n || planes.rows() != 4 || planes.cols() != latents.cols())
        throw ShapeError("decoder expects n latent rows and 4 plane rows with matching columns");
    const Eigen::MatrixXd table = forward(networks_[kDecTable], planes);
    Eigen::MatrixXd joined(n + table.rows(), latents.cols());
    joined << latents, table;
    const Eigen::MatrixXd trunk = forward(networks_[kDecMain], joined);
    Eigen::MatrixXd out(8, latents.cols());
    out << forward(networks_[kDecPosition], trunk), forward(networks_[kDecOrientation], trunk),
        forward(networks_[kDecSpread], trunk);
    return out;
}

LatentDistribution HggModel::encode(const GraspRecord& record) const {
    const Eigen::MatrixXd enc = encode_normalized(normalize(record, stats_).values);
    const int n = arch_.latent_dim;
    return {enc.col(0).head(n), enc.col(0).tail(n)};
}

GraspConfiguration HggModel::decode(const Eigen::VectorXd& latent, const TabletopPlane& plane) const {
    if (latent.size() != arch_.latent_dim)
        throw ShapeError("latent has " + std::to_string(latent.size()) + " components, model uses " +
                         std::to_string(arch_.latent_dim));
    if (!latent.allFinite()) throw NumericError("latent has non-finite components");
    const Eigen::MatrixXd out = decode_normalized(latent, normalize_plane(plane, stats_));
    return denormalize(out.col(0), stats_).grasp;
}

LossEvaluation HggModel::evaluate(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& noise,
                                  double kl_coefficient, bool with_gradients) const {
    const int n = arch_.latent_dim;
    const Eigen::Index batch = inputs.cols();
    if (batch == 0) throw UsageError("loss needs a non-empty batch");
    if (inputs.rows() != 12 || noise.rows() != n || noise.cols() != batch)
        throw ShapeError("loss inputs must be 12 x B with n x B noise");

    std::array<ForwardCache, kPartCount> cache;
    const int head_out = arch_.input_head_widths.back();
    Eigen::MatrixXd heads(4 * head_out, batch);
    for (int h = 0; h < 4; ++h)
        heads.middleRows(h * head_out, head_out) =
            forward(networks_[h], inputs.middleRows(kInputSlices[h][0], kInputSlices[h][1]), &cache[h]);
    const Eigen::MatrixXd enc = forward(networks_[kEncMain], heads, &cache[kEncMain]);
    const Eigen::ArrayXXd mean = enc.topRows(n).array();
    const Eigen::ArrayXXd log_var = enc.bottomRows(n).array();
    const Eigen::ArrayXXd sigma = (0.5 * log_var).exp();

    const Eigen::MatrixXd table = forward(networks_[kDecTable], inputs.bottomRows(4), &cache[kDecTable]);
    Eigen::MatrixXd joined(n + table.rows(), batch);
    joined << (mean + noise.array() * sigma).matrix(), table;
    const Eigen::MatrixXd trunk = forward(networks_[kDecMain], joined, &cache[kDecMain]);
    Eigen::MatrixXd out(8, batch);
    out << forward(networks_[kDecPosition], trunk, &cache[kDecPosition]),
        forward(networks_[kDecOrientation], trunk, &cache[kDecOrientation]),
        forward(networks_[kDecSpread], trunk, &cache[kDecSpread]);

    const Eigen::MatrixXd diff = out - inputs.topRows(8);
    const double inv_batch = 1.0 / static_cast<double>(batch);

    LossEvaluation eval;
    eval.guarded_normalizations = cache[kDecOrientation].guarded_columns;
    auto& b = eval.breakdown;
    b.per_parameter = diff.rowwise().squaredNorm() * inv_batch;
    b.position = b.per_parameter.head<3>().sum();
    b.orientation = b.per_parameter.segment<4>(3).sum();
    b.spread = b.per_parameter[7];
    b.reconstruction = b.per_parameter.sum();
    b.kl = (0.5 * (mean.square() + log_var.exp() - 1.0 - log_var)).sum() * inv_batch;
    b.total = b.reconstruction + kl_coefficient * b.kl;
    if (!with_gradients) return eval;

    auto& grads = eval.gradients.networks;
    grads.resize(kPartCount);
    const Eigen::MatrixXd d_out = 2.0 * inv_batch * diff;
    auto bp = backward(networks_[kDecPosition], cache[kDecPosition], d_out.topRows(3));
    auto bo = backward(networks_[kDecOrientation], cache[kDecOrientation], d_out.middleRows(3, 4));
    auto bs = backward(networks_[kDecSpread], cache[kDecSpread], d_out.bottomRows(1));
    auto bm = backward(networks_[kDecMain], cache[kDecMain], bp.input_gradient + bo.input_gradient + bs.input_gradient);
    auto bt = backward(networks_[kDecTable], cache[kDecTable], bm.input_gradient.bottomRows(table.rows()));

    const Eigen::ArrayXXd d_z = bm.input_gradient.topRows(n).array();
    Eigen::MatrixXd d_enc(2 * n, batch);
    d_enc.topRows(n) = (d_z + kl_coefficient * inv_batch * mean).matrix();
    d_enc.bottomRows(n) =
        (d_z * noise.array() * 0.5 * sigma + kl_coefficient * inv_batch * 0.5 * (log_var.exp() - 1.0)).matrix();
    auto be = backward(networks_[kEncMain], cache[kEncMain], d_enc);
    for (int h = 0; h < 4; ++h)
        grads[h] = backward(networks_[h], cache[h], be.input_gradient.middleRows(h * head_out, head_out)).parameters;

    grads[kEncMain] = std::move(be.parameters);
    grads[kDecTable] = std::move(bt.parameters);
    grads[kDecMain] = std::move(bm.parameters);
    grads[kDecPosition] = std::move(bp.parameters);
    grads[kDecOrientation] = std::move(bo.parameters);
    grads[kDecSpread] = std::move(bs.parameters);
    return eval;
}

HggModel build_hgg(const HggArchitecture& arch, const NormalizationStats& stats, std::uint64_t seed) {
    arch.validate();
    std::mt19937_64 rng(seed);
    const auto plan = layer_plan(arch);
    std::array<DenseNetwork, HggModel::kPartCount> nets;
    for (std::size_t p = 0; p < HggModel::kPartCount; ++p) nets[p] = DenseNetwork::glorot(plan[p], rng);
    return HggModel(arch, stats, std::move(nets));
}

Eigen::MatrixXd normalized_inputs(std::span<const GraspRecord> records, const NormalizationStats& stats) {
    Eigen::MatrixXd x(12, static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i)
        x.col(static_cast<Eigen::Index>(i)) = normalize(records[i], stats).values;
    return x;
}

LossBreakdown loss(const HggModel& model, std::span<const GraspRecord> batch, double kl_coefficient,
                   std::mt19937_64& rng) {
    if (batch.empty()) throw UsageError("loss needs a non-empty batch");
    std::normal_distribution<double> normal;
    Eigen::MatrixXd noise(model.latent_dim(), static_cast<Eigen::Index>(batch.size()));
    for (Eigen::Index c = 0; c < noise.cols(); ++c)
        for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = normal(rng);
    return model.evaluate(normalized_inputs(batch, model.stats()), noise, kl_coefficient, false).breakdown;
}

void TrainingConfig::validate(std::size_t dataset_size) const {
    if (!(kl_coefficient > 0.0) || !std::isfinite(kl_coefficient))
        throw ValidationError("KL coefficient must be positive");
    if (epochs < 0) throw ValidationError("epochs must be non-negative");
    if (batch_size < 1) throw ValidationError("batch size must be positive");
    if (static_cast<std::size_t>(batch_size) > dataset_size)
        throw ValidationError("batch size " + std::to_string(batch_size) + " exceeds dataset size " +
                              std::to_string(dataset_size));
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
}

Eigen::VectorXd mean_kl_per_variable(const HggModel& model, std::span<const GraspRecord> records) {
    const int n = model.latent_dim();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    if (records.empty()) return acc;
    const Eigen::MatrixXd enc = model.encode_normalized(normalized_inputs(records, model.stats()));
    const Eigen::ArrayXXd mu = enc.topRows(n).array();
    const Eigen::ArrayXXd lv = enc.bottomRows(n).array();
    acc = (0.5 * (mu.square() + lv.exp() - 1.0 - lv)).rowwise().mean().matrix();
    return acc;
}

int count_used_latents(const Eigen::VectorXd& kl_per_variable, double threshold) {
    return static_cast<int>((kl_per_variable.array() > threshold).count());
}

TrainingReport train(HggModel& model, const GraspDataset& dataset, const TrainingConfig& config,
                     const EpochCallback& on_epoch) {
    config.validate(dataset.size());
    const Eigen::MatrixXd inputs = normalized_inputs(dataset.records, model.stats());
    const int n = model.latent_dim();
    const auto count = static_cast<Eigen::Index>(dataset.size());

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal;
    std::array<AdamState, HggModel::kPartCount> optim;
    AdamConfig adam;
    adam.learning_rate = config.learning_rate;
    for (std::size_t p = 0; p < HggModel::kPartCount; ++p)
        optim[p] = AdamState::for_network(model.network(static_cast<HggModel::Part>(p)), adam);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    TrainingReport report;
    report.used_threshold = kUsedLatentThreshold;
    report.epochs.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochLoss acc;
        int batch_index = 0;
        for (Eigen::Index start = 0; start < count; start += config.batch_size, ++batch_index) {
            const Eigen::Index size = std::min<Eigen::Index>(config.batch_size, count - start);
            Eigen::MatrixXd batch(12, size);
            Eigen::MatrixXd noise(n, size);
            for (Eigen::Index c = 0; c < size; ++c) {
                batch.col(c) = inputs.col(order[static_cast<std::size_t>(start + c)]);
                for (int r = 0; r < n; ++r) noise(r, c) = normal(rng);
            }
            auto eval = model.evaluate(batch, noise, config.kl_coefficient, true);
            const auto& b = eval.breakdown;
            if (!std::isfinite(b.total))
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(batch_index));
            report.guarded_normalizations += eval.guarded_normalizations;
            const double w = static_cast<double>(size) / static_cast<double>(count);
            acc.position += w * b.position;
            acc.orientation += w * b.orientation;
            acc.spread += w * b.spread;
            acc.kl += w * b.kl;
            acc.total += w * b.total;
            for (std::size_t p = 0; p < HggModel::kPartCount; ++p) {
                const auto part = static_cast<HggModel::Part>(p);
                try {
                    adam_step(model.mutable_network(part), eval.gradients.networks[p], optim[p]);
                } catch (const NumericError& e) {
                    throw NumericError(std::string(e.what()) + " of " + HggModel::kPartNames[p] + " at epoch " +
                                       std::to_string(epoch) + ", batch " + std::to_string(batch_index));
                }
            }
        }
        report.epochs.push_back(acc);
        if (on_epoch) on_epoch(epoch, acc);
    }
    report.final_kl_per_variable = mean_kl_per_variable(model, dataset.records);
    report.used_latent_variables = count_used_latents(report.final_kl_per_variable, report.used_threshold);
    return report;
}

void write_loss_log(std::ostream& out, const TrainingReport& report) {
    out << "epoch,recon_position,recon_orientation,recon_spread,kl,total\n";
    const auto old = out.precision(17);
    for (std::size_t i = 0; i < report.epochs.size(); ++i) {
        const auto& e = report.epochs[i];
        out << i + 1 << ',' << e.position << ',' << e.orientation << ',' << e.spread << ',' << e.kl << ','
            << e.total << '\n';
    }
    out.precision(old);
}

nlohmann::ordered_json architecture_to_json(const HggArchitecture& a) {
    nlohmann::ordered_json j;
    j["latent_dim"] = a.latent_dim;
    j["input_head_widths"] = a.input_head_widths;
    j["main_widths"] = a.main_widths;
    j["output_head_widths"] = a.output_head_widths;
    return j;
}

HggArchitecture architecture_from_json(const nlohmann::json& j) {
    HggArchitecture a;
    a.latent_dim = j.at("latent_dim").get<int>();
    a.input_head_widths = int_list(j, "input_head_widths");
    a.main_widths = int_list(j, "main_widths");
    a.output_head_widths = int_list(j, "output_head_widths");
    a.validate();
    return a;
}

nlohmann::ordered_json model_to_json(const HggModel& model) {
    nlohmann::ordered_json j;
    j["format_version"] = kFormatVersion;
    j["architecture"] = architecture_to_json(model.architecture());
    j["stats"] = stats_to_json(model.stats());
    nlohmann::ordered_json nets;
    for (std::size_t p = 0; p < HggModel::kPartCount; ++p)
        nets[HggModel::kPartNames[p]] = network_to_json(model.network(static_cast<HggModel::Part>(p)));
    j["networks"] = std::move(nets);
    return j;
}

HggModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kFormatVersion)
            throw FormatError("unsupported model format_version " + j.at("format_version").dump());
        std::array<DenseNetwork, HggModel::kPartCount> nets;
        for (std::size_t p = 0; p < HggModel::kPartCount; ++p)
            nets[p] = network_from_json(j.at("networks").at(HggModel::kPartNames[p]));
        return HggModel(architecture_from_json(j.at("architecture")), stats_from_json(j.at("stats")),
                        std::move(nets));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const HggModel& model) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write model file " + path.string());
    out << model_to_json(model).dump() << '\n';
}

HggModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open model file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("invalid model JSON: ") + e.what());
    }
    return model_from_json(j);
}

}  // namespace graspvae
