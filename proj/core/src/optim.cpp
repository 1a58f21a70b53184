#include "ptl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ptl/error.hpp"

namespace ptl {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) {
        throw std::invalid_argument("parameter/gradient length mismatch: " + std::to_string(a) + " vs " +
                                    std::to_string(b));
    }
}

ImageTensor stack_batch(std::span<const ImagePair> pairs, bool distorted) {
    if (pairs.empty()) throw DataError("training set is empty");
    const Shape one = pairs.front().original.shape();
    if (one.batch != 1) throw DataError("training images must have batch size 1");
    Shape stacked = one;
    stacked.batch = pairs.size();
    std::vector<double> data;
    data.reserve(stacked.size());
    for (const auto& p : pairs) {
        if (p.distorted.shape() != one || p.original.shape() != one) {
            throw DataError("training pairs must share one shape (" + to_string(one) + ")");
        }
        const auto src = distorted ? p.distorted.data() : p.original.data();
        data.insert(data.end(), src.begin(), src.end());
    }
    return ImageTensor(stacked, std::move(data));
}

// Target tiled across M channel blocks to match a multi-TM layer output.
ImageTensor tile_channels(const ImageTensor& t, std::size_t m_count) {
    ImageTensor out(Shape{t.batch(), t.height(), t.width(), t.channels() * m_count});
    for (std::size_t n = 0; n < t.batch(); ++n)
        for (std::size_t y = 0; y < t.height(); ++y)
            for (std::size_t x = 0; x < t.width(); ++x)
                for (std::size_t m = 0; m < m_count; ++m)
                    for (std::size_t c = 0; c < t.channels(); ++c) out(n, y, x, m * t.channels() + c) = t(n, y, x, c);
    return out;
}

std::array<double, 8> parameter_scale(const Shape& s, bool precondition) {
    if (!precondition) return {1, 1, 1, 1, 1, 1, 1, 1};
    const double l = static_cast<double>(std::max(s.height, s.width));
    return {1.0, 1.0, l, 1.0, 1.0, l, 1.0 / l, 1.0 / l};
}

// Flat optimiser view over several layers: theta_i = scale_i * phi_i.
class ScaledParams {
public:
    ScaledParams(const std::vector<PTLayer*>& layers, const std::array<double, 8>& scale) : scale_(scale) {
        for (const PTLayer* layer : layers) {
            for (double v : layer->params()) {
                phi_.push_back(v / scale_[phi_.size() % 8]);
            }
        }
    }

    std::span<double> phi() { return phi_; }

    std::vector<double> scaled_grad(const std::vector<HomographyParams>& d_theta_concat) const {
        std::vector<double> g;
        g.reserve(phi_.size());
        for (const auto& row : d_theta_concat)
            for (std::size_t i = 0; i < 8; ++i) g.push_back(row[i] * scale_[i]);
        return g;
    }

    void write_back(const std::vector<PTLayer*>& layers) const {
        std::size_t offset = 0;
        for (PTLayer* layer : layers) {
            std::vector<double> theta(layer->tm_count() * 8);
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = phi_[offset + i] * scale_[i % 8];
            layer->set_params(theta);
            offset += theta.size();
        }
    }

private:
    std::array<double, 8> scale_;
    std::vector<double> phi_;
};

}  // namespace

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
    check_lengths(params.size(), grads.size());
    if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: learning rate must be positive");
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

AdamState make_adam(std::size_t n, double lr, double beta1, double beta2, double eps) {
    if (!(lr > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("adam: betas must lie in [0, 1)");
    }
    if (!(eps > 0.0)) throw std::invalid_argument("adam: eps must be positive");
    return AdamState{0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), lr, beta1, beta2, eps};
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    check_lengths(params.size(), grads.size());
    if (state.m1.empty() && state.m2.empty()) {
        state.m1.assign(params.size(), 0.0);
        state.m2.assign(params.size(), 0.0);
    }
    check_lengths(params.size(), state.m1.size());
    check_lengths(params.size(), state.m2.size());

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m1[i] = state.beta1 * state.m1[i] + (1.0 - state.beta1) * g;
        state.m2[i] = state.beta2 * state.m2[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m1[i] / c1;
        const double v_hat = state.m2[i] / c2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

ImageTensor RectifierModel::apply(const ImageTensor& input) const {
    ImageTensor x = input;
    for (const auto& layer : layers) x = layer.forward(x).output;
    return x;
}

Homography RectifierModel::composite() const {
    Homography h = Homography::identity();
    for (const auto& layer : layers) h = compose(h, layer.tm(0));
    return h;
}

double corner_error(const Homography& sampling_map, std::size_t width, std::size_t height) {
    const double w = static_cast<double>(width - 1);
    const double h = static_cast<double>(height - 1);
    const Point2 corners[4] = {{0, 0}, {w, 0}, {w, h}, {0, h}};
    double worst = 0.0;
    for (const auto& c : corners) {
        try {
            const Point2 p = sampling_map.apply(c);
            worst = std::max(worst, std::hypot(p.x - c.x, p.y - c.y));
        } catch (const HorizonError&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return worst;
}

std::pair<RectifierModel, TrainReport> train_rectifier(std::span<const ImagePair> pairs, const TrainConfig& config) {
    if (config.epochs == 0) throw std::invalid_argument("train_rectifier: epochs must be >= 1");
    if (config.layer_count == 0) throw std::invalid_argument("train_rectifier: layer_count must be >= 1");
    const ImageTensor inputs = stack_batch(pairs, true);
    const ImageTensor targets = stack_batch(pairs, false);

    RectifierModel model;
    for (std::size_t l = 0; l < config.layer_count; ++l) {
        LayerInit init = config.exact_identity_init ? LayerInit{ExactIdentity{}} : LayerInit{IdentityJitter{config.seed + l}};
        model.layers.push_back(make_layer(1, config.kernel, init, config.reduction));
    }
    std::vector<PTLayer*> views;
    for (auto& layer : model.layers) views.push_back(&layer);

    ScaledParams params(views, parameter_scale(inputs.shape(), config.precondition));
    AdamState adam = make_adam(params.phi().size(), config.lr);

    TrainReport report;
    report.loss_trace.reserve(config.epochs);
    std::vector<ForwardCache> caches(model.layers.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        ImageTensor x = inputs;
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            ForwardResult fwd = model.layers[l].forward(x);
            x = std::move(fwd.output);
            caches[l] = std::move(fwd.cache);
        }
        MseResult loss = mse(x, targets);
        report.loss_trace.push_back(loss.loss);

        std::vector<HomographyParams> d_theta(model.layers.size());
        ImageTensor upstream = std::move(loss.grad);
        for (std::size_t l = model.layers.size(); l-- > 0;) {
            BackwardResult back = model.layers[l].backward(caches[l], upstream);
            d_theta[l] = back.d_tms.front();
            upstream = std::move(back.d_input);
        }
        const std::vector<double> g = params.scaled_grad(d_theta);
        adam_step(adam, params.phi(), g);
        params.write_back(views);
    }

    report.final_loss = mse(model.apply(inputs), targets).loss;
    report.composite = model.composite();
    if (config.true_distortion) {
        report.corner_error = corner_error(compose(*config.true_distortion, report.composite), inputs.width(),
                                           inputs.height());
    }
    return {std::move(model), std::move(report)};
}

std::pair<PTLayer, MultiviewReport> train_multiview(std::span<const ImagePair> pairs, const TrainConfig& config,
                                                    std::size_t m_count) {
    if (config.epochs == 0) throw std::invalid_argument("train_multiview: epochs must be >= 1");
    const ImageTensor inputs = stack_batch(pairs, true);
    const ImageTensor targets = tile_channels(stack_batch(pairs, false), m_count);

    LayerInit init = config.exact_identity_init ? LayerInit{ExactIdentity{}} : LayerInit{IdentityJitter{config.seed}};
    PTLayer layer = make_layer(m_count, config.kernel, init, config.reduction);
    std::vector<PTLayer*> views{&layer};
    ScaledParams params(views, parameter_scale(inputs.shape(), config.precondition));
    AdamState adam = make_adam(params.phi().size(), config.lr);

    MultiviewReport report;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        ForwardResult fwd = layer.forward(inputs);
        MseResult loss = mse(fwd.output, targets);
        report.loss_trace.push_back(loss.loss);
        BackwardResult back = layer.backward(fwd.cache, loss.grad);
        adam_step(adam, params.phi(), params.scaled_grad(back.d_tms));
        params.write_back(views);
    }
    report.final_loss = mse(layer.forward(inputs).output, targets).loss;
    return {std::move(layer), std::move(report)};
}

std::string loss_trace_csv(std::span<const double> trace) {
    std::string out = "epoch,mse\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out += std::to_string(i) + "," + format_double(trace[i]) + "\n";
    }
    return out;
}

}  // namespace ptl
