#include "flexenc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "flexenc/errors.hpp"

namespace flexenc {

namespace {

// z = x * W^T + b with W stored row-major (out x in).
void affine(const DenseMatrix& x, const std::vector<float>& w, const std::vector<float>& b,
            int out, DenseMatrix& z) {
    const std::size_t in = x.cols;
    z = DenseMatrix(x.rows, static_cast<std::size_t>(out));
    for (std::size_t s = 0; s < x.rows; ++s) {
        const double* xr = x.row(s);
        double* zr = z.row(s);
        for (int o = 0; o < out; ++o) {
            const float* wr = w.data() + static_cast<std::size_t>(o) * in;
            double acc = static_cast<double>(b[o]);
            for (std::size_t k = 0; k < in; ++k) acc += xr[k] * static_cast<double>(wr[k]);
            zr[o] = acc;
        }
    }
}

// z = x * W_enc + b, i.e. the tied layer whose weight is W_enc^T.
// W_enc is row-major (in x out) here.
void affine_tied(const DenseMatrix& x, const std::vector<float>& w_enc,
                 const std::vector<float>& b, int out, DenseMatrix& z) {
    const std::size_t in = x.cols;
    z = DenseMatrix(x.rows, static_cast<std::size_t>(out));
    for (std::size_t s = 0; s < x.rows; ++s) {
        const double* xr = x.row(s);
        double* zr = z.row(s);
        for (int o = 0; o < out; ++o) zr[o] = static_cast<double>(b[o]);
        for (std::size_t k = 0; k < in; ++k) {
            const double xv = xr[k];
            if (xv == 0.0) continue;
            const float* wr = w_enc.data() + k * static_cast<std::size_t>(out);
            for (int o = 0; o < out; ++o) zr[o] += xv * static_cast<double>(wr[o]);
        }
    }
}

void apply_activation(std::optional<ActivationKind> act, const DenseMatrix& z, DenseMatrix& a) {
    a = z;
    if (!act) return;
    for (double& v : a.data) v = activate(*act, v);
}

const LayerParams& tied_source(const FlexModel& model, const LayerParams& lp) {
    return model.encoder[static_cast<std::size_t>(lp.tied_to)];
}

}  // namespace

std::vector<std::size_t> FlexModel::param_sizes() const {
    std::vector<std::size_t> sizes;
    for (const LayerParams& l : encoder) sizes.push_back(l.weight.size());
    for (const LayerParams& l : encoder) sizes.push_back(l.bias.size());
    for (const LayerParams& l : decoder) sizes.push_back(l.bias.size());
    for (const LayerParams& l : decoder) {
        if (l.tied_to < 0) sizes.push_back(l.weight.size());
    }
    return sizes;
}

std::vector<ParamUpdate<float>> FlexModel::param_refs(
    const std::vector<std::vector<double>>& grads) {
    std::vector<ParamUpdate<float>> refs;
    std::size_t slot = 0;
    auto push = [&](std::vector<float>& v, bool decay) {
        if (slot >= grads.size()) throw ShapeError("param_refs: gradient slot count mismatch");
        refs.push_back({std::span<float>(v), std::span<const double>(grads[slot]), decay});
        ++slot;
    };
    for (LayerParams& l : encoder) push(l.weight, true);
    for (LayerParams& l : encoder) push(l.bias, false);
    for (LayerParams& l : decoder) push(l.bias, false);
    for (LayerParams& l : decoder) {
        if (l.tied_to < 0) push(l.weight, true);
    }
    if (slot != grads.size()) throw ShapeError("param_refs: gradient slot count mismatch");
    return refs;
}

FlexModel build_model_arch(const ModelConfig& config, int n) {
    config.validate();
    if (n < 1) throw ConfigError("build_model: input dimension must be >= 1");

    FlexModel model;
    model.n = n;
    model.drop_p = config.drop_prob;
    model.noise_p = config.noise_prob;

    std::vector<int> dims;
    dims.push_back(n);
    for (int h : config.hidden_layers) dims.push_back(h);

    const int k = static_cast<int>(config.hidden_layers.size());
    for (int i = 0; i < k; ++i) {
        LayerParams l;
        l.in = dims[i];
        l.out = dims[i + 1];
        l.weight.assign(static_cast<std::size_t>(l.in) * l.out, 0.0f);
        l.bias.assign(static_cast<std::size_t>(l.out), 0.0f);
        l.act = config.activation;
        model.encoder.push_back(std::move(l));
    }
    // Mirror: h_k -> ... -> h_1 -> n, linear output.
    for (int i = k; i >= 1; --i) {
        LayerParams l;
        l.in = dims[i];
        l.out = dims[i - 1];
        l.bias.assign(static_cast<std::size_t>(l.out), 0.0f);
        l.act = (i == 1) ? std::nullopt : std::optional<ActivationKind>(config.activation);
        if (config.decoder_constraint) {
            l.tied_to = i - 1;  // mirror encoder layer
        } else {
            l.weight.assign(static_cast<std::size_t>(l.in) * l.out, 0.0f);
        }
        model.decoder.push_back(std::move(l));
    }
    return model;
}

FlexModel build_model(const ModelConfig& config, int n) {
    FlexModel model = build_model_arch(config, n);
    RngStream rng = RngStream(static_cast<std::uint64_t>(config.seed)).child("init");
    auto init_layer = [&](LayerParams& l) {
        const double bound = std::sqrt(6.0 / (l.in + l.out));
        for (float& w : l.weight) w = static_cast<float>(rng.uniform(-bound, bound));
    };
    for (LayerParams& l : model.encoder) init_layer(l);
    for (LayerParams& l : model.decoder) {
        if (l.tied_to < 0) init_layer(l);
    }
    return model;
}

ForwardTrace forward(const FlexModel& model, const RowBatch& batch, ForwardMode mode,
                     RngStream& rng) {
    if (batch.x.cols != static_cast<std::size_t>(model.n)) {
        throw ShapeError("forward: batch width " + std::to_string(batch.x.cols) +
                         " does not match model input dimension " + std::to_string(model.n));
    }
    ForwardTrace trace;
    trace.input = batch.x;
    if (mode == ForwardMode::Train && model.noise_p > 0.0) {
        for (double& v : trace.input.data) {
            if (rng.uniform() < model.noise_p) v = 0.0;
        }
    }

    const int nl = model.layer_count();
    trace.pre.resize(nl);
    trace.post.resize(nl);
    const DenseMatrix* cur = &trace.input;
    for (int i = 0; i < nl; ++i) {
        const LayerParams& l = model.layer(i);
        if (l.tied_to >= 0) {
            affine_tied(*cur, tied_source(model, l).weight, l.bias, l.out, trace.pre[i]);
        } else {
            affine(*cur, l.weight, l.bias, l.out, trace.pre[i]);
        }
        apply_activation(l.act, trace.pre[i], trace.post[i]);
        if (i == model.bottleneck() && mode == ForwardMode::Train && model.drop_p > 0.0) {
            trace.drop_mask = dropout_mask(rng, model.drop_p, trace.post[i].size());
            for (std::size_t j = 0; j < trace.post[i].size(); ++j) {
                trace.post[i].data[j] *= trace.drop_mask[j];
            }
        }
        cur = &trace.post[i];
    }
    return trace;
}

LossReport masked_mse(const DenseMatrix& y, const DenseMatrix& q, const DenseMatrix& mask) {
    if (!y.same_shape(q) || !y.same_shape(mask)) {
        throw ShapeError("masked_mse: y " + std::to_string(y.rows) + "x" + std::to_string(y.cols) +
                         ", q " + std::to_string(q.rows) + "x" + std::to_string(q.cols) +
                         ", mask " + std::to_string(mask.rows) + "x" + std::to_string(mask.cols));
    }
    double sq = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double m = mask.data[i];
        const double d = y.data[i] - q.data[i];
        sq += m * d * d;
        count += m;
    }
    if (count <= 0.0) throw EmptyMaskError("masked_mse: mask sums to zero");
    LossReport report;
    report.mmse = sq / count;
    report.observed_count = count;
    report.rmse = std::sqrt(report.mmse);
    return report;
}

Gradients backward(const FlexModel& model, const ForwardTrace& trace, const RowBatch& batch) {
    const int nl = model.layer_count();
    const int enc_n = static_cast<int>(model.encoder.size());
    const std::size_t batch_rows = batch.y.rows;

    double count = 0.0;
    for (double m : batch.mask.data) count += m;
    if (count <= 0.0) throw EmptyMaskError("backward: mask sums to zero");

    // dL/dq of the masked MSE.
    const DenseMatrix& q = trace.output();
    DenseMatrix delta(batch_rows, q.cols);
    const double scale = 2.0 / count;
    for (std::size_t i = 0; i < q.size(); ++i) {
        delta.data[i] = scale * batch.mask.data[i] * (q.data[i] - batch.y.data[i]);
    }

    // Slot layout must match FlexModel::param_refs.
    std::vector<std::vector<double>*> w_slot(nl, nullptr);
    std::vector<std::vector<double>*> b_slot(nl, nullptr);
    Gradients grads;
    {
        std::vector<std::size_t> sizes;
        for (const LayerParams& l : model.encoder) sizes.push_back(l.weight.size());
        for (const LayerParams& l : model.encoder) sizes.push_back(l.bias.size());
        for (const LayerParams& l : model.decoder) sizes.push_back(l.bias.size());
        for (const LayerParams& l : model.decoder) {
            if (l.tied_to < 0) sizes.push_back(l.weight.size());
        }
        grads.reserve(sizes.size());
        for (std::size_t n : sizes) grads.emplace_back(n, 0.0);
        std::size_t slot = 0;
        for (int i = 0; i < enc_n; ++i) w_slot[i] = &grads[slot++];
        for (int i = 0; i < enc_n; ++i) b_slot[i] = &grads[slot++];
        for (int i = enc_n; i < nl; ++i) b_slot[i] = &grads[slot++];
        for (int i = enc_n; i < nl; ++i) {
            if (model.layer(i).tied_to < 0) w_slot[i] = &grads[slot++];
        }
    }

    DenseMatrix d_post = std::move(delta);  // dL/d(layer output), walking backwards
    for (int i = nl - 1; i >= 0; --i) {
        const LayerParams& l = model.layer(i);
        const DenseMatrix& input = (i == 0) ? trace.input : trace.post[i - 1];

        // Through bottleneck dropout, then the activation.
        if (i == model.bottleneck() && !trace.drop_mask.empty()) {
            for (std::size_t j = 0; j < d_post.size(); ++j) d_post.data[j] *= trace.drop_mask[j];
        }
        DenseMatrix d_pre = std::move(d_post);
        if (l.act) {
            const DenseMatrix& z = trace.pre[i];
            for (std::size_t j = 0; j < d_pre.size(); ++j) {
                d_pre.data[j] *= activate_grad(*l.act, z.data[j]);
            }
        }

        // Bias gradient: column sums.
        {
            std::vector<double>& db = *b_slot[i];
            for (std::size_t s = 0; s < batch_rows; ++s) {
                const double* dr = d_pre.row(s);
                for (int o = 0; o < l.out; ++o) db[o] += dr[o];
            }
        }

        // Weight gradient.
        if (l.tied_to >= 0) {
            // Accumulate X^T * dZ into the encoder weight gradient (in x out
            // row-major matches the encoder's out x in storage transposed).
            std::vector<double>& dw = *w_slot[l.tied_to];
            for (std::size_t s = 0; s < batch_rows; ++s) {
                const double* xr = input.row(s);
                const double* dr = d_pre.row(s);
                for (int kk = 0; kk < l.in; ++kk) {
                    const double xv = xr[kk];
                    if (xv == 0.0) continue;
                    double* dwr = dw.data() + static_cast<std::size_t>(kk) * l.out;
                    for (int o = 0; o < l.out; ++o) dwr[o] += xv * dr[o];
                }
            }
        } else {
            std::vector<double>& dw = *w_slot[i];
            for (std::size_t s = 0; s < batch_rows; ++s) {
                const double* xr = input.row(s);
                const double* dr = d_pre.row(s);
                for (int o = 0; o < l.out; ++o) {
                    const double dv = dr[o];
                    if (dv == 0.0) continue;
                    double* dwr = dw.data() + static_cast<std::size_t>(o) * l.in;
                    for (int kk = 0; kk < l.in; ++kk) dwr[kk] += dv * xr[kk];
                }
            }
        }

        if (i == 0) break;

        // dL/d(input of layer i).
        DenseMatrix d_in(batch_rows, static_cast<std::size_t>(l.in));
        if (l.tied_to >= 0) {
            const std::vector<float>& w_enc = tied_source(model, l).weight;
            // effective W = W_enc^T: d_in = dZ * W_enc^T
            for (std::size_t s = 0; s < batch_rows; ++s) {
                const double* dr = d_pre.row(s);
                double* di = d_in.row(s);
                for (int kk = 0; kk < l.in; ++kk) {
                    const float* wr = w_enc.data() + static_cast<std::size_t>(kk) * l.out;
                    double acc = 0.0;
                    for (int o = 0; o < l.out; ++o) acc += dr[o] * static_cast<double>(wr[o]);
                    di[kk] = acc;
                }
            }
        } else {
            for (std::size_t s = 0; s < batch_rows; ++s) {
                const double* dr = d_pre.row(s);
                double* di = d_in.row(s);
                for (int o = 0; o < l.out; ++o) {
                    const double dv = dr[o];
                    if (dv == 0.0) continue;
                    const float* wr = l.weight.data() + static_cast<std::size_t>(o) * l.in;
                    for (int kk = 0; kk < l.in; ++kk) di[kk] += dv * static_cast<double>(wr[kk]);
                }
            }
        }
        d_post = std::move(d_in);
    }
    return grads;
}

DenseMatrix make_refeed_target(const DenseMatrix& q, bool rounding) {
    DenseMatrix target = q;
    if (rounding) {
        for (double& v : target.data) v = round_to_grid(v);
    }
    return target;
}

std::optional<LossReport> dense_refeed(FlexModel& model, const ForwardTrace& trace, int k,
                                       bool rounding, OptimState& opt, double lr,
                                       double weight_decay, RngStream& rng) {
    std::optional<LossReport> last;
    if (k <= 0) return last;
    DenseMatrix q = trace.output();
    for (int pass = 0; pass < k; ++pass) {
        RowBatch refeed;
        refeed.y = make_refeed_target(q, rounding);
        refeed.x = refeed.y;
        refeed.mask = DenseMatrix(refeed.y.rows, refeed.y.cols);
        refeed.mask.fill(1.0);
        ForwardTrace t = forward(model, refeed, ForwardMode::Train, rng);
        last = masked_mse(refeed.y, t.output(), refeed.mask);
        Gradients grads = backward(model, t, refeed);
        opt.step(model.param_refs(grads), lr, weight_decay);
        q = t.output();
    }
    return last;
}

double round_to_grid(double v) {
    double snapped = std::round(v * 2.0) / 2.0;
    if (snapped < 1.0) return 1.0;
    if (snapped > 5.0) return 5.0;
    return snapped;
}

double grad_check(FlexModel& model, const RowBatch& batch, double eps) {
    RngStream unused(0);
    ForwardTrace trace = forward(model, batch, ForwardMode::Eval, unused);
    Gradients analytic = backward(model, trace, batch);

    auto loss_at = [&]() {
        ForwardTrace t = forward(model, batch, ForwardMode::Eval, unused);
        return masked_mse(batch.y, t.output(), batch.mask).mmse;
    };

    std::vector<std::vector<float>*> slots;
    for (LayerParams& l : model.encoder) slots.push_back(&l.weight);
    for (LayerParams& l : model.encoder) slots.push_back(&l.bias);
    for (LayerParams& l : model.decoder) slots.push_back(&l.bias);
    for (LayerParams& l : model.decoder) {
        if (l.tied_to < 0) slots.push_back(&l.weight);
    }

    double max_rel = 0.0;
    for (std::size_t s = 0; s < slots.size(); ++s) {
        std::vector<float>& params = *slots[s];
        for (std::size_t i = 0; i < params.size(); ++i) {
            const float orig = params[i];
            const float plus = static_cast<float>(static_cast<double>(orig) + eps);
            const float minus = static_cast<float>(static_cast<double>(orig) - eps);
            params[i] = plus;
            const double lp = loss_at();
            params[i] = minus;
            const double lm = loss_at();
            params[i] = orig;
            // Divide by the perturbation actually realized in storage.
            const double realized = static_cast<double>(plus) - static_cast<double>(minus);
            if (realized == 0.0) return std::numeric_limits<double>::infinity();
            const double cd = (lp - lm) / realized;
            const double g = analytic[s][i];
            const double rel = std::abs(g - cd) / std::max({std::abs(g), std::abs(cd), 1e-8});
            if (rel > max_rel) max_rel = rel;
        }
    }
    return max_rel;
}

}  // namespace flexenc
