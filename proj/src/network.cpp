#include "ordent/network.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include "ordent/errors.hpp"
#include "ordent/rng.hpp"

namespace ordent {

namespace {

void fill_glorot(Matrix& w, Rng& rng) {
    const double a = std::sqrt(6.0 / (w.cols() + w.rows()));
    for (double& v : w.data()) v = rng.uniform(-a, a);
}

} // namespace

MlpParams init_params(int input_dim, int hidden, int output_dim, std::uint64_t seed, Activation activation) {
    if (input_dim < 1 || hidden < 1 || output_dim < 1)
        throw invalid_input_error("init_params: dimensions must be >= 1");
    MlpParams p;
    p.activation = activation;
    p.w1 = Matrix(hidden, input_dim);
    p.b1.assign(hidden, 0.0);
    p.w2 = Matrix(output_dim, hidden);
    p.b2.assign(output_dim, 0.0);
    Rng rng1(derive_seed(seed, 0));
    Rng rng2(derive_seed(seed, 1));
    fill_glorot(p.w1, rng1);
    fill_glorot(p.w2, rng2);
    return p;
}

ForwardCache forward(const MlpParams& p, const Matrix& inputs) {
    if (inputs.cols() != p.input_dim()) throw invalid_input_error("forward: input width mismatch");
    const int batch = inputs.rows();
    const int hidden = p.hidden_dim();
    const int out = p.output_dim();

    ForwardCache c;
    c.inputs = inputs;
    c.pre_activation = Matrix(batch, hidden);
    c.features = Matrix(batch, hidden);
    c.normalized = Matrix(batch, hidden);
    c.feature_norms.resize(batch);
    c.predictions = Matrix(batch, out);

    for (int r = 0; r < batch; ++r) {
        const double* x = inputs.row(r);
        double* pre = c.pre_activation.row(r);
        double* z = c.features.row(r);
        for (int j = 0; j < hidden; ++j) {
            const double* w = p.w1.row(j);
            double s = p.b1[j];
            for (int k = 0; k < p.input_dim(); ++k) s += w[k] * x[k];
            pre[j] = s;
            z[j] = p.activation == Activation::relu ? (s > 0.0 ? s : 0.0) : std::tanh(s);
        }
        double norm2 = 0.0;
        for (int j = 0; j < hidden; ++j) norm2 += z[j] * z[j];
        const double norm = std::max(std::sqrt(norm2), kFeatureNormFloor);
        c.feature_norms[r] = norm;
        double* zn = c.normalized.row(r);
        for (int j = 0; j < hidden; ++j) zn[j] = z[j] / norm;
        double* yhat = c.predictions.row(r);
        for (int o = 0; o < out; ++o) {
            const double* w = p.w2.row(o);
            double s = p.b2[o];
            for (int j = 0; j < hidden; ++j) s += w[j] * z[j];
            yhat[o] = s;
        }
    }
    return c;
}

Gradients backward(const MlpParams& p, const ForwardCache& cache, const UpstreamGrads& upstream) {
    const int batch = cache.inputs.rows();
    const int hidden = p.hidden_dim();
    const int in = p.input_dim();
    const int out = p.output_dim();

    auto check = [&](const Matrix& g, int cols, const char* name) {
        if (g.empty()) return;
        if (g.rows() != batch || g.cols() != cols)
            throw invalid_input_error(std::string("backward: bad shape for ") + name);
        for (double v : g.data())
            if (!std::isfinite(v)) throw numerical_error(std::string("backward: non-finite upstream in ") + name);
    };
    check(upstream.d_predictions, out, "d_predictions");
    check(upstream.d_features, hidden, "d_features");
    check(upstream.d_normalized, hidden, "d_normalized");

    Gradients g;
    g.w1 = Matrix(hidden, in);
    g.b1.assign(hidden, 0.0);
    g.w2 = Matrix(out, hidden);
    g.b2.assign(out, 0.0);

    std::vector<double> dz(hidden);
    for (int r = 0; r < batch; ++r) {
        std::fill(dz.begin(), dz.end(), 0.0);

        if (!upstream.d_predictions.empty()) {
            const double* dy = upstream.d_predictions.row(r);
            const double* z = cache.features.row(r);
            for (int o = 0; o < out; ++o) {
                const double d = dy[o];
                g.b2[o] += d;
                double* gw = g.w2.row(o);
                const double* w = p.w2.row(o);
                for (int j = 0; j < hidden; ++j) {
                    gw[j] += d * z[j];
                    dz[j] += d * w[j];
                }
            }
        }

        if (!upstream.d_features.empty()) {
            const double* df = upstream.d_features.row(r);
            for (int j = 0; j < hidden; ++j) dz[j] += df[j];
        }

        if (!upstream.d_normalized.empty()) {
            // dz += (I - n n^T) dn / norm, with the clamped norm.
            const double* dn = upstream.d_normalized.row(r);
            const double* n = cache.normalized.row(r);
            const double norm = cache.feature_norms[r];
            double dot = 0.0;
            for (int j = 0; j < hidden; ++j) dot += n[j] * dn[j];
            for (int j = 0; j < hidden; ++j) dz[j] += (dn[j] - dot * n[j]) / norm;
        }

        const double* pre = cache.pre_activation.row(r);
        const double* x = cache.inputs.row(r);
        for (int j = 0; j < hidden; ++j) {
            double dpre;
            if (p.activation == Activation::relu) {
                dpre = pre[j] > 0.0 ? dz[j] : 0.0;
            } else {
                const double t = std::tanh(pre[j]);
                dpre = dz[j] * (1.0 - t * t);
            }
            if (dpre == 0.0) continue;
            g.b1[j] += dpre;
            double* gw = g.w1.row(j);
            for (int k = 0; k < in; ++k) gw[k] += dpre * x[k];
        }
    }
    return g;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_block(std::ofstream& out, const std::vector<double>& v) {
    for (double x : v) out << fmt17(x) << '\n';
}

} // namespace

void save_params(const MlpParams& p, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error(data_error::kind::io_failure, "save_params: cannot open " + path.string());
    out << "ordent-mlp,version=1,input=" << p.input_dim() << ",hidden=" << p.hidden_dim()
        << ",output=" << p.output_dim()
        << ",activation=" << (p.activation == Activation::relu ? "relu" : "tanh") << '\n';
    write_block(out, p.w1.data());
    write_block(out, p.b1);
    write_block(out, p.w2.data());
    write_block(out, p.b2);
    if (!out) throw data_error(data_error::kind::io_failure, "save_params: write failed");
}

MlpParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error(data_error::kind::io_failure, "load_params: cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header) || header.rfind("ordent-mlp,", 0) != 0)
        throw data_error(data_error::kind::malformed_file, "load_params: missing checkpoint magic");

    int input = 0, hidden = 0, output = 0;
    Activation act = Activation::relu;
    bool version_ok = false;
    std::size_t pos = header.find(',') + 1;
    while (pos != std::string::npos && pos < header.size()) {
        std::size_t next = header.find(',', pos);
        const std::string field = header.substr(pos, next == std::string::npos ? next : next - pos);
        pos = next == std::string::npos ? std::string::npos : next + 1;
        const auto eq = field.find('=');
        if (eq == std::string::npos)
            throw data_error(data_error::kind::malformed_file, "load_params: bad header field");
        const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "version") {
            if (val != "1") throw data_error(data_error::kind::version_mismatch, "load_params: version " + val);
            version_ok = true;
        } else if (key == "input") input = std::atoi(val.c_str());
        else if (key == "hidden") hidden = std::atoi(val.c_str());
        else if (key == "output") output = std::atoi(val.c_str());
        else if (key == "activation") act = val == "tanh" ? Activation::tanh : Activation::relu;
        else throw data_error(data_error::kind::malformed_file, "load_params: unknown key " + key);
    }
    if (!version_ok || input < 1 || hidden < 1 || output < 1)
        throw data_error(data_error::kind::malformed_file, "load_params: incomplete header");

    MlpParams p;
    p.activation = act;
    p.w1 = Matrix(hidden, input);
    p.b1.resize(hidden);
    p.w2 = Matrix(output, hidden);
    p.b2.resize(output);
    auto read_block = [&](double* dst, std::size_t count) {
        std::string line;
        for (std::size_t i = 0; i < count; ++i) {
            if (!std::getline(in, line))
                throw data_error(data_error::kind::malformed_file, "load_params: truncated checkpoint");
            char* end = nullptr;
            dst[i] = std::strtod(line.c_str(), &end);
            if (end != line.c_str() + line.size())
                throw data_error(data_error::kind::malformed_file, "load_params: unparseable weight");
        }
    };
    read_block(p.w1.data().data(), p.w1.data().size());
    read_block(p.b1.data(), p.b1.size());
    read_block(p.w2.data().data(), p.w2.data().size());
    read_block(p.b2.data(), p.b2.size());
    return p;
}

} // namespace ordent
