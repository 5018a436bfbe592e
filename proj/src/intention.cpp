#include "subta/intention.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace subta {

namespace {

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix row_softmax(const Matrix& s) {
    Matrix out(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double mx = s.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (s.row(i).array() - mx).exp().matrix();
        out.row(i) = e / e.sum();
    }
    return out;
}

template <std::size_t N>
std::array<double, N> softmax(const Eigen::RowVectorXd& logits) {
    const Matrix p = row_softmax(logits);
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = p(0, static_cast<Eigen::Index>(i));
    }
    return out;
}

Eigen::Matrix<double, 1, 7> pose_row(const Pose& p) {
    const auto a = p.to_array();
    return Eigen::Map<const Eigen::Matrix<double, 1, 7>>(a.data());
}

void expect_shape(const std::string& layer, const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
    if (m.rows() != rows || m.cols() != cols) {
        throw IntentionError(layer + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                             ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

void expect_size(const std::string& layer, const Vector& v, Eigen::Index n) {
    if (v.size() != n) {
        throw IntentionError(layer + ": expected bias of " + std::to_string(n) + ", got " +
                             std::to_string(v.size()));
    }
}

Matrix glorot(std::mt19937_64& rng, int rows, int cols) {
    const double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = u(rng);
        }
    }
    return m;
}

// --- weights file -----------------------------------------------------------

constexpr char kMagic[8] = {'S', 'U', 'B', 'T', 'A', 'W', '1', '\n'};

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) {
        b[i] = static_cast<unsigned char>(v >> (8 * i));
    }
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw IntentionError("weights file truncated");
    }
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

void put_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j))));
        }
    }
}

std::map<std::string, Matrix> read_tensors(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw IntentionError("not a weights file (bad magic)");
    }
    const std::uint32_t count = get_u32(in);
    std::map<std::string, Matrix> out;
    for (std::uint32_t t = 0; t < count; ++t) {
        std::string name(get_u32(in), '\0');
        if (!in.read(name.data(), static_cast<std::streamsize>(name.size()))) {
            throw IntentionError("weights file truncated");
        }
        const std::uint32_t rows = get_u32(in);
        const std::uint32_t cols = get_u32(in);
        if (static_cast<std::uint64_t>(rows) * cols > (1u << 24)) {
            throw IntentionError("tensor '" + name + "' is implausibly large");
        }
        Matrix m(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i) {
            for (std::uint32_t j = 0; j < cols; ++j) {
                m(i, j) = std::bit_cast<float>(get_u32(in));
            }
        }
        out[name] = std::move(m);
    }
    return out;
}

const Matrix& take(const std::map<std::string, Matrix>& t, const std::string& name) {
    auto it = t.find(name);
    if (it == t.end()) {
        throw IntentionError("weights file lacks tensor '" + name + "'");
    }
    return it->second;
}

Vector take_vec(const std::map<std::string, Matrix>& t, const std::string& name) {
    const Matrix& m = take(t, name);
    if (m.rows() != 1) {
        throw IntentionError("tensor '" + name + "' must be a row vector");
    }
    return m.row(0).transpose();
}

}  // namespace

// --- windows -------------------------------------------------------------------

void ObservationWindow::validate() const {
    if (frames.size() != static_cast<std::size_t>(kWindowFrames)) {
        throw IntentionError("window needs " + std::to_string(kWindowFrames) + " frames, got " +
                             std::to_string(frames.size()));
    }
    if (rate_hz != kFrameRateHz) {
        throw IntentionError("window frame rate must be 20 Hz");
    }
    for (const auto& f : frames) {
        if (f.blocks.size() != frames.front().blocks.size()) {
            throw IntentionError("block count changes within the window");
        }
    }
}

bool WindowBuffer::push(const Frame& f) {
    frames_.push_back(f);
    if (frames_.size() > static_cast<std::size_t>(kWindowFrames)) {
        frames_.pop_front();
    }
    ++since_emit_;
    if (frames_.size() < static_cast<std::size_t>(kWindowFrames)) {
        return false;
    }
    if (!primed_ || since_emit_ >= static_cast<std::size_t>(kWindowStride)) {
        primed_ = true;
        since_emit_ = 0;
        return true;
    }
    return false;
}

ObservationWindow WindowBuffer::window() const {
    ObservationWindow w;
    w.frames.assign(frames_.begin(), frames_.end());
    return w;
}

void WindowBuffer::clear() {
    frames_.clear();
    since_emit_ = 0;
    primed_ = false;
}

// --- estimate ------------------------------------------------------------------

std::map<std::string, double> IntentEstimate::task_map() const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < task_probs.size(); ++i) {
        out[task_labels()[i]] = task_probs[i];
    }
    return out;
}

namespace {
Action argmax(const std::array<double, kActionCount>& p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[best]) {
            best = i;
        }
    }
    return static_cast<Action>(best);
}
}  // namespace

Action IntentEstimate::left_best() const { return argmax(left_action); }
Action IntentEstimate::right_best() const { return argmax(right_action); }

// --- weights -------------------------------------------------------------------

ModelWeights ModelWeights::random(std::uint64_t seed, int entities) {
    if (entities < 2) {
        throw IntentionError("model needs at least the two hand entities");
    }
    std::mt19937_64 rng(seed);
    constexpr int d0 = 32, d1 = 32, d2 = 16, dense = 32, dv = 16;
    ModelWeights m;
    m.entities = entities;
    m.enc_w = glorot(rng, kEntityFeatures, d0);
    m.enc_b = Vector::Zero(d0);
    m.attn_q = glorot(rng, d0, d0);
    m.attn_k = glorot(rng, d0, d0);
    m.gnn = {glorot(rng, d0, d1), glorot(rng, d1, d2)};
    m.dense_w = glorot(rng, entities * d2, dense);
    m.dense_b = Vector::Zero(dense);
    m.vel_in_w = glorot(rng, kEntityFeatures, dv);
    m.vel_in_b = Vector::Zero(dv);
    for (int l = 0; l < 3; ++l) {
        m.vel_layers.push_back({glorot(rng, dv, dv), glorot(rng, dv, dv), glorot(rng, dv, dv),
                                glorot(rng, dv, dv), Vector::Zero(dv)});
    }
    m.task_w = glorot(rng, dense, kTaskCount);
    m.task_b = Vector::Zero(kTaskCount);
    m.left_w = glorot(rng, dense + dv, kActionCount);
    m.left_b = Vector::Zero(kActionCount);
    m.right_w = glorot(rng, dense + dv, kActionCount);
    m.right_b = Vector::Zero(kActionCount);
    return m;
}

void ModelWeights::validate() const {
    const Eigen::Index d0 = enc_w.cols();
    expect_shape("encoder", enc_w, kEntityFeatures, d0);
    expect_size("encoder", enc_b, d0);
    expect_shape("attention query", attn_q, d0, d0);
    expect_shape("attention key", attn_k, d0, d0);
    if (gnn.empty()) {
        throw IntentionError("gnn: at least one layer required");
    }
    Eigen::Index d = d0;
    for (std::size_t k = 0; k < gnn.size(); ++k) {
        expect_shape("gnn layer " + std::to_string(k + 1), gnn[k], d, gnn[k].cols());
        d = gnn[k].cols();
    }
    const Eigen::Index dense = dense_w.cols();
    expect_shape("dense", dense_w, entities * d, dense);
    expect_size("dense", dense_b, dense);
    const Eigen::Index dv = vel_in_w.cols();
    expect_shape("velocity input", vel_in_w, kEntityFeatures, dv);
    expect_size("velocity input", vel_in_b, dv);
    if (vel_layers.size() != 3) {
        throw IntentionError("velocity encoder: expected 3 layers, got " + std::to_string(vel_layers.size()));
    }
    for (std::size_t l = 0; l < vel_layers.size(); ++l) {
        const std::string name = "velocity layer " + std::to_string(l + 1);
        expect_shape(name + " query", vel_layers[l].q, dv, dv);
        expect_shape(name + " key", vel_layers[l].k, dv, dv);
        expect_shape(name + " value", vel_layers[l].v, dv, dv);
        expect_shape(name + " feedforward", vel_layers[l].ff, dv, dv);
        expect_size(name + " feedforward", vel_layers[l].ff_b, dv);
    }
    expect_shape("task head", task_w, dense, kTaskCount);
    expect_size("task head", task_b, kTaskCount);
    expect_shape("left action head", left_w, dense + dv, kActionCount);
    expect_size("left action head", left_b, kActionCount);
    expect_shape("right action head", right_w, dense + dv, kActionCount);
    expect_size("right action head", right_b, kActionCount);
}

void ModelWeights::save(const std::string& path) const {
    validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IntentionError("cannot write weights to " + path);
    }
    std::vector<std::pair<std::string, Matrix>> t;
    t.emplace_back("entities", Matrix::Constant(1, 1, entities));
    t.emplace_back("enc_w", enc_w);
    t.emplace_back("enc_b", enc_b.transpose());
    t.emplace_back("attn_q", attn_q);
    t.emplace_back("attn_k", attn_k);
    for (std::size_t k = 0; k < gnn.size(); ++k) {
        t.emplace_back("gnn." + std::to_string(k), gnn[k]);
    }
    t.emplace_back("dense_w", dense_w);
    t.emplace_back("dense_b", dense_b.transpose());
    t.emplace_back("vel_in_w", vel_in_w);
    t.emplace_back("vel_in_b", vel_in_b.transpose());
    for (std::size_t l = 0; l < vel_layers.size(); ++l) {
        const std::string p = "vel." + std::to_string(l) + ".";
        t.emplace_back(p + "q", vel_layers[l].q);
        t.emplace_back(p + "k", vel_layers[l].k);
        t.emplace_back(p + "v", vel_layers[l].v);
        t.emplace_back(p + "ff", vel_layers[l].ff);
        t.emplace_back(p + "ff_b", vel_layers[l].ff_b.transpose());
    }
    t.emplace_back("task_w", task_w);
    t.emplace_back("task_b", task_b.transpose());
    t.emplace_back("left_w", left_w);
    t.emplace_back("left_b", left_b.transpose());
    t.emplace_back("right_w", right_w);
    t.emplace_back("right_b", right_b.transpose());
    out.write(kMagic, 8);
    put_u32(out, static_cast<std::uint32_t>(t.size()));
    for (const auto& [name, m] : t) {
        put_tensor(out, name, m);
    }
}

ModelWeights ModelWeights::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IntentionError("cannot open weights file " + path);
    }
    const auto t = read_tensors(in);
    ModelWeights m;
    m.entities = static_cast<int>(take(t, "entities")(0, 0));
    m.enc_w = take(t, "enc_w");
    m.enc_b = take_vec(t, "enc_b");
    m.attn_q = take(t, "attn_q");
    m.attn_k = take(t, "attn_k");
    for (int k = 0; t.count("gnn." + std::to_string(k)); ++k) {
        m.gnn.push_back(take(t, "gnn." + std::to_string(k)));
    }
    m.dense_w = take(t, "dense_w");
    m.dense_b = take_vec(t, "dense_b");
    m.vel_in_w = take(t, "vel_in_w");
    m.vel_in_b = take_vec(t, "vel_in_b");
    for (int l = 0; t.count("vel." + std::to_string(l) + ".q"); ++l) {
        const std::string p = "vel." + std::to_string(l) + ".";
        m.vel_layers.push_back({take(t, p + "q"), take(t, p + "k"), take(t, p + "v"), take(t, p + "ff"),
                                take_vec(t, p + "ff_b")});
    }
    m.task_w = take(t, "task_w");
    m.task_b = take_vec(t, "task_b");
    m.left_w = take(t, "left_w");
    m.left_b = take_vec(t, "left_b");
    m.right_w = take(t, "right_w");
    m.right_b = take_vec(t, "right_b");
    m.validate();
    return m;
}

// --- forward pass ----------------------------------------------------------------

std::vector<Matrix> entity_features(const ObservationWindow& w) {
    w.validate();
    const std::size_t entities = w.entity_count();
    const auto frames = static_cast<Eigen::Index>(w.frames.size());
    std::vector<Matrix> out(entities, Matrix::Zero(frames, kEntityFeatures));
    auto entity_pose = [&](std::size_t e, Eigen::Index t) -> const Pose& {
        const Frame& f = w.frames[static_cast<std::size_t>(t)];
        return e == 0 ? f.left : e == 1 ? f.right : f.blocks[e - 2];
    };
    for (std::size_t e = 0; e < entities; ++e) {
        for (Eigen::Index t = 0; t < frames; ++t) {
            out[e].block<1, 7>(t, 0) = pose_row(entity_pose(e, t));
            if (t > 0) {
                out[e].block<1, 7>(t, 7) =
                    (pose_row(entity_pose(e, t)) - pose_row(entity_pose(e, t - 1))) * w.rate_hz;
            }
        }
    }
    return out;
}

Matrix positional_pattern(int frames, int dim) {
    Matrix pe(frames, dim);
    for (int t = 0; t < frames; ++t) {
        for (int i = 0; i < dim; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
            pe(t, i) = i % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq);
        }
    }
    return pe;
}

std::vector<Matrix> positional_encode(const std::vector<Matrix>& features) {
    std::vector<Matrix> out;
    out.reserve(features.size());
    for (const auto& f : features) {
        out.push_back(f + positional_pattern(static_cast<int>(f.rows()), static_cast<int>(f.cols())));
    }
    return out;
}

std::vector<Matrix> positional_encode(const ObservationWindow& w) {
    return positional_encode(entity_features(w));
}

Matrix encode_entities(const ObservationWindow& w, const ModelWeights& m) {
    expect_shape("encoder", m.enc_w, kEntityFeatures, m.enc_w.cols());
    expect_size("encoder", m.enc_b, m.enc_w.cols());
    const auto encoded = positional_encode(w);
    Matrix f(static_cast<Eigen::Index>(encoded.size()), m.enc_w.cols());
    for (std::size_t e = 0; e < encoded.size(); ++e) {
        const Matrix h = relu((encoded[e] * m.enc_w).rowwise() + m.enc_b.transpose());
        f.row(static_cast<Eigen::Index>(e)) = h.colwise().mean();
    }
    return f;
}

Matrix attention_weights(const Matrix& f, const ModelWeights& m) {
    expect_shape("attention query", m.attn_q, f.cols(), f.cols());
    expect_shape("attention key", m.attn_k, f.cols(), f.cols());
    const Matrix q = f * m.attn_q;
    const Matrix k = f * m.attn_k;
    return row_softmax(q * k.transpose() / std::sqrt(static_cast<double>(f.cols())));
}

Matrix symmetrize(const Matrix& attn) { return (attn + attn.transpose()) / 2.0; }

Matrix attention_adjacency(const Matrix& f, const ModelWeights& m) {
    return symmetrize(attention_weights(f, m));
}

GnnOutput gnn_forward(const Matrix& a, const Matrix& f0, const ModelWeights& m) {
    if (m.gnn.empty()) {
        throw IntentionError("gnn: at least one layer required");
    }
    expect_shape("adjacency", a, f0.rows(), f0.rows());
    GnnOutput out;
    Matrix f = f0;
    for (std::size_t k = 0; k < m.gnn.size(); ++k) {
        expect_shape("gnn layer " + std::to_string(k + 1), m.gnn[k], f.cols(), m.gnn[k].cols());
        Matrix z = a * f * m.gnn[k];
        f = k + 1 < m.gnn.size() ? relu(z) : z;
        out.layers.push_back(f);
    }
    // Row-major flatten: entity by entity.
    const Matrix ft = f.transpose();
    const Vector flat = Eigen::Map<const Vector>(ft.data(), ft.size());
    expect_shape("dense", m.dense_w, flat.size(), m.dense_w.cols());
    expect_size("dense", m.dense_b, m.dense_w.cols());
    out.g = relu(m.dense_w.transpose() * flat + m.dense_b);
    return out;
}

Matrix hand_velocities(const ObservationWindow& w) {
    w.validate();
    const auto steps = static_cast<Eigen::Index>(w.frames.size()) - 1;
    Matrix v(steps, kEntityFeatures);
    for (Eigen::Index t = 0; t < steps; ++t) {
        const Frame& a = w.frames[static_cast<std::size_t>(t)];
        const Frame& b = w.frames[static_cast<std::size_t>(t + 1)];
        v.block<1, 7>(t, 0) = (pose_row(b.left) - pose_row(a.left)) * w.rate_hz;
        v.block<1, 7>(t, 7) = (pose_row(b.right) - pose_row(a.right)) * w.rate_hz;
    }
    return v;
}

Vector velocity_embed(const ObservationWindow& w, const ModelWeights& m) {
    expect_shape("velocity input", m.vel_in_w, kEntityFeatures, m.vel_in_w.cols());
    const double scale = 1.0 / std::sqrt(static_cast<double>(m.vel_in_w.cols()));
    Matrix x = (hand_velocities(w) * m.vel_in_w).rowwise() + m.vel_in_b.transpose();
    for (const auto& layer : m.vel_layers) {
        const Matrix attn = row_softmax((x * layer.q) * (x * layer.k).transpose() * scale);
        x = x + attn * x * layer.v;
        x = x + relu((x * layer.ff).rowwise() + layer.ff_b.transpose());
    }
    return x.colwise().mean().transpose();
}

IntentEstimate predict(const ObservationWindow& w, const ModelWeights& m) {
    m.validate();
    if (static_cast<int>(w.entity_count()) != m.entities) {
        throw IntentionError("model expects " + std::to_string(m.entities) + " entities, window has " +
                             std::to_string(w.entity_count()));
    }
    const Matrix f0 = encode_entities(w, m);
    const GnnOutput gnn = gnn_forward(attention_adjacency(f0, m), f0, m);
    const Vector vel = velocity_embed(w, m);

    IntentEstimate est;
    const Vector task = m.task_w.transpose() * gnn.g + m.task_b;
    for (int i = 0; i < kTaskCount; ++i) {
        est.task_probs[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-task(i)));
    }
    Vector joint(gnn.g.size() + vel.size());
    joint << gnn.g, vel;
    est.left_action = softmax<kActionCount>((m.left_w.transpose() * joint + m.left_b).transpose());
    est.right_action = softmax<kActionCount>((m.right_w.transpose() * joint + m.right_b).transpose());
    return est;
}

}  // namespace subta
