#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subta/geometry.hpp"
#include "subta/tasks.hpp"

namespace subta {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr int kWindowFrames = 60;
constexpr int kWindowStride = 20;
constexpr double kFrameRateHz = 20.0;
constexpr int kTaskCount = 8;
/// Per entity per frame: pose (7) and its finite difference (7).
constexpr int kEntityFeatures = 14;

class IntentionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Frame {
    Pose left;
    Pose right;
    std::vector<Pose> blocks;
};

struct ObservationWindow {
    std::vector<Frame> frames;
    double rate_hz = kFrameRateHz;

    std::size_t entity_count() const { return frames.empty() ? 0 : frames.front().blocks.size() + 2; }
    /// Throws IntentionError unless the window holds 60 frames at 20 Hz with
    /// a constant block count.
    void validate() const;
};

/// Sliding windows over a frame stream: a window is emitted once 60 frames
/// are buffered and then every 20 frames.
class WindowBuffer {
public:
    /// Returns true when a new window is ready.
    bool push(const Frame& f);
    ObservationWindow window() const;
    void clear();

private:
    std::deque<Frame> frames_;
    std::size_t since_emit_ = 0;
    bool primed_ = false;
};

struct IntentEstimate {
    std::array<double, kTaskCount> task_probs{};  // aligned with task_labels()
    std::array<double, kActionCount> left_action{};
    std::array<double, kActionCount> right_action{};

    std::map<std::string, double> task_map() const;
    Action left_best() const;
    Action right_best() const;
    double prob(Action a, bool left) const { return (left ? left_action : right_action)[static_cast<int>(a)]; }
};

/// Dimensions follow the encoder/GNN chain: 14 -> d0 -> d1 -> ... -> dK,
/// flattened (entities x dK) -> dense -> heads.
struct ModelWeights {
    int entities = 7;

    Matrix enc_w;  // 14 x d0
    Vector enc_b;  // d0

    Matrix attn_q;  // d0 x d0
    Matrix attn_k;  // d0 x d0

    std::vector<Matrix> gnn;  // W^(k): d_k x d_{k+1}

    Matrix dense_w;  // (entities * dK) x 32
    Vector dense_b;

    Matrix vel_in_w;  // 14 x dv
    Vector vel_in_b;
    struct VelLayer {
        Matrix q, k, v;  // dv x dv
        Matrix ff;       // dv x dv
        Vector ff_b;
    };
    std::vector<VelLayer> vel_layers;  // three

    Matrix task_w;  // 32 x 8
    Vector task_b;
    Matrix left_w;  // (32 + dv) x 9
    Vector left_b;
    Matrix right_w;
    Vector right_b;

    /// Seeded Glorot-uniform initialization with the default dimensions
    /// (d0 = 32, GNN 32 -> 32 -> 16, dense 32, velocity 16).
    static ModelWeights random(std::uint64_t seed, int entities = 7);

    /// Throws IntentionError naming the first layer whose shape breaks the chain.
    void validate() const;

    /// Named little-endian float32 tensors; see docs/weights_format.md.
    void save(const std::string& path) const;
    static ModelWeights load(const std::string& path);
};

/// Feature tensor per entity (rows = frames, cols = 14); hands first.
std::vector<Matrix> entity_features(const ObservationWindow& w);

/// Sinusoidal time-index encoding, frames x dim.
Matrix positional_pattern(int frames, int dim);
std::vector<Matrix> positional_encode(const std::vector<Matrix>& features);
std::vector<Matrix> positional_encode(const ObservationWindow& w);

/// One 32-dim embedding per entity: (n+2) x d0.
Matrix encode_entities(const ObservationWindow& w, const ModelWeights& m);

/// Row-softmax of scaled dot-product scores, before symmetrization.
Matrix attention_weights(const Matrix& f, const ModelWeights& m);
Matrix symmetrize(const Matrix& attn);
Matrix attention_adjacency(const Matrix& f, const ModelWeights& m);

struct GnnOutput {
    std::vector<Matrix> layers;  // F^(1) .. F^(K)
    Vector g;
};

GnnOutput gnn_forward(const Matrix& a, const Matrix& f0, const ModelWeights& m);

/// Hand-velocity rows (frames - 1) x 14: [left delta, right delta] per step.
Matrix hand_velocities(const ObservationWindow& w);
Vector velocity_embed(const ObservationWindow& w, const ModelWeights& m);

IntentEstimate predict(const ObservationWindow& w, const ModelWeights& m);

}  // namespace subta
