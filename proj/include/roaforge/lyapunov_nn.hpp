#pragma once

#include <filesystem>
#include <string>

#include "roaforge/certificate.hpp"

namespace roaforge {

enum class Activation : std::uint32_t {
  LeakyRelu = 0,  // y = max(x, 0.1 x)
  Linear = 1,
};

inline constexpr double kLeakySlope = 0.1;
inline constexpr double kDefaultNetEpsilon = 1e-2;

// Feedforward phi(x) with v(x) = phi(x)' phi(x). Each layer has no bias and an
// effective weight W = [G'G + eps I ; H], whose top block is positive
// definite, so W has a trivial nullspace and v is positive definite.
class LyapunovNet {
 public:
  struct Layer {
    Mat G;  // d_{l-1} x d_{l-1}
    Mat H;  // (d_l - d_{l-1}) x d_{l-1}
  };

  struct Gradient {
    double value = 0.0;
    Vec params;  // d v / d theta, same layout as parameters()
    Vec state;   // d v / d x
  };

  LyapunovNet() = default;
  LyapunovNet(std::vector<int> layer_dims, double epsilon, Activation activation = Activation::LeakyRelu);

  const std::vector<int>& layer_dims() const { return dims_; }
  double epsilon() const { return epsilon_; }
  Activation activation() const { return activation_; }
  std::size_t num_layers() const { return layers_.size(); }
  Layer& layer(std::size_t l) { return layers_[l]; }
  const Layer& layer(std::size_t l) const { return layers_[l]; }

  Mat weight(std::size_t l) const;

  // Layer by layer: G column-major, then H column-major.
  std::size_t num_parameters() const;
  Vec parameters() const;
  void set_parameters(const Vec& theta);

  Vec phi(const Vec& x) const;
  double value(const Vec& x) const;
  Gradient gradient(const Vec& x) const;

  // Product of per-layer spectral norms: a Lipschitz constant of phi.
  double lipschitz_product() const;

  // Binary layout (little-endian): "RFLN", u32 version = 1, u32 activation,
  // u32 layer count L+1, L+1 x u32 dims, f64 epsilon, u64 parameter count,
  // then the parameters() vector as f64.
  std::string to_bytes() const;
  static LyapunovNet from_bytes(const std::string& bytes);
  void save(const std::filesystem::path& path) const;
  static LyapunovNet load(const std::filesystem::path& path);

  bool operator==(const LyapunovNet& other) const;

 private:
  std::vector<int> dims_;
  double epsilon_ = kDefaultNetEpsilon;
  Activation activation_ = Activation::LeakyRelu;
  std::vector<Layer> layers_;
};

// Uniform [-1/sqrt(d_{l-1}), 1/sqrt(d_{l-1})] entries from the seeded generator.
LyapunovNet net_init(const std::vector<int>& layer_dims, double epsilon, std::uint64_t seed,
                     Activation activation = Activation::LeakyRelu);

inline double net_eval(const LyapunovNet& net, const Vec& x) { return net.value(x); }
inline LyapunovNet::Gradient net_gradient(const LyapunovNet& net, const Vec& x) { return net.gradient(x); }

// Slope bound for dv = v o step - v over |y - c| <= r, with L_phi the layer
// norm product and Ls the step Lipschitz constant:
//   2 L_phi (|phi(c)| + L_phi r) + 2 Ls L_phi (|phi(step c)| + L_phi Ls r).
double nn_local_lipschitz(const LyapunovNet& net, const StepMap& step, const Vec& center, double radius);

class NeuralCandidate final : public LyapunovCandidate {
 public:
  NeuralCandidate(LyapunovNet net, StepMap step);

  double value(const Vec& x) const override { return net_.value(x); }
  double local_lipschitz(const Vec& center, double radius) const override;

  const LyapunovNet& net() const { return net_; }

 private:
  LyapunovNet net_;
  StepMap step_;
  double lphi_ = 0.0;
};

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 50;
  int batch_size = 256;
  std::uint64_t seed = 0;
  double level_multiplier = 1.5;

  void validate() const;
};

struct TrainResult {
  LyapunovNet net;                   // best-scoring net across the history
  std::vector<std::size_t> history;  // [0] untrained, [e] after epoch e
  int best_epoch = 0;
  RoaEstimate best_estimate;
};

// Grows the certified level set: each epoch certifies, takes the target set
// {v < level_multiplier * c}, and runs one shuffled SGD pass over it on the
// hinge loss max(0, v(step x) - v(x) + L(x) mu). L(x) is frozen at the
// epoch's starting weights.
TrainResult train(const LyapunovNet& init, const StepMap& step, const StateGrid& grid,
                  const TrainConfig& cfg, const CertifyOptions& options = {});

}  // namespace roaforge
