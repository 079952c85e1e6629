#include "roaforge/lyapunov_nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace roaforge {

namespace {

double activate(double a, Activation act) {
  if (act == Activation::Linear) return a;
  return a > 0.0 ? a : kLeakySlope * a;
}

// One-sided derivative at 0 (slope of the positive branch).
double activate_slope(double a, Activation act) {
  if (act == Activation::Linear) return 1.0;
  return a >= 0.0 ? 1.0 : kLeakySlope;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ConfigError("network file truncated");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

LyapunovNet::LyapunovNet(std::vector<int> layer_dims, double epsilon, Activation activation)
    : dims_(std::move(layer_dims)), epsilon_(epsilon), activation_(activation) {
  if (dims_.size() < 2) throw ConfigError("network needs an input and at least one layer");
  if (!(epsilon_ > 0.0)) throw ConfigError("network epsilon must be > 0");
  for (std::size_t l = 1; l < dims_.size(); ++l) {
    if (dims_[l - 1] < 1) throw ConfigError("layer widths must be >= 1");
    if (dims_[l] < dims_[l - 1]) throw ConfigError("layer widths must not shrink");
    layers_.push_back({Mat::Zero(dims_[l - 1], dims_[l - 1]), Mat::Zero(dims_[l] - dims_[l - 1], dims_[l - 1])});
  }
}

Mat LyapunovNet::weight(std::size_t l) const {
  const Layer& layer = layers_.at(l);
  const Eigen::Index in = layer.G.rows();
  Mat W(in + layer.H.rows(), in);
  W.topRows(in) = layer.G.transpose() * layer.G + epsilon_ * Mat::Identity(in, in);
  W.bottomRows(layer.H.rows()) = layer.H;
  return W;
}

std::size_t LyapunovNet::num_parameters() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.G.size() + layer.H.size();
  return count;
}

Vec LyapunovNet::parameters() const {
  Vec theta(num_parameters());
  Eigen::Index pos = 0;
  for (const auto& layer : layers_) {
    theta.segment(pos, layer.G.size()) = Eigen::Map<const Vec>(layer.G.data(), layer.G.size());
    pos += layer.G.size();
    theta.segment(pos, layer.H.size()) = Eigen::Map<const Vec>(layer.H.data(), layer.H.size());
    pos += layer.H.size();
  }
  return theta;
}

void LyapunovNet::set_parameters(const Vec& theta) {
  if (static_cast<std::size_t>(theta.size()) != num_parameters())
    throw DimensionError("parameter vector has the wrong length");
  Eigen::Index pos = 0;
  for (auto& layer : layers_) {
    Eigen::Map<Vec>(layer.G.data(), layer.G.size()) = theta.segment(pos, layer.G.size());
    pos += layer.G.size();
    Eigen::Map<Vec>(layer.H.data(), layer.H.size()) = theta.segment(pos, layer.H.size());
    pos += layer.H.size();
  }
}

Vec LyapunovNet::phi(const Vec& x) const {
  if (x.size() != dims_.front()) throw DimensionError("network input dimension mismatch");
  Vec z = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    z = weight(l) * z;
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = activate(z(i), activation_);
  }
  return z;
}

double LyapunovNet::value(const Vec& x) const { return phi(x).squaredNorm(); }

LyapunovNet::Gradient LyapunovNet::gradient(const Vec& x) const {
  if (x.size() != dims_.front()) throw DimensionError("network input dimension mismatch");
  const std::size_t L = layers_.size();
  std::vector<Mat> W(L);
  std::vector<Vec> inputs(L);  // z_{l-1}
  std::vector<Vec> pre(L);     // a_l
  Vec z = x;
  for (std::size_t l = 0; l < L; ++l) {
    W[l] = weight(l);
    inputs[l] = z;
    pre[l] = W[l] * z;
    z = pre[l];
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = activate(z(i), activation_);
  }

  Gradient g;
  g.value = z.squaredNorm();
  g.params.resize(num_parameters());
  std::vector<Vec> layer_grads(L);

  Vec upstream = 2.0 * z;  // dv/dz_L
  for (std::size_t li = L; li-- > 0;) {
    Vec delta = upstream;
    for (Eigen::Index i = 0; i < delta.size(); ++i) delta(i) *= activate_slope(pre[li](i), activation_);
    const Mat dW = delta * inputs[li].transpose();
    const Layer& layer = layers_[li];
    const Eigen::Index in = layer.G.rows();
    const Mat T = dW.topRows(in);
    const Mat dG = layer.G * (T + T.transpose());
    const Mat dH = dW.bottomRows(layer.H.rows());
    Vec lg(dG.size() + dH.size());
    lg.head(dG.size()) = Eigen::Map<const Vec>(dG.data(), dG.size());
    lg.tail(dH.size()) = Eigen::Map<const Vec>(dH.data(), dH.size());
    layer_grads[li] = std::move(lg);
    upstream = W[li].transpose() * delta;
  }
  g.state = upstream;
  Eigen::Index pos = 0;
  for (const auto& lg : layer_grads) {
    g.params.segment(pos, lg.size()) = lg;
    pos += lg.size();
  }
  return g;
}

double LyapunovNet::lipschitz_product() const {
  double p = 1.0;
  for (std::size_t l = 0; l < layers_.size(); ++l) p *= spectral_norm(weight(l));
  return p;
}

std::string LyapunovNet::to_bytes() const {
  std::string out = "RFLN";
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(activation_));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dims_.size()));
  for (int d : dims_) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  put<double>(out, epsilon_);
  const Vec theta = parameters();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(theta.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) put<double>(out, theta(i));
  return out;
}

LyapunovNet LyapunovNet::from_bytes(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "RFLN") != 0) throw ConfigError("not a network file");
  std::size_t pos = 4;
  if (take<std::uint32_t>(bytes, pos) != 1) throw ConfigError("unsupported network file version");
  const auto act = take<std::uint32_t>(bytes, pos);
  if (act > 1) throw ConfigError("unknown activation in network file");
  const auto count = take<std::uint32_t>(bytes, pos);
  if (count < 2 || count > 1024) throw ConfigError("bad layer count in network file");
  std::vector<int> dims(count);
  for (auto& d : dims) d = static_cast<int>(take<std::uint32_t>(bytes, pos));
  const double eps = take<double>(bytes, pos);
  LyapunovNet net(dims, eps, static_cast<Activation>(act));
  const auto nparams = take<std::uint64_t>(bytes, pos);
  if (nparams != net.num_parameters()) throw ConfigError("parameter count does not match layer dims");
  Vec theta(static_cast<Eigen::Index>(nparams));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = take<double>(bytes, pos);
  if (pos != bytes.size()) throw ConfigError("trailing bytes in network file");
  net.set_parameters(theta);
  return net;
}

void LyapunovNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::string bytes = to_bytes();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

LyapunovNet LyapunovNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_bytes(ss.str());
}

bool LyapunovNet::operator==(const LyapunovNet& other) const {
  return dims_ == other.dims_ && epsilon_ == other.epsilon_ && activation_ == other.activation_ &&
         parameters() == other.parameters();
}

LyapunovNet net_init(const std::vector<int>& layer_dims, double epsilon, std::uint64_t seed,
                     Activation activation) {
  LyapunovNet net(layer_dims, epsilon, activation);
  Rng rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto& layer = net.layer(l);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer_dims[l]));
    for (Eigen::Index i = 0; i < layer.G.size(); ++i) layer.G.data()[i] = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < layer.H.size(); ++i) layer.H.data()[i] = rng.uniform(-bound, bound);
  }
  return net;
}

double nn_local_lipschitz(const LyapunovNet& net, const StepMap& step, const Vec& center, double radius) {
  const double lphi = net.lipschitz_product();
  const double Ls = step.lipschitz;
  const double own = 2.0 * lphi * (net.phi(center).norm() + lphi * radius);
  const double image = 2.0 * Ls * lphi * (net.phi(step(center)).norm() + lphi * Ls * radius);
  return own + image;
}

NeuralCandidate::NeuralCandidate(LyapunovNet net, StepMap step)
    : net_(std::move(net)), step_(std::move(step)), lphi_(net_.lipschitz_product()) {}

double NeuralCandidate::local_lipschitz(const Vec& center, double radius) const {
  // |phi(x)| = sqrt(v(x)).
  const double Ls = step_.lipschitz;
  const double own = 2.0 * lphi_ * (std::sqrt(net_.value(center)) + lphi_ * radius);
  const double image = 2.0 * Ls * lphi_ * (std::sqrt(net_.value(step_(center))) + lphi_ * Ls * radius);
  return own + image;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(level_multiplier > 1.0)) throw ConfigError("level_multiplier must be > 1");
}

TrainResult train(const LyapunovNet& init, const StepMap& step, const StateGrid& grid,
                  const TrainConfig& cfg, const CertifyOptions& options) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double mu = grid.mu();

  LyapunovNet net = init;
  RoaEstimate est = certify_roa(NeuralCandidate(net, step), step, grid, options);

  TrainResult result;
  result.net = net;
  result.best_estimate = est;
  result.history.push_back(est.size_cells);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const NeuralCandidate snapshot(net, step);
    const double level = cfg.level_multiplier * est.threshold_c;
    std::vector<std::size_t> target;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (snapshot.value(grid.center(i)) < level) target.push_back(i);
    if (target.empty()) target = est.certified_cells;

    for (std::size_t i = target.size(); i > 1; --i) std::swap(target[i - 1], target[rng.below(i)]);

    Vec theta = net.parameters();
    for (std::size_t begin = 0; begin < target.size(); begin += cfg.batch_size) {
      const std::size_t count = std::min<std::size_t>(cfg.batch_size, target.size() - begin);
      std::vector<Vec> grads(count);
      parallel_for(count, [&](std::size_t k) {
        const Vec x = grid.center(target[begin + k]);
        const Vec y = step(x);
        const auto gx = net.gradient(x);
        const auto gy = net.gradient(y);
        const double hinge = gy.value - gx.value + snapshot.local_lipschitz(x, mu) * mu;
        grads[k] = hinge > 0.0 ? Vec(gy.params - gx.params) : Vec::Zero(theta.size());
      });
      Vec total = Vec::Zero(theta.size());
      for (const auto& g : grads) total += g;
      theta -= cfg.learning_rate * total / static_cast<double>(count);
      net.set_parameters(theta);
    }

    est = certify_roa(NeuralCandidate(net, step), step, grid, options);
    result.history.push_back(est.size_cells);
    if (est.size_cells > result.best_estimate.size_cells) {
      result.net = net;
      result.best_estimate = est;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace roaforge
