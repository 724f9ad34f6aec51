#ifndef SQLTRACK_AUTOGRAD_HPP_
#define SQLTRACK_AUTOGRAD_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sqltrack/tensor.hpp"

namespace sqltrack {

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic across platforms: mt19937_64 is fully specified and the
// [0,1) mapping below avoids std::uniform_real_distribution, whose output
// is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_u64() { return engine_(); }
  double uniform(double lo, double hi);
  std::size_t below(std::size_t n);  // uniform in [0, n)

 private:
  std::mt19937_64 engine_;
};

struct Param {
  std::string name;
  std::string group;  // learning-rate tier, e.g. "embedder" or "model"
  Tensor value;
  Tensor grad;
};

// Named trainable parameters with accumulated gradients. Registration
// order fixes RNG consumption order, so construction is reproducible
// under a fixed seed.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed) : seed_(seed), rng_(seed) {}

  std::size_t add_uniform(const std::string& name, std::vector<std::size_t> shape,
                          double lo = -0.1, double hi = 0.1,
                          const std::string& group = "model");
  std::size_t add_value(const std::string& name, Tensor value,
                        const std::string& group = "model");

  std::size_t count() const { return params_.size(); }
  Param& param(std::size_t id) { return params_[id]; }
  const Param& param(std::size_t id) const { return params_[id]; }
  std::size_t find(const std::string& name) const;  // throws std::out_of_range
  bool contains(const std::string& name) const;

  void zero_grad();
  std::uint64_t seed() const { return seed_; }
  Rng& rng() { return rng_; }

  // Auxiliary byte blobs stored alongside parameters in checkpoints
  // (vocabulary tables and similar).
  void set_blob(const std::string& name, std::string bytes) { blobs_[name] = std::move(bytes); }
  const std::string* blob(const std::string& name) const;

  // Binary checkpoint: named arrays with shapes, the seed record and a
  // format version. Byte-stable for identical contents.
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  std::uint64_t seed_;
  Rng rng_;
  std::vector<Param> params_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::string> blobs_;
};

struct Var {
  std::uint32_t idx = 0xffffffffu;
  bool valid() const { return idx != 0xffffffffu; }
};

// Reverse-mode tape. Values are computed eagerly on op creation; backward
// replays the tape in reverse. Node values live in one flat arena that is
// rewound by reset(), so per-turn graphs reuse storage.
class Graph {
 public:
  explicit Graph(ParamStore* store = nullptr) : store_(store) {}

  void reset();
  std::size_t node_count() const { return nodes_.size(); }

  Var input(std::span<const double> v);
  Var input(const Tensor& t) { return input(t.data()); }
  Var constant(double c) { return input(std::span<const double>(&c, 1)); }
  Var zeros(std::size_t n);
  Var param(std::size_t param_id);
  Var param_row(std::size_t param_id, std::size_t row);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                       // elementwise
  Var scale(Var a, double c);
  Var add_scaled(Var a, Var b, double c);      // a + c * b
  Var matvec(Var w, Var x);
  Var dot(Var a, Var b);                       // -> scalar
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softmax(Var a);
  Var concat(Var a, Var b);
  Var add_many(std::span<const Var> vs);
  Var pack(std::span<const Var> scalars);      // n scalars -> [n]
  Var weighted_sum(Var weights, std::span<const Var> rows);
  Var scale_by(Var s, Var v);                  // scalar * vector
  Var scatter_sum(Var src, std::span<const std::uint32_t> target, std::size_t out_len);
  Var pick(Var v, std::size_t i);              // -> scalar
  Var sum(Var v);                              // -> scalar
  Var log(Var s);
  Var div(Var a, Var b);                       // scalar / scalar
  Var sqrt(Var s);

  std::span<const double> value(Var v) const;
  double scalar(Var v) const { return value(v)[0]; }
  Tensor tensor(Var v) const;

  void backward(Var loss);
  std::span<const double> grad(Var v) const;   // valid after backward

 private:
  enum class Op : std::uint8_t {
    kInput, kParam, kParamRow,
    kAdd, kSub, kMul, kScale, kAddScaled,
    kMatVec, kDot, kTanh, kSigmoid, kSoftmax, kConcat,
    kAddMany, kPack, kWeightedSum, kScaleBy, kScatterSum,
    kPick, kSum, kLog, kDiv, kSqrt,
  };

  struct Node {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t off = 0;
    std::uint32_t len = 0;
    std::uint32_t aux = 0;
    std::uint32_t naux = 0;
    double c = 0.0;
  };

  Var push(Node n);
  std::uint32_t alloc(std::size_t len);
  std::span<double> out_span(const Node& n);
  std::span<const double> val_span(const Node& n) const;
  std::span<double> grad_span(const Node& n);
  std::uint32_t push_aux(std::span<const Var> vs);
  void backward_node(std::uint32_t i);

  ParamStore* store_;
  std::vector<Node> nodes_;
  std::vector<double> val_;
  std::vector<double> gval_;
  std::vector<std::uint32_t> aux_;
};

// Central-difference gradient verification. The callable evaluates the
// loss at the store's current values and, when with_grad is set,
// accumulates analytic gradients into the store.
using LossFn = std::function<double(ParamStore&, bool with_grad)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_coord = 0;
  std::map<std::string, double> per_param;
};

GradCheckReport grad_check_detailed(const LossFn& f, ParamStore& params, double h = 1e-4);
double grad_check(const LossFn& f, ParamStore& params, double h = 1e-4);

// First-order adaptive-moment optimizer with per-group learning rates.
class Adam {
 public:
  Adam(double default_lr, std::map<std::string, double> group_lr = {},
       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(default_lr), group_lr_(std::move(group_lr)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& params);

 private:
  double lr_;
  std::map<std::string, double> group_lr_;
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace sqltrack

#endif  // SQLTRACK_AUTOGRAD_HPP_
