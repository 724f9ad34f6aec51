#include "sqltrack/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace sqltrack {

double Rng::uniform(double lo, double hi) {
  double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0,1)
  return lo + u * (hi - lo);
}

std::size_t Rng::below(std::size_t n) {
  return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n);
}

std::size_t ParamStore::add_uniform(const std::string& name, std::vector<std::size_t> shape,
                                    double lo, double hi, const std::string& group) {
  Tensor value(shape);
  for (std::size_t i = 0; i < value.size(); ++i) value[i] = rng_.uniform(lo, hi);
  return add_value(name, std::move(value), group);
}

std::size_t ParamStore::add_value(const std::string& name, Tensor value, const std::string& group) {
  if (index_.count(name)) throw std::runtime_error("duplicate parameter name: " + name);
  Param p;
  p.name = name;
  p.group = group;
  p.grad = Tensor(value.shape());
  p.value = std::move(value);
  params_.push_back(std::move(p));
  index_[name] = params_.size() - 1;
  return params_.size() - 1;
}

std::size_t ParamStore::find(const std::string& name) const { return index_.at(name); }

bool ParamStore::contains(const std::string& name) const { return index_.count(name) > 0; }

void ParamStore::zero_grad() {
  for (auto& p : params_) {
    std::fill(p.grad.data().begin(), p.grad.data().end(), 0.0);
  }
}

const std::string* ParamStore::blob(const std::string& name) const {
  auto it = blobs_.find(name);
  return it == blobs_.end() ? nullptr : &it->second;
}

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'T', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void write_string(std::ofstream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::ifstream& in) {
  auto n = read_pod<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

}  // namespace

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, seed_);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    write_string(out, p.name);
    write_string(out, p.group);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.shape().size()));
    for (auto s : p.value.shape()) write_pod<std::uint64_t>(out, s);
    out.write(reinterpret_cast<const char*>(p.value.data().data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(blobs_.size()));
  for (const auto& [name, bytes] : blobs_) {
    write_string(out, name);
    write_string(out, bytes);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
  auto seed = read_pod<std::uint64_t>(in);
  ParamStore store(seed);
  auto n = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = read_string(in);
    std::string group = read_string(in);
    auto rank = read_pod<std::uint32_t>(in);
    std::vector<std::size_t> shape(rank);
    for (auto& s : shape) s = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    Tensor value(shape);
    in.read(reinterpret_cast<char*>(value.data().data()),
            static_cast<std::streamsize>(value.size() * sizeof(double)));
    store.add_value(name, std::move(value), group);
  }
  auto nblobs = read_pod<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < nblobs; ++i) {
    std::string name = read_string(in);
    store.set_blob(name, read_string(in));
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return store;
}

// ---------------------------------------------------------------------------
// Graph

void Graph::reset() {
  nodes_.clear();
  val_.clear();
  gval_.clear();
  aux_.clear();
}

std::uint32_t Graph::alloc(std::size_t len) {
  auto off = static_cast<std::uint32_t>(val_.size());
  val_.resize(val_.size() + len, 0.0);
  return off;
}

Var Graph::push(Node n) {
  nodes_.push_back(n);
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::span<const double> Graph::val_span(const Node& n) const {
  switch (n.op) {
    case Op::kParam:
      return store_->param(n.a).value.data();
    case Op::kParamRow:
      return store_->param(n.a).value.row(n.b);
    default:
      return {val_.data() + n.off, n.len};
  }
}

std::span<double> Graph::out_span(const Node& n) {
  return {val_.data() + n.off, n.len};
}

std::span<double> Graph::grad_span(const Node& n) {
  switch (n.op) {
    case Op::kParam:
      return store_->param(n.a).grad.data();
    case Op::kParamRow:
      return store_->param(n.a).grad.row(n.b);
    default:
      return {gval_.data() + n.off, n.len};
  }
}

std::span<const double> Graph::value(Var v) const { return val_span(nodes_[v.idx]); }

Tensor Graph::tensor(Var v) const {
  auto s = value(v);
  return Tensor::from(std::vector<double>(s.begin(), s.end()));
}

std::span<const double> Graph::grad(Var v) const {
  const Node& n = nodes_[v.idx];
  if (n.op == Op::kParam) return store_->param(n.a).grad.data();
  if (n.op == Op::kParamRow) return store_->param(n.a).grad.row(n.b);
  return {gval_.data() + n.off, n.len};
}

std::uint32_t Graph::push_aux(std::span<const Var> vs) {
  auto off = static_cast<std::uint32_t>(aux_.size());
  for (auto v : vs) aux_.push_back(v.idx);
  return off;
}

Var Graph::input(std::span<const double> v) {
  std::vector<double> copy(v.begin(), v.end());  // v may alias arena storage
  Node n;
  n.op = Op::kInput;
  n.len = static_cast<std::uint32_t>(copy.size());
  n.off = alloc(copy.size());
  std::copy(copy.begin(), copy.end(), val_.begin() + n.off);
  return push(n);
}

Var Graph::zeros(std::size_t len) {
  Node n;
  n.op = Op::kInput;
  n.len = static_cast<std::uint32_t>(len);
  n.off = alloc(len);
  return push(n);
}

Var Graph::param(std::size_t param_id) {
  Node n;
  n.op = Op::kParam;
  n.a = static_cast<std::uint32_t>(param_id);
  n.len = static_cast<std::uint32_t>(store_->param(param_id).value.size());
  return push(n);
}

Var Graph::param_row(std::size_t param_id, std::size_t row) {
  Node n;
  n.op = Op::kParamRow;
  n.a = static_cast<std::uint32_t>(param_id);
  n.b = static_cast<std::uint32_t>(row);
  n.len = static_cast<std::uint32_t>(store_->param(param_id).value.cols());
  return push(n);
}

namespace {
[[noreturn]] void shape_error(const char* op) {
  throw ShapeMismatch(std::string("graph op ") + op + ": operand shapes differ");
}
}  // namespace

Var Graph::add(Var a, Var b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a.idx;
  n.b = b.idx;
  n.len = nodes_[a.idx].len;
  if (nodes_[b.idx].len != n.len) shape_error("add");
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  auto vb = val_span(nodes_[b.idx]);
  for (std::size_t i = 0; i < n.len; ++i) out[i] = va[i] + vb[i];
  return push(n);
}

Var Graph::sub(Var a, Var b) {
  Node n;
  n.op = Op::kSub;
  n.a = a.idx;
  n.b = b.idx;
  n.len = nodes_[a.idx].len;
  if (nodes_[b.idx].len != n.len) shape_error("sub");
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  auto vb = val_span(nodes_[b.idx]);
  for (std::size_t i = 0; i < n.len; ++i) out[i] = va[i] - vb[i];
  return push(n);
}

Var Graph::mul(Var a, Var b) {
  Node n;
  n.op = Op::kMul;
  n.a = a.idx;
  n.b = b.idx;
  n.len = nodes_[a.idx].len;
  if (nodes_[b.idx].len != n.len) shape_error("mul");
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  auto vb = val_span(nodes_[b.idx]);
  for (std::size_t i = 0; i < n.len; ++i) out[i] = va[i] * vb[i];
  return push(n);
}

Var Graph::scale(Var a, double c) {
  Node n;
  n.op = Op::kScale;
  n.a = a.idx;
  n.c = c;
  n.len = nodes_[a.idx].len;
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  for (std::size_t i = 0; i < n.len; ++i) out[i] = c * va[i];
  return push(n);
}

Var Graph::add_scaled(Var a, Var b, double c) {
  Node n;
  n.op = Op::kAddScaled;
  n.a = a.idx;
  n.b = b.idx;
  n.c = c;
  n.len = nodes_[a.idx].len;
  if (nodes_[b.idx].len != n.len) shape_error("add_scaled");
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  auto vb = val_span(nodes_[b.idx]);
  for (std::size_t i = 0; i < n.len; ++i) out[i] = va[i] + c * vb[i];
  return push(n);
}

Var Graph::matvec(Var w, Var x) {
  const Node& wn = nodes_[w.idx];
  const Node& xn = nodes_[x.idx];
  std::size_t cols = xn.len;
  if (cols == 0 || wn.len % cols != 0) shape_error("matvec");
  std::size_t rows = wn.len / cols;
  Node n;
  n.op = Op::kMatVec;
  n.a = w.idx;
  n.b = x.idx;
  n.len = static_cast<std::uint32_t>(rows);
  n.off = alloc(rows);
  auto out = out_span(n);
  auto vw = val_span(nodes_[w.idx]);
  auto vx = val_span(nodes_[x.idx]);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    const double* wr = vw.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) s += wr[c] * vx[c];
    out[r] = s;
  }
  return push(n);
}

Var Graph::dot(Var a, Var b) {
  Node n;
  n.op = Op::kDot;
  n.a = a.idx;
  n.b = b.idx;
  if (nodes_[a.idx].len != nodes_[b.idx].len) shape_error("dot");
  n.len = 1;
  n.off = alloc(1);
  auto va = val_span(nodes_[a.idx]);
  auto vb = val_span(nodes_[b.idx]);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  out_span(n)[0] = s;
  return push(n);
}

Var Graph::tanh(Var a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a.idx;
  n.len = nodes_[a.idx].len;
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  for (std::size_t i = 0; i < n.len; ++i) out[i] = std::tanh(va[i]);
  return push(n);
}

Var Graph::sigmoid(Var a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a.idx;
  n.len = nodes_[a.idx].len;
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  for (std::size_t i = 0; i < n.len; ++i) out[i] = 1.0 / (1.0 + std::exp(-va[i]));
  return push(n);
}

Var Graph::softmax(Var a) {
  Node n;
  n.op = Op::kSoftmax;
  n.a = a.idx;
  n.len = nodes_[a.idx].len;
  if (n.len == 0) shape_error("softmax");
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  double mx = *std::max_element(va.begin(), va.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < n.len; ++i) {
    out[i] = std::exp(va[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n.len; ++i) out[i] /= sum;
  return push(n);
}

Var Graph::concat(Var a, Var b) {
  Node n;
  n.op = Op::kConcat;
  n.a = a.idx;
  n.b = b.idx;
  n.len = nodes_[a.idx].len + nodes_[b.idx].len;
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto va = val_span(nodes_[a.idx]);
  auto vb = val_span(nodes_[b.idx]);
  std::copy(va.begin(), va.end(), out.begin());
  std::copy(vb.begin(), vb.end(), out.begin() + va.size());
  return push(n);
}

Var Graph::add_many(std::span<const Var> vs) {
  if (vs.empty()) throw ShapeMismatch("add_many: no operands");
  if (vs.size() == 1) return vs[0];
  Node n;
  n.op = Op::kAddMany;
  n.len = nodes_[vs[0].idx].len;
  n.aux = push_aux(vs);
  n.naux = static_cast<std::uint32_t>(vs.size());
  n.off = alloc(n.len);
  auto out = out_span(n);
  for (auto v : vs) {
    if (nodes_[v.idx].len != n.len) shape_error("add_many");
    auto sv = val_span(nodes_[v.idx]);
    for (std::size_t i = 0; i < n.len; ++i) out[i] += sv[i];
  }
  return push(n);
}

Var Graph::pack(std::span<const Var> scalars) {
  Node n;
  n.op = Op::kPack;
  n.len = static_cast<std::uint32_t>(scalars.size());
  n.aux = push_aux(scalars);
  n.naux = n.len;
  n.off = alloc(n.len);
  auto out = out_span(n);
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (nodes_[scalars[i].idx].len != 1) shape_error("pack");
    out[i] = val_span(nodes_[scalars[i].idx])[0];
  }
  return push(n);
}

Var Graph::weighted_sum(Var weights, std::span<const Var> rows) {
  if (nodes_[weights.idx].len != rows.size()) shape_error("weighted_sum");
  if (rows.empty()) throw ShapeMismatch("weighted_sum: no rows");
  Node n;
  n.op = Op::kWeightedSum;
  n.a = weights.idx;
  n.len = nodes_[rows[0].idx].len;
  n.aux = push_aux(rows);
  n.naux = static_cast<std::uint32_t>(rows.size());
  n.off = alloc(n.len);
  auto out = out_span(n);
  auto w = val_span(nodes_[weights.idx]);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (nodes_[rows[k].idx].len != n.len) shape_error("weighted_sum");
    auto rv = val_span(nodes_[rows[k].idx]);
    for (std::size_t i = 0; i < n.len; ++i) out[i] += w[k] * rv[i];
  }
  return push(n);
}

Var Graph::scale_by(Var s, Var v) {
  if (nodes_[s.idx].len != 1) shape_error("scale_by");
  Node n;
  n.op = Op::kScaleBy;
  n.a = s.idx;
  n.b = v.idx;
  n.len = nodes_[v.idx].len;
  n.off = alloc(n.len);
  auto out = out_span(n);
  double sv = val_span(nodes_[s.idx])[0];
  auto vv = val_span(nodes_[v.idx]);
  for (std::size_t i = 0; i < n.len; ++i) out[i] = sv * vv[i];
  return push(n);
}

Var Graph::scatter_sum(Var src, std::span<const std::uint32_t> target, std::size_t out_len) {
  if (nodes_[src.idx].len != target.size()) shape_error("scatter_sum");
  Node n;
  n.op = Op::kScatterSum;
  n.a = src.idx;
  n.len = static_cast<std::uint32_t>(out_len);
  n.aux = static_cast<std::uint32_t>(aux_.size());
  n.naux = static_cast<std::uint32_t>(target.size());
  for (auto t : target) aux_.push_back(t);
  n.off = alloc(out_len);
  auto out = out_span(n);
  auto sv = val_span(nodes_[src.idx]);
  for (std::size_t i = 0; i < target.size(); ++i) out[target[i]] += sv[i];
  return push(n);
}

Var Graph::pick(Var v, std::size_t i) {
  if (i >= nodes_[v.idx].len) shape_error("pick");
  Node n;
  n.op = Op::kPick;
  n.a = v.idx;
  n.b = static_cast<std::uint32_t>(i);
  n.len = 1;
  n.off = alloc(1);
  out_span(n)[0] = val_span(nodes_[v.idx])[i];
  return push(n);
}

Var Graph::sum(Var v) {
  Node n;
  n.op = Op::kSum;
  n.a = v.idx;
  n.len = 1;
  n.off = alloc(1);
  auto sv = val_span(nodes_[v.idx]);
  double s = 0.0;
  for (double x : sv) s += x;
  out_span(n)[0] = s;
  return push(n);
}

Var Graph::log(Var s) {
  if (nodes_[s.idx].len != 1) shape_error("log");
  Node n;
  n.op = Op::kLog;
  n.a = s.idx;
  n.len = 1;
  n.off = alloc(1);
  out_span(n)[0] = std::log(val_span(nodes_[s.idx])[0]);
  return push(n);
}

Var Graph::div(Var a, Var b) {
  if (nodes_[a.idx].len != 1 || nodes_[b.idx].len != 1) shape_error("div");
  Node n;
  n.op = Op::kDiv;
  n.a = a.idx;
  n.b = b.idx;
  n.len = 1;
  n.off = alloc(1);
  out_span(n)[0] = val_span(nodes_[a.idx])[0] / val_span(nodes_[b.idx])[0];
  return push(n);
}

Var Graph::sqrt(Var s) {
  if (nodes_[s.idx].len != 1) shape_error("sqrt");
  Node n;
  n.op = Op::kSqrt;
  n.a = s.idx;
  n.len = 1;
  n.off = alloc(1);
  out_span(n)[0] = std::sqrt(val_span(nodes_[s.idx])[0]);
  return push(n);
}

void Graph::backward(Var loss) {
  if (nodes_[loss.idx].len != 1) {
    throw ShapeMismatch("backward: loss must be scalar");
  }
  gval_.assign(val_.size(), 0.0);
  const Node& ln = nodes_[loss.idx];
  if (ln.op == Op::kParam || ln.op == Op::kParamRow) {
    store_->param(ln.a).grad[0] += 1.0;
  } else {
    gval_[ln.off] = 1.0;
  }
  for (std::uint32_t i = loss.idx + 1; i-- > 0;) {
    backward_node(i);
  }
}

void Graph::backward_node(std::uint32_t i) {
  Node& n = nodes_[i];
  switch (n.op) {
    case Op::kInput:
    case Op::kParam:
    case Op::kParamRow:
      return;
    default:
      break;
  }
  auto g = std::span<const double>(gval_.data() + n.off, n.len);
  bool all_zero = true;
  for (double x : g) {
    if (x != 0.0) {
      all_zero = false;
      break;
    }
  }
  if (all_zero) return;
  switch (n.op) {
    case Op::kAdd: {
      auto ga = grad_span(nodes_[n.a]);
      auto gb = grad_span(nodes_[n.b]);
      for (std::size_t k = 0; k < n.len; ++k) {
        ga[k] += g[k];
        gb[k] += g[k];
      }
      break;
    }
    case Op::kSub: {
      auto ga = grad_span(nodes_[n.a]);
      auto gb = grad_span(nodes_[n.b]);
      for (std::size_t k = 0; k < n.len; ++k) {
        ga[k] += g[k];
        gb[k] -= g[k];
      }
      break;
    }
    case Op::kMul: {
      auto ga = grad_span(nodes_[n.a]);
      auto gb = grad_span(nodes_[n.b]);
      auto va = val_span(nodes_[n.a]);
      auto vb = val_span(nodes_[n.b]);
      for (std::size_t k = 0; k < n.len; ++k) {
        ga[k] += g[k] * vb[k];
        gb[k] += g[k] * va[k];
      }
      break;
    }
    case Op::kScale: {
      auto ga = grad_span(nodes_[n.a]);
      for (std::size_t k = 0; k < n.len; ++k) ga[k] += n.c * g[k];
      break;
    }
    case Op::kAddScaled: {
      auto ga = grad_span(nodes_[n.a]);
      auto gb = grad_span(nodes_[n.b]);
      for (std::size_t k = 0; k < n.len; ++k) {
        ga[k] += g[k];
        gb[k] += n.c * g[k];
      }
      break;
    }
    case Op::kMatVec: {
      auto gw = grad_span(nodes_[n.a]);
      auto gx = grad_span(nodes_[n.b]);
      auto vw = val_span(nodes_[n.a]);
      auto vx = val_span(nodes_[n.b]);
      std::size_t cols = vx.size();
      for (std::size_t r = 0; r < n.len; ++r) {
        double gr = g[r];
        if (gr == 0.0) continue;
        double* gwr = gw.data() + r * cols;
        const double* wr = vw.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
          gwr[c] += gr * vx[c];
          gx[c] += gr * wr[c];
        }
      }
      break;
    }
    case Op::kDot: {
      auto ga = grad_span(nodes_[n.a]);
      auto gb = grad_span(nodes_[n.b]);
      auto va = val_span(nodes_[n.a]);
      auto vb = val_span(nodes_[n.b]);
      double gs = g[0];
      for (std::size_t k = 0; k < va.size(); ++k) {
        ga[k] += gs * vb[k];
        gb[k] += gs * va[k];
      }
      break;
    }
    case Op::kTanh: {
      auto ga = grad_span(nodes_[n.a]);
      auto y = val_span(n);
      for (std::size_t k = 0; k < n.len; ++k) ga[k] += g[k] * (1.0 - y[k] * y[k]);
      break;
    }
    case Op::kSigmoid: {
      auto ga = grad_span(nodes_[n.a]);
      auto y = val_span(n);
      for (std::size_t k = 0; k < n.len; ++k) ga[k] += g[k] * y[k] * (1.0 - y[k]);
      break;
    }
    case Op::kSoftmax: {
      auto ga = grad_span(nodes_[n.a]);
      auto y = val_span(n);
      double gy = 0.0;
      for (std::size_t k = 0; k < n.len; ++k) gy += g[k] * y[k];
      for (std::size_t k = 0; k < n.len; ++k) ga[k] += y[k] * (g[k] - gy);
      break;
    }
    case Op::kConcat: {
      auto ga = grad_span(nodes_[n.a]);
      auto gb = grad_span(nodes_[n.b]);
      for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += g[k];
      for (std::size_t k = 0; k < gb.size(); ++k) gb[k] += g[ga.size() + k];
      break;
    }
    case Op::kAddMany: {
      for (std::uint32_t j = 0; j < n.naux; ++j) {
        auto gp = grad_span(nodes_[aux_[n.aux + j]]);
        for (std::size_t k = 0; k < n.len; ++k) gp[k] += g[k];
      }
      break;
    }
    case Op::kPack: {
      for (std::uint32_t j = 0; j < n.naux; ++j) {
        grad_span(nodes_[aux_[n.aux + j]])[0] += g[j];
      }
      break;
    }
    case Op::kWeightedSum: {
      auto gw = grad_span(nodes_[n.a]);
      auto w = val_span(nodes_[n.a]);
      for (std::uint32_t j = 0; j < n.naux; ++j) {
        const Node& rn = nodes_[aux_[n.aux + j]];
        auto rv = val_span(rn);
        auto rg = grad_span(nodes_[aux_[n.aux + j]]);
        double acc = 0.0;
        for (std::size_t k = 0; k < n.len; ++k) {
          acc += rv[k] * g[k];
          rg[k] += w[j] * g[k];
        }
        gw[j] += acc;
      }
      break;
    }
    case Op::kScaleBy: {
      auto gs = grad_span(nodes_[n.a]);
      auto gv = grad_span(nodes_[n.b]);
      double sv = val_span(nodes_[n.a])[0];
      auto vv = val_span(nodes_[n.b]);
      double acc = 0.0;
      for (std::size_t k = 0; k < n.len; ++k) {
        acc += vv[k] * g[k];
        gv[k] += sv * g[k];
      }
      gs[0] += acc;
      break;
    }
    case Op::kScatterSum: {
      auto gs = grad_span(nodes_[n.a]);
      for (std::uint32_t j = 0; j < n.naux; ++j) {
        gs[j] += g[aux_[n.aux + j]];
      }
      break;
    }
    case Op::kPick: {
      grad_span(nodes_[n.a])[n.b] += g[0];
      break;
    }
    case Op::kSum: {
      auto ga = grad_span(nodes_[n.a]);
      for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += g[0];
      break;
    }
    case Op::kLog: {
      grad_span(nodes_[n.a])[0] += g[0] / val_span(nodes_[n.a])[0];
      break;
    }
    case Op::kDiv: {
      double va = val_span(nodes_[n.a])[0];
      double vb = val_span(nodes_[n.b])[0];
      grad_span(nodes_[n.a])[0] += g[0] / vb;
      grad_span(nodes_[n.b])[0] -= g[0] * va / (vb * vb);
      break;
    }
    case Op::kSqrt: {
      double y = val_span(n)[0];
      grad_span(nodes_[n.a])[0] += g[0] / (2.0 * y);
      break;
    }
    default:
      break;
  }
}

// ---------------------------------------------------------------------------
// Gradient checking

GradCheckReport grad_check_detailed(const LossFn& f, ParamStore& params, double h) {
  params.zero_grad();
  double base = f(params, true);
  if (!std::isfinite(base)) throw NonFiniteLoss("loss is not finite at the evaluation point");

  std::vector<Tensor> analytic;
  analytic.reserve(params.count());
  for (std::size_t p = 0; p < params.count(); ++p) analytic.push_back(params.param(p).grad);

  GradCheckReport report;
  for (std::size_t p = 0; p < params.count(); ++p) {
    Param& prm = params.param(p);
    double param_max = 0.0;
    for (std::size_t i = 0; i < prm.value.size(); ++i) {
      double saved = prm.value[i];
      prm.value[i] = saved + h;
      double lp = f(params, false);
      prm.value[i] = saved - h;
      double lm = f(params, false);
      prm.value[i] = saved;
      if (!std::isfinite(lp) || !std::isfinite(lm)) {
        throw NonFiniteLoss("loss is not finite under perturbation of " + prm.name);
      }
      double numeric = (lp - lm) / (2.0 * h);
      double a = analytic[p][i];
      double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      param_max = std::max(param_max, rel);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = prm.name;
        report.worst_coord = i;
      }
    }
    report.per_param[prm.name] = param_max;
  }
  return report;
}

double grad_check(const LossFn& f, ParamStore& params, double h) {
  return grad_check_detailed(f, params, h).max_rel_err;
}

// ---------------------------------------------------------------------------
// Adam

void Adam::step(ParamStore& params) {
  if (m_.empty()) {
    for (std::size_t p = 0; p < params.count(); ++p) {
      m_.emplace_back(params.param(p).value.shape());
      v_.emplace_back(params.param(p).value.shape());
    }
  }
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.count(); ++p) {
    Param& prm = params.param(p);
    auto it = group_lr_.find(prm.group);
    double lr = it == group_lr_.end() ? lr_ : it->second;
    for (std::size_t i = 0; i < prm.value.size(); ++i) {
      double g = prm.grad[i];
      m_[p][i] = beta1_ * m_[p][i] + (1.0 - beta1_) * g;
      v_[p][i] = beta2_ * v_[p][i] + (1.0 - beta2_) * g * g;
      double mhat = m_[p][i] / bc1;
      double vhat = v_[p][i] / bc2;
      prm.value[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace sqltrack
