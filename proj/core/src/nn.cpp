#include "qexplore/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "qexplore/error.hpp"
#include "qexplore/rng.hpp"

namespace qexplore {
namespace {

constexpr int kFormatVersion = 1;
constexpr char kMagic[4] = {'Q', 'X', 'P', '1'};

double relu(double x) { return x > 0.0 ? x : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// Architecture / layout

Architecture Architecture::for_features(const FeatureConfig& cfg) {
  Architecture arch;
  arch.embedding_dim = cfg.embedding_dim;
  arch.max_words = cfg.max_words;
  arch.generations = cfg.generations;
  arch.histogram_len = cfg.histogram_len;
  arch.widths.erase(std::remove_if(arch.widths.begin(), arch.widths.end(),
                                   [&](int w) { return w > cfg.max_words; }),
                    arch.widths.end());
  if (arch.widths.empty()) arch.widths = {1};
  return arch;
}

void Architecture::validate() const {
  if (embedding_dim < 1 || max_words < 1 || generations < 1 || histogram_len < 2 ||
      filters < 1 || fcr_hidden < 1 || fcd_hidden < 1 || hidden1 < 1 || hidden2 < 1) {
    throw UsageError("Architecture: all sizes must be positive (V >= 2)");
  }
  if (widths.empty()) throw UsageError("Architecture: no convolution widths");
  for (int w : widths) {
    if (w < 1 || w > max_words) {
      throw UsageError("Architecture: convolution width outside [1, N]");
    }
  }
}

bool Architecture::matches(const FeatureBundle& b) const {
  return b.embedding_dim == embedding_dim && b.max_words == max_words &&
         b.generations == generations && b.histogram_len == histogram_len &&
         b.txc.size() == static_cast<std::size_t>(embedding_dim * max_words) &&
         b.fcd.size() == static_cast<std::size_t>(generations * histogram_len);
}

ParameterLayout::ParameterLayout(const Architecture& arch) {
  arch.validate();
  std::size_t at = 0;
  auto take = [&at](std::size_t n) {
    const std::size_t start = at;
    at += n;
    return start;
  };
  const auto F = static_cast<std::size_t>(arch.filters);
  const auto L = static_cast<std::size_t>(arch.embedding_dim);
  for (int w : arch.widths) {
    Conv c{w, 0, 0};
    c.weights = take(F * L * static_cast<std::size_t>(w));
    c.bias = take(F);
    conv.push_back(c);
  }
  const auto Hs = static_cast<std::size_t>(arch.fcr_hidden);
  const auto Hv = static_cast<std::size_t>(arch.fcd_hidden);
  const auto H1 = static_cast<std::size_t>(arch.hidden1);
  const auto H2 = static_cast<std::size_t>(arch.hidden2);
  fcr_w = take(Hs);
  fcr_b = take(Hs);
  fcd_w = take(Hv * static_cast<std::size_t>(arch.fcd_inputs()));
  fcd_b = take(Hv);
  w1 = take(H1 * static_cast<std::size_t>(arch.concat_width()));
  b1 = take(H1);
  w2 = take(H2 * H1);
  b2 = take(H2);
  w3 = take(H2);
  b3 = take(1);
  total = at;
}

// ---------------------------------------------------------------------------
// QNetwork

struct QNetwork::Tape {
  std::vector<double> text_pre;      // max-pooled conv value per filter
  std::vector<std::size_t> argmax;   // winning position per filter
  double fcr_in = 0.0;
  std::vector<double> fcr_pre;
  std::vector<double> fcd_in;
  std::vector<double> fcd_pre;
  std::vector<double> concat;
  std::vector<double> z1, a1, z2, a2;
};

QNetwork::QNetwork(Architecture arch)
    : arch_(std::move(arch)), layout_(arch_), params_(layout_.total, 0.0) {}

QNetwork QNetwork::random(const Architecture& arch, Rng& rng) {
  QNetwork net(arch);
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) {
      net.params_[offset + i] = rng.uniform(-bound, bound);
    }
  };
  const auto F = static_cast<std::size_t>(arch.filters);
  const auto L = static_cast<std::size_t>(arch.embedding_dim);
  for (const auto& c : net.layout_.conv) {
    const std::size_t fan_in = L * static_cast<std::size_t>(c.width);
    fill(c.weights, F * fan_in, fan_in);
  }
  const auto& lay = net.layout_;
  fill(lay.fcr_w, lay.fcr_b - lay.fcr_w, 1);
  fill(lay.fcd_w, lay.fcd_b - lay.fcd_w, static_cast<std::size_t>(arch.fcd_inputs()));
  fill(lay.w1, lay.b1 - lay.w1, static_cast<std::size_t>(arch.concat_width()));
  fill(lay.w2, lay.b2 - lay.w2, static_cast<std::size_t>(arch.hidden1));
  fill(lay.w3, lay.b3 - lay.w3, static_cast<std::size_t>(arch.hidden2));
  return net;
}

void QNetwork::check_shape(const FeatureBundle& bundle) const {
  if (!arch_.matches(bundle)) {
    throw UsageError("QNetwork: feature bundle shape does not match architecture");
  }
}

double QNetwork::run(const FeatureBundle& bundle, Tape* tape) const {
  check_shape(bundle);
  const double* p = params_.data();
  const auto L = static_cast<std::size_t>(arch_.embedding_dim);
  const auto N = static_cast<std::size_t>(arch_.max_words);
  const auto F = static_cast<std::size_t>(arch_.filters);

  std::vector<double> concat;
  concat.reserve(static_cast<std::size_t>(arch_.concat_width()));
  if (tape) {
    tape->text_pre.clear();
    tape->argmax.clear();
  }

  // Text handler.
  for (const auto& conv : layout_.conv) {
    const auto w = static_cast<std::size_t>(conv.width);
    const std::size_t positions = N - w + 1;
    for (std::size_t f = 0; f < F; ++f) {
      const double* kernel = p + conv.weights + f * L * w;
      double best = 0.0;
      std::size_t best_pos = 0;
      for (std::size_t pos = 0; pos < positions; ++pos) {
        double z = p[conv.bias + f];
        for (std::size_t r = 0; r < L; ++r) {
          const double* row = bundle.txc.data() + r * N + pos;
          const double* k = kernel + r * w;
          for (std::size_t j = 0; j < w; ++j) z += k[j] * row[j];
        }
        if (pos == 0 || z > best) {
          best = z;
          best_pos = pos;
        }
      }
      if (tape) {
        tape->text_pre.push_back(best);
        tape->argmax.push_back(best_pos);
      }
      concat.push_back(relu(best));
    }
  }

  // Execution-count handler.
  const double fcr_in = std::log1p(static_cast<double>(bundle.fcr));
  if (tape) {
    tape->fcr_in = fcr_in;
    tape->fcr_pre.clear();
  }
  for (int j = 0; j < arch_.fcr_hidden; ++j) {
    const double z = p[layout_.fcr_b + j] + p[layout_.fcr_w + j] * fcr_in;
    if (tape) tape->fcr_pre.push_back(z);
    concat.push_back(relu(z));
  }

  // Children-frequency handler.
  const auto D = static_cast<std::size_t>(arch_.fcd_inputs());
  std::vector<double> fcd_in(D);
  for (std::size_t i = 0; i < D; ++i) fcd_in[i] = std::log1p(static_cast<double>(bundle.fcd[i]));
  std::vector<double> fcd_pre(static_cast<std::size_t>(arch_.fcd_hidden));
  for (std::size_t j = 0; j < fcd_pre.size(); ++j) {
    double z = p[layout_.fcd_b + j];
    const double* row = p + layout_.fcd_w + j * D;
    for (std::size_t i = 0; i < D; ++i) z += row[i] * fcd_in[i];
    fcd_pre[j] = z;
    concat.push_back(relu(z));
  }

  auto dense = [p](std::size_t w_off, std::size_t b_off, const std::vector<double>& in,
                   std::size_t out_size) {
    std::vector<double> out(out_size);
    for (std::size_t j = 0; j < out_size; ++j) {
      double z = p[b_off + j];
      const double* row = p + w_off + j * in.size();
      for (std::size_t i = 0; i < in.size(); ++i) z += row[i] * in[i];
      out[j] = z;
    }
    return out;
  };

  auto z1 = dense(layout_.w1, layout_.b1, concat, static_cast<std::size_t>(arch_.hidden1));
  std::vector<double> a1(z1.size());
  std::transform(z1.begin(), z1.end(), a1.begin(), relu);
  auto z2 = dense(layout_.w2, layout_.b2, a1, static_cast<std::size_t>(arch_.hidden2));
  std::vector<double> a2(z2.size());
  std::transform(z2.begin(), z2.end(), a2.begin(), relu);
  double q = p[layout_.b3];
  for (std::size_t i = 0; i < a2.size(); ++i) q += p[layout_.w3 + i] * a2[i];

  if (tape) {
    tape->fcd_in = std::move(fcd_in);
    tape->fcd_pre = std::move(fcd_pre);
    tape->concat = std::move(concat);
    tape->z1 = std::move(z1);
    tape->a1 = std::move(a1);
    tape->z2 = std::move(z2);
    tape->a2 = std::move(a2);
  }
  return q;
}

double QNetwork::forward(const FeatureBundle& bundle) const {
  return run(bundle, nullptr);
}

double QNetwork::accumulate_gradient(const FeatureBundle& bundle, double upstream,
                                     std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw UsageError("QNetwork: gradient buffer has wrong length");
  }
  Tape tape;
  const double q = run(bundle, &tape);
  if (upstream == 0.0) return q;

  const double* p = params_.data();
  double* g = grad.data();
  const auto H1 = tape.z1.size();
  const auto H2 = tape.z2.size();
  const auto C = tape.concat.size();

  // Head.
  g[layout_.b3] += upstream;
  std::vector<double> dz2(H2);
  for (std::size_t i = 0; i < H2; ++i) {
    g[layout_.w3 + i] += upstream * tape.a2[i];
    dz2[i] = tape.z2[i] > 0.0 ? upstream * p[layout_.w3 + i] : 0.0;
  }
  // Second hidden layer.
  std::vector<double> da1(H1, 0.0);
  for (std::size_t j = 0; j < H2; ++j) {
    if (dz2[j] == 0.0) continue;
    g[layout_.b2 + j] += dz2[j];
    double* gw = g + layout_.w2 + j * H1;
    const double* w = p + layout_.w2 + j * H1;
    for (std::size_t i = 0; i < H1; ++i) {
      gw[i] += dz2[j] * tape.a1[i];
      da1[i] += dz2[j] * w[i];
    }
  }
  // First hidden layer.
  std::vector<double> dconcat(C, 0.0);
  for (std::size_t j = 0; j < H1; ++j) {
    if (tape.z1[j] <= 0.0 || da1[j] == 0.0) continue;
    const double dz = da1[j];
    g[layout_.b1 + j] += dz;
    double* gw = g + layout_.w1 + j * C;
    const double* w = p + layout_.w1 + j * C;
    for (std::size_t i = 0; i < C; ++i) {
      gw[i] += dz * tape.concat[i];
      dconcat[i] += dz * w[i];
    }
  }

  // Text handler: the gradient of the max flows to the winning window only.
  const auto L = static_cast<std::size_t>(arch_.embedding_dim);
  const auto N = static_cast<std::size_t>(arch_.max_words);
  const auto F = static_cast<std::size_t>(arch_.filters);
  std::size_t slot = 0;
  for (const auto& conv : layout_.conv) {
    const auto w = static_cast<std::size_t>(conv.width);
    for (std::size_t f = 0; f < F; ++f, ++slot) {
      if (tape.text_pre[slot] <= 0.0 || dconcat[slot] == 0.0) continue;
      const double d = dconcat[slot];
      const std::size_t pos = tape.argmax[slot];
      g[conv.bias + f] += d;
      double* gk = g + conv.weights + f * L * w;
      for (std::size_t r = 0; r < L; ++r) {
        const double* row = bundle.txc.data() + r * N + pos;
        for (std::size_t j = 0; j < w; ++j) gk[r * w + j] += d * row[j];
      }
    }
  }
  // Execution-count handler.
  for (std::size_t j = 0; j < tape.fcr_pre.size(); ++j, ++slot) {
    if (tape.fcr_pre[j] <= 0.0) continue;
    g[layout_.fcr_w + j] += dconcat[slot] * tape.fcr_in;
    g[layout_.fcr_b + j] += dconcat[slot];
  }
  // Children-frequency handler.
  const auto D = tape.fcd_in.size();
  for (std::size_t j = 0; j < tape.fcd_pre.size(); ++j, ++slot) {
    if (tape.fcd_pre[j] <= 0.0) continue;
    const double d = dconcat[slot];
    g[layout_.fcd_b + j] += d;
    double* gw = g + layout_.fcd_w + j * D;
    for (std::size_t i = 0; i < D; ++i) gw[i] += d * tape.fcd_in[i];
  }
  return q;
}

Gradient QNetwork::backward(const FeatureBundle& bundle, double upstream) const {
  Gradient grad(params_.size(), 0.0);
  accumulate_gradient(bundle, upstream, grad);
  return grad;
}

// ---------------------------------------------------------------------------
// Optimization

AdamState AdamState::for_parameters(std::size_t count, double learning_rate) {
  AdamState adam;
  adam.m.assign(count, 0.0);
  adam.v.assign(count, 0.0);
  adam.learning_rate = learning_rate;
  return adam;
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& adam) {
  if (grads.size() != params.size() || adam.m.size() != params.size() ||
      adam.v.size() != params.size()) {
    throw UsageError("adam_step: parameter, gradient and moment shapes differ");
  }
  ++adam.step;
  const double t = static_cast<double>(adam.step);
  const double c1 = 1.0 - std::pow(adam.beta1, t);
  const double c2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    adam.m[i] = adam.beta1 * adam.m[i] + (1.0 - adam.beta1) * g;
    adam.v[i] = adam.beta2 * adam.v[i] + (1.0 - adam.beta2) * g * g;
    const double m_hat = adam.m[i] / c1;
    const double v_hat = adam.v[i] / c2;
    params[i] -= adam.learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
  }
}

double train_batch(QNetwork& net, AdamState& adam,
                   std::span<const TrainingSample* const> samples) {
  if (samples.empty()) throw UsageError("train_batch: empty batch");
  const double n = static_cast<double>(samples.size());
  Gradient grad(net.parameters().size(), 0.0);
  double loss = 0.0;
  for (const TrainingSample* sample : samples) {
    const double q = net.forward(sample->bundle);
    const double residual = q - sample->target_q;
    loss += residual * residual;
    net.accumulate_gradient(sample->bundle, 2.0 * residual / n, grad);
  }
  adam_step(net.parameters(), grad, adam);
  return loss / n;
}

double train_batch(QNetwork& net, AdamState& adam,
                   std::span<const TrainingSample> samples) {
  std::vector<const TrainingSample*> ptrs;
  ptrs.reserve(samples.size());
  for (const auto& s : samples) ptrs.push_back(&s);
  return train_batch(net, adam, std::span<const TrainingSample* const>(ptrs));
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// "QXP1\n", then `key value` lines, then an empty line, then little-endian
// float64 parameters (layout order), Adam first moments, Adam second
// moments, and finally the Adam step as a little-endian uint64.

namespace {

void put_u64(std::ostream& out, std::uint64_t bits) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
    throw FormatError("checkpoint truncated");
  }
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return bits;
}

void put_doubles(std::ostream& out, std::span<const double> values) {
  for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void get_doubles(std::istream& in, std::span<double> values) {
  for (double& v : values) v = std::bit_cast<double>(get_u64(in));
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int parse_int(const std::map<std::string, std::string>& header, const std::string& key) {
  auto it = header.find(key);
  if (it == header.end()) throw FormatError("checkpoint header lacks '" + key + "'");
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw FormatError("checkpoint header: bad value for '" + key + "'");
  }
}

double parse_double(const std::map<std::string, std::string>& header, const std::string& key) {
  auto it = header.find(key);
  if (it == header.end()) throw FormatError("checkpoint header lacks '" + key + "'");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw FormatError("checkpoint header: bad value for '" + key + "'");
  }
}

}  // namespace

void save_model(const QNetwork& net, const AdamState& adam, std::ostream& out) {
  const Architecture& a = net.architecture();
  if (adam.m.size() != net.parameters().size() || adam.v.size() != net.parameters().size()) {
    throw UsageError("save_model: Adam moments do not match parameters");
  }
  std::string widths;
  for (std::size_t i = 0; i < a.widths.size(); ++i) {
    widths += (i ? "," : "") + std::to_string(a.widths[i]);
  }
  out.write(kMagic, 4);
  out << '\n'
      << "version " << kFormatVersion << '\n'
      << "embedding_dim " << a.embedding_dim << '\n'
      << "max_words " << a.max_words << '\n'
      << "generations " << a.generations << '\n'
      << "histogram_len " << a.histogram_len << '\n'
      << "filters " << a.filters << '\n'
      << "widths " << widths << '\n'
      << "fcr_hidden " << a.fcr_hidden << '\n'
      << "fcd_hidden " << a.fcd_hidden << '\n'
      << "hidden1 " << a.hidden1 << '\n'
      << "hidden2 " << a.hidden2 << '\n'
      << "concat_order txc,fcr,fcd\n"
      << "parameters " << net.parameters().size() << '\n'
      << "learning_rate " << exact(adam.learning_rate) << '\n'
      << "beta1 " << exact(adam.beta1) << '\n'
      << "beta2 " << exact(adam.beta2) << '\n'
      << "epsilon " << exact(adam.epsilon) << '\n'
      << '\n';
  put_doubles(out, net.parameters());
  put_doubles(out, adam.m);
  put_doubles(out, adam.v);
  put_u64(out, adam.step);
  if (!out) throw FormatError("save_model: write failed");
}

void save_model(const QNetwork& net, const AdamState& adam,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("save_model: cannot open " + path.string());
  save_model(net, adam, out);
}

Checkpoint load_model(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw FormatError("checkpoint: bad magic (expected QXP1)");
  }
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::string> header;
  bool terminated = false;
  while (std::getline(in, line)) {
    if (line.empty()) {
      terminated = true;
      break;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) throw FormatError("checkpoint header: malformed line");
    header[line.substr(0, space)] = line.substr(space + 1);
  }
  if (!terminated) throw FormatError("checkpoint truncated in header");
  if (parse_int(header, "version") != kFormatVersion) {
    throw FormatError("checkpoint: unsupported version " + header["version"]);
  }
  if (header["concat_order"] != "txc,fcr,fcd") {
    throw FormatError("checkpoint: unsupported concat_order");
  }

  Architecture a;
  a.embedding_dim = parse_int(header, "embedding_dim");
  a.max_words = parse_int(header, "max_words");
  a.generations = parse_int(header, "generations");
  a.histogram_len = parse_int(header, "histogram_len");
  a.filters = parse_int(header, "filters");
  a.fcr_hidden = parse_int(header, "fcr_hidden");
  a.fcd_hidden = parse_int(header, "fcd_hidden");
  a.hidden1 = parse_int(header, "hidden1");
  a.hidden2 = parse_int(header, "hidden2");
  a.widths.clear();
  {
    std::istringstream ws(header["widths"]);
    std::string item;
    while (std::getline(ws, item, ',')) {
      try {
        a.widths.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw FormatError("checkpoint header: bad widths");
      }
    }
  }
  try {
    a.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("checkpoint architecture invalid: ") + e.what());
  }

  Checkpoint ck{QNetwork(a), AdamState{}};
  const auto count = static_cast<std::size_t>(parse_int(header, "parameters"));
  if (count != ck.net.parameters().size()) {
    throw FormatError("checkpoint: parameter count disagrees with architecture");
  }
  ck.adam = AdamState::for_parameters(count, parse_double(header, "learning_rate"));
  ck.adam.beta1 = parse_double(header, "beta1");
  ck.adam.beta2 = parse_double(header, "beta2");
  ck.adam.epsilon = parse_double(header, "epsilon");
  get_doubles(in, ck.net.parameters());
  get_doubles(in, ck.adam.m);
  get_doubles(in, ck.adam.v);
  ck.adam.step = get_u64(in);
  return ck;
}

Checkpoint load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_model: cannot open " + path.string());
  return load_model(in);
}

Checkpoint load_model(const std::filesystem::path& path, const Architecture& expected) {
  Checkpoint ck = load_model(path);
  if (!(ck.net.architecture() == expected)) {
    const auto& got = ck.net.architecture();
    std::string what = "checkpoint architecture mismatch";
    if (got.embedding_dim != expected.embedding_dim) {
      what += ": L=" + std::to_string(got.embedding_dim) + " but expected L=" +
              std::to_string(expected.embedding_dim);
    }
    throw FormatError(what);
  }
  return ck;
}

}  // namespace qexplore
