#include "cda/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cda/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

namespace cda {
namespace {

constexpr char kMagic[4] = {'C', 'D', 'A', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::string& path)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw CheckpointError("cannot open '" + path + "' for writing");
  }

  void bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof v);
  }
  void doubles(const std::vector<double>& v) {
    bytes(v.data(), v.size() * sizeof(double));
  }
  void name(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void finish() {
    out_.flush();
    if (!out_) throw CheckpointError("write failed for '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw CheckpointError("cannot open '" + path + "'");
  }

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw CheckpointError("'" + path_ + "' is truncated or corrupt");
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  std::vector<double> doubles(std::size_t n) {
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
  }
  std::string name() {
    const auto n = pod<std::uint32_t>();
    if (n > 64) throw CheckpointError("'" + path_ + "': group name too long");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool at_eof() {
    in_.peek();
    return in_.eof();
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw CheckpointError("'" + path_ + "': " + msg);
  }

 private:
  std::string path_;
  std::ifstream in_;
};

void write_group(Writer& w, const std::string& group_name, const DenseNet& net,
                 const AdamState& state) {
  w.name(group_name);
  w.pod(static_cast<std::uint8_t>(net.output_activation));
  w.pod(static_cast<std::uint32_t>(net.layers.size()));
  for (const DenseLayer& layer : net.layers) {
    w.pod(static_cast<std::uint64_t>(layer.w.rows));
    w.pod(static_cast<std::uint64_t>(layer.w.cols));
  }
  for (const DenseLayer& layer : net.layers) {
    w.doubles(layer.w.v);
    w.doubles(layer.b);
  }
  w.pod(static_cast<std::uint64_t>(state.step));
  for (const auto& m : state.m) w.doubles(m);
  for (const auto& v : state.v) w.doubles(v);
}

void read_group(Reader& r, DenseNet& net, AdamState& state, double dropout,
                double learning_rate) {
  const auto activation = r.pod<std::uint8_t>();
  if (activation > 1) r.fail("bad activation tag");
  const auto n_layers = r.pod<std::uint32_t>();
  if (n_layers == 0 || n_layers > 64) r.fail("bad layer count");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> dims(n_layers);
  for (auto& [in, out] : dims) {
    in = r.pod<std::uint64_t>();
    out = r.pod<std::uint64_t>();
    if (in == 0 || out == 0 || in > (1u << 24) || out > (1u << 24))
      r.fail("bad layer shape");
  }
  for (std::size_t l = 1; l < dims.size(); ++l)
    if (dims[l].first != dims[l - 1].second) r.fail("layer chain mismatch");

  net.layers.clear();
  net.output_activation = static_cast<Activation>(activation);
  net.dropout_rate = dropout;
  net.dropout_after.assign(n_layers > 1 ? n_layers - 1 : 0, 1);
  if (!net.dropout_after.empty()) net.dropout_after.back() = 0;
  for (const auto& [in, out] : dims) {
    DenseLayer layer;
    layer.w = Matrix(in, out);
    layer.w.v = r.doubles(in * out);
    layer.b = r.doubles(out);
    net.layers.push_back(std::move(layer));
  }
  state.config = AdamConfig{learning_rate, 0.9, 0.999, 1e-8};
  state.step = r.pod<std::uint64_t>();
  state.m.clear();
  state.v.clear();
  for (const auto& [in, out] : dims) {
    state.m.push_back(r.doubles(in * out));
    state.m.push_back(r.doubles(out));
  }
  for (const auto& [in, out] : dims) {
    state.v.push_back(r.doubles(in * out));
    state.v.push_back(r.doubles(out));
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelBundle& bundle,
                     const CheckpointMeta& meta) {
  Writer w(path);
  w.bytes(kMagic, sizeof kMagic);
  w.pod(kVersion);
  w.pod(bundle.schema.fingerprint());
  w.pod(static_cast<std::uint8_t>(bundle.kind));
  w.pod(static_cast<std::uint8_t>(meta.phase));
  w.pod(meta.fraction);
  w.pod(static_cast<std::int32_t>(bundle.schema.category_dim));
  w.pod(static_cast<std::int32_t>(bundle.schema.campaign_dim));
  const TrainConfig& c = bundle.config;
  w.pod(static_cast<std::int32_t>(c.hidden_dim));
  w.pod(static_cast<std::int32_t>(c.latent_dim));
  w.pod(c.dropout);
  w.pod(c.learning_rate);
  w.pod(static_cast<std::int32_t>(c.batch_size));
  w.pod(static_cast<std::int32_t>(c.epochs));
  w.pod(static_cast<std::int32_t>(c.fine_tune_epochs));
  w.pod(c.alpha);
  const bool has_he = bundle.kind == ModelKind::kLada;
  w.pod(static_cast<std::uint32_t>(has_he ? 3 : 2));
  write_group(w, "g", bundle.g, bundle.g_state);
  write_group(w, "f", bundle.f, bundle.f_state);
  if (has_he) write_group(w, "he", bundle.he, bundle.he_state);
  w.finish();
}

ModelBundle load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    r.fail("not a CDA1 checkpoint");
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion)
    r.fail("unsupported checkpoint version " + std::to_string(version));
  const auto fingerprint = r.pod<std::uint64_t>();

  ModelBundle bundle;
  const auto kind_tag = r.pod<std::uint8_t>();
  if (kind_tag > 3) r.fail("bad model kind tag");
  bundle.kind = static_cast<ModelKind>(kind_tag);
  const auto phase_tag = r.pod<std::uint8_t>();
  if (phase_tag > 1) r.fail("bad phase tag");
  const double fraction = r.pod<double>();
  if (meta) {
    meta->phase = static_cast<Phase>(phase_tag);
    meta->fraction = fraction;
  }
  bundle.schema.category_dim = r.pod<std::int32_t>();
  bundle.schema.campaign_dim = r.pod<std::int32_t>();
  TrainConfig& c = bundle.config;
  c.hidden_dim = r.pod<std::int32_t>();
  c.latent_dim = r.pod<std::int32_t>();
  c.dropout = r.pod<double>();
  c.learning_rate = r.pod<double>();
  c.batch_size = r.pod<std::int32_t>();
  c.epochs = r.pod<std::int32_t>();
  c.fine_tune_epochs = r.pod<std::int32_t>();
  c.alpha = r.pod<double>();
  bundle.schema.validate();
  c.validate();
  if (bundle.schema.fingerprint() != fingerprint)
    r.fail("schema fingerprint mismatch");

  const auto n_groups = r.pod<std::uint32_t>();
  const bool wants_he = bundle.kind == ModelKind::kLada;
  if (n_groups != static_cast<std::uint32_t>(wants_he ? 3 : 2))
    r.fail("unexpected group count");
  bool have_g = false, have_f = false, have_he = false;
  for (std::uint32_t i = 0; i < n_groups; ++i) {
    const std::string group = r.name();
    if (group == "g" && !have_g) {
      read_group(r, bundle.g, bundle.g_state, c.dropout, c.learning_rate);
      have_g = true;
    } else if (group == "f" && !have_f) {
      read_group(r, bundle.f, bundle.f_state, c.dropout, c.learning_rate);
      have_f = true;
    } else if (group == "he" && !have_he && wants_he) {
      read_group(r, bundle.he, bundle.he_state, c.dropout, c.learning_rate);
      have_he = true;
    } else {
      r.fail("unexpected parameter group '" + group + "'");
    }
  }
  if (!have_g || !have_f || (wants_he && !have_he))
    r.fail("missing parameter group");
  if (!r.at_eof()) r.fail("trailing bytes after last group");

  const auto total = static_cast<std::size_t>(bundle.schema.total_dim());
  if (bundle.g.input_dim() != total) r.fail("g input width mismatch");
  if (bundle.f.output_dim() != 1) r.fail("f output width mismatch");
  if (bundle.g.output_dim() != bundle.f.input_dim())
    r.fail("g/f width mismatch");
  if (wants_he && bundle.he.input_dim() != total)
    r.fail("he input width mismatch");
  return bundle;
}

void require_schema(const ModelBundle& bundle, const FeatureSchema& expected) {
  if (bundle.schema.fingerprint() != expected.fingerprint())
    throw CheckpointError(
        "checkpoint schema does not match the dataset (category/campaign "
        "dims differ)");
}

}  // namespace cda
