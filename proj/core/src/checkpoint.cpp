#include "bsecnn/checkpoint.hpp"

#include <fmt/format.h>

#include "bsecnn/binary_io.hpp"

namespace bsecnn {
namespace {

constexpr char kMagic[4] = {'B', 'S', 'C', 'K'};

void put_shape(ByteWriter& w, const Shape& shape) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) w.put<std::uint64_t>(d);
}

Shape get_shape(ByteReader& r, const char* what) {
  const auto at = r.offset();
  const auto rank = r.get<std::uint32_t>(what);
  if (rank == 0 || rank > 8) throw FormatError(fmt::format("{}: implausible rank {}", what, rank), at);
  Shape shape(rank);
  for (auto& d : shape) {
    d = static_cast<std::size_t>(r.get<std::uint64_t>(what));
    if (d == 0) throw FormatError(fmt::format("{}: zero extent", what), at);
  }
  return shape;
}

template <typename T>
void put_tensor(ByteWriter& w, const BasicTensor<T>& t) {
  put_shape(w, t.shape());
  w.put_array<T>(t.data());
}

template <typename T>
BasicTensor<T> get_tensor(ByteReader& r, const char* what) {
  auto shape = get_shape(r, what);
  std::uint64_t n = 1;
  for (auto d : shape) {
    if (n > r.remaining() / d) throw FormatError(std::string("truncated ") + what, r.offset());
    n *= d;
  }
  auto data = r.get_array<T>(n, what);
  return BasicTensor<T>(std::move(shape), std::move(data));
}

void put_spec(ByteWriter& w, const ModelSpec& spec) {
  put_shape(w, spec.input_shape);
  w.put<std::uint64_t>(spec.n_classes);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.layers.size()));
  for (const auto& layer : spec.layers) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(kind_of(layer)));
    if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      w.put<std::uint64_t>(c->kernel_h);
      w.put<std::uint64_t>(c->kernel_w);
      w.put<std::uint64_t>(c->out_channels);
      w.put<std::uint64_t>(c->stride);
    } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer)) {
      w.put<std::uint64_t>(p->window);
      w.put<std::uint64_t>(p->stride);
    } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      w.put<std::uint64_t>(d->units);
    }
  }
}

ModelSpec get_spec(ByteReader& r) {
  const auto spec_at = r.offset();
  ModelSpec spec;
  spec.input_shape = get_shape(r, "input shape");
  spec.n_classes = static_cast<std::size_t>(r.get<std::uint64_t>("class count"));
  const auto n_layers = r.get<std::uint32_t>("layer count");
  auto size = [&](const char* what) { return static_cast<std::size_t>(r.get<std::uint64_t>(what)); };
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const auto kind_at = r.offset();
    switch (static_cast<LayerKind>(r.get<std::uint8_t>("layer kind"))) {
      case LayerKind::conv2d: {
        Conv2dLayer c;
        c.kernel_h = size("conv kernel height");
        c.kernel_w = size("conv kernel width");
        c.out_channels = size("conv channels");
        c.stride = size("conv stride");
        spec.layers.emplace_back(c);
        break;
      }
      case LayerKind::maxpool2d: {
        MaxPoolLayer p;
        p.window = size("pool window");
        p.stride = size("pool stride");
        spec.layers.emplace_back(p);
        break;
      }
      case LayerKind::relu: spec.layers.emplace_back(ReluLayer{}); break;
      case LayerKind::flatten: spec.layers.emplace_back(FlattenLayer{}); break;
      case LayerKind::dense: spec.layers.emplace_back(DenseLayer{size("dense units")}); break;
      default: throw FormatError("unknown layer kind", kind_at);
    }
  }
  try {
    infer_shapes(spec);
  } catch (const Error& e) {
    throw FormatError(std::string("inconsistent model spec: ") + e.what(), spec_at);
  }
  return spec;
}

template <typename T>
void put_params(ByteWriter& w, const ParamSet<T>& params) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.groups.size()));
  for (const auto& g : params.groups) {
    w.put_string(g.name);
    w.put<std::uint64_t>(g.layer_index);
    put_tensor(w, g.weights);
    put_tensor(w, g.bias);
  }
}

template <typename T>
ParamSet<T> get_params(ByteReader& r, const ParamSet<T>& reference) {
  const auto at = r.offset();
  const auto n = r.get<std::uint32_t>("parameter group count");
  if (n != reference.groups.size()) {
    throw FormatError(fmt::format("parameter set has {} groups, model needs {}", n, reference.groups.size()), at);
  }
  ParamSet<T> params;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto group_at = r.offset();
    ParamGroup<T> g;
    g.name = r.get_string("group name");
    g.layer_index = static_cast<std::size_t>(r.get<std::uint64_t>("group layer index"));
    g.weights = get_tensor<T>(r, "weights");
    g.bias = get_tensor<T>(r, "bias");
    const auto& ref = reference.groups[i];
    if (g.layer_index != ref.layer_index || g.weights.shape() != ref.weights.shape() ||
        g.bias.shape() != ref.bias.shape()) {
      throw FormatError(fmt::format("parameter group '{}' does not match the model spec", g.name), group_at);
    }
    params.groups.push_back(std::move(g));
  }
  return params;
}

void put_forest(ByteWriter& w, const RandomForest& forest) {
  const auto& p = forest.params();
  w.put<std::uint64_t>(forest.n_features());
  w.put<std::uint64_t>(forest.n_classes());
  w.put<std::uint64_t>(p.n_trees);
  w.put<std::uint64_t>(p.max_depth);
  w.put<std::uint64_t>(p.max_features);
  w.put<std::uint8_t>(p.bootstrap ? 1 : 0);
  w.put<std::uint64_t>(p.seed);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(forest.trees().size()));
  for (const auto& tree : forest.trees()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tree.nodes().size()));
    for (const auto& node : tree.nodes()) {
      w.put<std::int32_t>(node.feature);
      w.put<double>(node.threshold);
      w.put<std::int32_t>(node.left);
      w.put<std::int32_t>(node.right);
      w.put<std::int32_t>(node.label);
    }
  }
}

RandomForest get_forest(ByteReader& r) {
  const auto at = r.offset();
  const auto n_features = static_cast<std::size_t>(r.get<std::uint64_t>("forest feature count"));
  const auto n_classes = static_cast<std::size_t>(r.get<std::uint64_t>("forest class count"));
  ForestParams p;
  p.n_trees = static_cast<std::size_t>(r.get<std::uint64_t>("forest tree count"));
  p.max_depth = static_cast<std::size_t>(r.get<std::uint64_t>("forest depth"));
  p.max_features = static_cast<std::size_t>(r.get<std::uint64_t>("forest max features"));
  p.bootstrap = r.get<std::uint8_t>("forest bootstrap flag") != 0;
  p.seed = r.get<std::uint64_t>("forest seed");
  const auto n_trees = r.get<std::uint32_t>("tree count");
  std::vector<DecisionTree> trees;
  constexpr std::size_t node_bytes = 4 + 8 + 4 + 4 + 4;
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    const auto tree_at = r.offset();
    const auto n_nodes = r.get<std::uint32_t>("node count");
    if (n_nodes > r.remaining() / node_bytes) throw FormatError("truncated tree nodes", r.offset());
    std::vector<TreeNode> nodes(n_nodes);
    for (auto& node : nodes) {
      node.feature = r.get<std::int32_t>("node feature");
      node.threshold = r.get<double>("node threshold");
      node.left = r.get<std::int32_t>("node left");
      node.right = r.get<std::int32_t>("node right");
      node.label = r.get<std::int32_t>("node label");
    }
    try {
      trees.emplace_back(std::move(nodes), n_features);
    } catch (const Error& e) {
      throw FormatError(fmt::format("invalid tree {}: {}", t, e.what()), tree_at);
    }
  }
  try {
    return RandomForest(std::move(trees), n_features, n_classes, p);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid forest: ") + e.what(), at);
  }
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<T>& ck) {
  const auto& e = ck.ensemble;
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint8_t>(sizeof(T));
  w.put_string(to_config_text(ck.config));
  w.put<std::uint64_t>(ck.seeds.split);
  w.put<std::uint64_t>(ck.seeds.bagging);
  w.put<std::uint64_t>(ck.seeds.train);
  w.put<std::uint64_t>(ck.seeds.forest);
  put_spec(w, e.spec);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(e.members.size()));
  for (const auto& m : e.members) put_params(w, m);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(e.combiner));
  w.put<std::uint8_t>(e.forest ? 1 : 0);
  if (e.forest) put_forest(w, *e.forest);
  return w.bytes();
}

int checkpoint_precision(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.get_bytes(4, "magic") != std::string_view(kMagic, 4)) throw FormatError("bad magic, expected \"BSCK\"", 0);
  const auto version_at = r.offset();
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError(
        fmt::format("unsupported checkpoint version {} (reader supports {})", version, kCheckpointVersion),
        version_at);
  }
  const auto width_at = r.offset();
  const auto width = r.get<std::uint8_t>("scalar width");
  if (width != 4 && width != 8) throw FormatError(fmt::format("unsupported scalar width {}", width), width_at);
  return width * 8;
}

template <typename T>
Checkpoint<T> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  const int precision = checkpoint_precision(bytes);
  if (precision != static_cast<int>(sizeof(T) * 8)) {
    throw FormatError(
        fmt::format("checkpoint holds {}-bit parameters, {}-bit requested", precision, sizeof(T) * 8), 8);
  }
  ByteReader r(bytes);
  r.get_bytes(9, "header");

  Checkpoint<T> ck;
  const auto config_at = r.offset();
  const auto config_text = r.get_string("config");
  try {
    ck.config = parse_config(config_text);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("embedded config: ") + e.what(), config_at);
  }
  ck.seeds.split = r.get<std::uint64_t>("split seed");
  ck.seeds.bagging = r.get<std::uint64_t>("bagging seed");
  ck.seeds.train = r.get<std::uint64_t>("train seed");
  ck.seeds.forest = r.get<std::uint64_t>("forest seed");

  auto& e = ck.ensemble;
  e.spec = get_spec(r);
  const auto reference = init_params<T>(e.spec, 0);
  const auto count_at = r.offset();
  const auto n_members = r.get<std::uint32_t>("member count");
  if (n_members == 0) throw FormatError("checkpoint has no sub-models", count_at);
  for (std::uint32_t m = 0; m < n_members; ++m) e.members.push_back(get_params(r, reference));
  e.histories.resize(n_members);

  const auto combiner_at = r.offset();
  const auto combiner = r.get<std::uint8_t>("combiner");
  if (combiner > static_cast<std::uint8_t>(CombinerKind::stacking)) {
    throw FormatError(fmt::format("unknown combiner tag {}", combiner), combiner_at);
  }
  e.combiner = static_cast<CombinerKind>(combiner);
  const auto flag_at = r.offset();
  const auto has_forest = r.get<std::uint8_t>("forest flag");
  if (has_forest > 1) throw FormatError("bad forest flag", flag_at);
  if (has_forest) {
    const auto forest_at = r.offset();
    e.forest = get_forest(r);
    if (e.forest->n_features() != n_members * e.spec.n_classes) {
      throw FormatError("forest feature count does not match the ensemble", forest_at);
    }
  }
  if (e.combiner == CombinerKind::stacking && !e.forest) {
    throw FormatError("stacking checkpoint without a forest", combiner_at);
  }
  r.expect_end("forest");
  return ck;
}

template <typename T>
void save_checkpoint(const Checkpoint<T>& checkpoint, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(checkpoint));
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  return decode_checkpoint<T>(read_file_bytes(path));
}

#define BSECNN_INSTANTIATE(T)                                                           \
  template std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<T>&);         \
  template Checkpoint<T> decode_checkpoint<T>(std::span<const std::uint8_t>);          \
  template void save_checkpoint(const Checkpoint<T>&, const std::string&);            \
  template Checkpoint<T> load_checkpoint<T>(const std::string&);

BSECNN_INSTANTIATE(float)
BSECNN_INSTANTIATE(double)
#undef BSECNN_INSTANTIATE

}  // namespace bsecnn
