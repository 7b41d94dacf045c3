// SPDX-License-Identifier: Apache-2.0
#include "granum/nn/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "granum/error.hpp"

namespace granum::nn {

namespace {

constexpr const char *kMagic = "granum-weights";

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Line reader that knows where it is and fails with PersistenceError.
class Reader {
public:
  explicit Reader(std::istream &is) : is_(is) {}

  std::istringstream next(const char *expecting) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      if (!line.empty())
        return std::istringstream(line);
    }
    fail(std::string("unexpected end of document, expecting ") + expecting);
  }

  [[noreturn]] void fail(const std::string &what) const {
    throw PersistenceError("weights line " + std::to_string(line_no_) + ": " +
                           what);
  }

private:
  std::istream &is_;
  std::size_t line_no_ = 0;
};

std::string expect_word(Reader &r, std::istringstream &ls, const char *word) {
  std::string w;
  if (!(ls >> w) || w != word)
    r.fail(std::string("expected '") + word + "', got '" + w + "'");
  return w;
}

Shape read_dims(Reader &r, std::istringstream &ls) {
  Shape dims;
  std::size_t d;
  while (ls >> d) {
    if (d == 0)
      r.fail("zero dimension");
    dims.push_back(d);
  }
  if (!ls.eof() || dims.empty())
    r.fail("malformed dimension list");
  return dims;
}

std::vector<double> read_values(Reader &r, std::size_t count) {
  std::vector<double> values;
  values.reserve(count);
  auto ls = r.next("parameter values");
  std::string tok;
  while (ls >> tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      r.fail("bad number '" + tok + "'");
    values.push_back(v);
  }
  if (values.size() != count)
    r.fail("expected " + std::to_string(count) + " values, got " +
           std::to_string(values.size()));
  return values;
}

struct Document {
  std::map<std::string, std::string> metadata;
  Shape input;
  struct LayerEntry {
    LayerConfig config;
    std::vector<std::pair<std::string, Tensor>> params;
  };
  std::vector<LayerEntry> layers;
};

Document parse(std::istream &is) {
  Reader r(is);
  Document doc;
  {
    auto ls = r.next("header");
    std::string magic;
    int version = 0;
    if (!(ls >> magic >> version) || magic != kMagic)
      r.fail("not a weight document");
    if (version != kWeightFormatVersion)
      r.fail("unsupported format version " + std::to_string(version));
  }
  auto ls = r.next("input");
  std::string word;
  ls >> word;
  while (word == "meta") {
    std::string key, value;
    ls >> key;
    std::getline(ls >> std::ws, value);
    if (key.empty())
      r.fail("meta line without key");
    doc.metadata[key] = value;
    ls = r.next("input");
    ls >> word;
  }
  if (word != "input")
    r.fail("expected 'input', got '" + word + "'");
  doc.input = read_dims(r, ls);

  ls = r.next("layers");
  expect_word(r, ls, "layers");
  std::size_t count = 0;
  if (!(ls >> count))
    r.fail("missing layer count");

  for (std::size_t l = 0; l < count; ++l) {
    ls = r.next("layer");
    expect_word(r, ls, "layer");
    Document::LayerEntry entry;
    if (!(ls >> entry.config.kind))
      r.fail("missing layer kind");
    std::string kv;
    while (ls >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        r.fail("bad attribute '" + kv + "'");
      entry.config.attrs[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    std::size_t n_params = 0;
    {
      std::unique_ptr<Layer> probe;
      try {
        probe = make_layer(entry.config);
      } catch (const ConfigError &e) {
        r.fail(e.what());
      }
      n_params = probe->parameters().size();
    }
    for (std::size_t p = 0; p < n_params; ++p) {
      ls = r.next("param");
      expect_word(r, ls, "param");
      std::string name;
      if (!(ls >> name))
        r.fail("missing parameter name");
      Shape dims = read_dims(r, ls);
      auto values = read_values(r, shape_product(dims));
      entry.params.emplace_back(name, Tensor(std::move(dims), std::move(values)));
    }
    doc.layers.push_back(std::move(entry));
  }
  ls = r.next("end");
  expect_word(r, ls, "end");
  return doc;
}

void copy_params(Layer &layer, const Document::LayerEntry &entry) {
  auto params = layer.parameters();
  if (params.size() != entry.params.size())
    throw ShapeError("layer " + entry.config.kind + ": parameter count differs");
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto &[name, tensor] = entry.params[p];
    if (name != params[p].name || tensor.shape() != params[p].value->shape())
      throw ShapeError("layer " + entry.config.kind + ": parameter " + name +
                       shape_string(tensor.shape()) + " does not fit " +
                       params[p].name + shape_string(params[p].value->shape()));
    *params[p].value = tensor;
  }
}

} // namespace

void write_network(std::ostream &os, const Network &net) {
  os << kMagic << ' ' << kWeightFormatVersion << '\n';
  for (const auto &[k, v] : net.metadata)
    os << "meta " << k << ' ' << v << '\n';
  os << "input";
  for (auto d : net.input_shape())
    os << ' ' << d;
  os << '\n' << "layers " << net.layer_count() << '\n';
  // parameters() is non-const on layers; work on a copy.
  Network copy(net);
  for (std::size_t l = 0; l < copy.layer_count(); ++l) {
    Layer &layer = copy.layer(l);
    const LayerConfig cfg = layer.config();
    os << "layer " << cfg.kind;
    for (const auto &[k, v] : cfg.attrs)
      os << ' ' << k << '=' << v;
    os << '\n';
    for (const auto &p : layer.parameters()) {
      os << "param " << p.name;
      for (auto d : p.value->shape())
        os << ' ' << d;
      os << '\n';
      bool first = true;
      for (double v : p.value->data()) {
        if (!first)
          os << ' ';
        os << format_double(v);
        first = false;
      }
      os << '\n';
    }
  }
  os << "end\n";
}

Network read_network(std::istream &is) {
  Document doc = parse(is);
  Network net(doc.input);
  net.metadata = doc.metadata;
  try {
    for (const auto &entry : doc.layers) {
      auto layer = make_layer(entry.config);
      copy_params(*layer, entry);
      net.add(std::move(layer));
    }
  } catch (const Error &e) {
    throw PersistenceError(std::string("inconsistent weight document: ") +
                           e.what());
  }
  return net;
}

void load_parameters_into(Network &net, std::istream &is) {
  Document doc = parse(is);
  if (doc.input != net.input_shape())
    throw ShapeError("stored input shape " + shape_string(doc.input) +
                     " does not match network input " +
                     shape_string(net.input_shape()));
  const auto plan = net.plan();
  if (plan.size() != doc.layers.size())
    throw ShapeError("stored layer count " + std::to_string(doc.layers.size()) +
                     " does not match network (" + std::to_string(plan.size()) +
                     ")");
  for (std::size_t l = 0; l < plan.size(); ++l)
    if (!(plan[l] == doc.layers[l].config))
      throw ShapeError("layer " + std::to_string(l) + ": stored " +
                       doc.layers[l].config.kind + " does not match " +
                       plan[l].kind);
  // Validate everything before mutating the target.
  Network staged(net);
  for (std::size_t l = 0; l < plan.size(); ++l)
    copy_params(staged.layer(l), doc.layers[l]);
  staged.metadata = net.metadata;
  for (const auto &[k, v] : doc.metadata)
    staged.metadata[k] = v;
  net = std::move(staged);
}

void save_network(const Network &net, const std::filesystem::path &path) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw PersistenceError("cannot open " + path.string() + " for writing");
  write_network(os, net);
  if (!os)
    throw PersistenceError("write to " + path.string() + " failed");
}

Network load_network(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw PersistenceError("cannot open " + path.string());
  return read_network(is);
}

} // namespace granum::nn
