#include "racegan/net/spec.hpp"

#include <map>
#include <sstream>

namespace racegan::net {

namespace {

LayerSpec conv(int in_ch, int out_ch, int k, int stride, int pad, bool norm,
               Act act, int residual_from = -1) {
  return LayerSpec{LayerKind::conv, in_ch, out_ch, k,   stride,
                   pad,             norm,  act,    residual_from};
}

LayerSpec tconv(int in_ch, int out_ch, int k, int stride, int pad, bool norm,
                Act act) {
  return LayerSpec{LayerKind::conv_transpose, in_ch, out_ch, k, stride,
                   pad,                       norm,  act,    -1};
}

LayerSpec pool(LayerKind kind, int k, int stride) {
  LayerSpec l;
  l.kind = kind;
  l.kernel = k;
  l.stride = stride;
  return l;
}

LayerSpec upsample(int factor) {
  LayerSpec l;
  l.kind = LayerKind::upsample;
  l.kernel = factor;
  return l;
}

}  // namespace

NetworkSpec default_network_spec() {
  NetworkSpec spec;
  auto& g = spec.generator;

  // deep feature extraction over (RGB, guess); mixed kernel sizes and one
  // residual link between the equal-shaped stages
  g.trunk = {
      conv(4, 12, 3, 1, 1, true, Act::relu),
      conv(12, 12, 5, 1, 2, true, Act::relu, 0),
  };

  // full-resolution branch for fine detail
  g.local_branch = {
      conv(12, 12, 3, 1, 1, true, Act::relu),
      conv(12, 8, 3, 1, 1, true, Act::relu),
      conv(8, 1, 1, 1, 0, false, Act::none),
  };

  // context branch: pool to 1/16 scale, widen (7x7 stage carries most of the
  // parameter budget), then climb back up
  g.global_branch = {
      pool(LayerKind::avg_pool, 2, 2),
      conv(12, 24, 3, 1, 1, true, Act::relu),
      pool(LayerKind::avg_pool, 2, 2),
      conv(24, 48, 3, 1, 1, true, Act::relu),
      pool(LayerKind::avg_pool, 2, 2),
      conv(48, 96, 3, 1, 1, true, Act::relu),
      pool(LayerKind::avg_pool, 2, 2),
      conv(96, 256, 7, 1, 3, true, Act::relu),
      conv(256, 96, 3, 1, 1, true, Act::relu),
      upsample(2),
      conv(96, 48, 3, 1, 1, true, Act::relu),
      upsample(2),
      conv(48, 24, 3, 1, 1, true, Act::relu),
      upsample(2),
      conv(24, 12, 3, 1, 1, true, Act::relu),
      upsample(2),
      conv(12, 8, 3, 1, 1, true, Act::relu),
      conv(8, 1, 1, 1, 0, false, Act::none),
  };

  g.weight_head = {
      conv(2, 1, 1, 1, 0, false, Act::sigmoid),
  };

  // Normalization on every critic block, the first conv included: real and
  // fake masks arrive in separate batches, and per-batch standardization is
  // what keeps exact-0/1 pixel values from being a free tell.
  auto& d = spec.discriminator;
  d.layers = {
      conv(1, 6, 3, 1, 1, true, Act::relu),
      pool(LayerKind::max_pool, 2, 2),
      conv(6, 12, 3, 1, 1, true, Act::relu),
      pool(LayerKind::max_pool, 2, 2),
      conv(12, 16, 3, 1, 1, true, Act::relu),
      pool(LayerKind::max_pool, 2, 2),
      conv(16, 16, 3, 1, 1, true, Act::relu),
      tconv(16, 12, 4, 2, 1, true, Act::relu),
      tconv(12, 6, 4, 2, 1, true, Act::relu),
      tconv(6, 4, 4, 2, 1, true, Act::relu),
      conv(4, 1, 3, 1, 1, false, Act::sigmoid),
  };
  return spec;
}

namespace {

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::conv_transpose: return "tconv";
    case LayerKind::max_pool: return "maxpool";
    case LayerKind::avg_pool: return "avgpool";
    case LayerKind::upsample: return "upsample";
  }
  return "?";
}

const char* act_name(Act a) {
  switch (a) {
    case Act::none: return "none";
    case Act::relu: return "relu";
    case Act::sigmoid: return "sigmoid";
  }
  return "?";
}

LayerKind kind_from(const std::string& s) {
  if (s == "conv") return LayerKind::conv;
  if (s == "tconv") return LayerKind::conv_transpose;
  if (s == "maxpool") return LayerKind::max_pool;
  if (s == "avgpool") return LayerKind::avg_pool;
  if (s == "upsample") return LayerKind::upsample;
  throw std::runtime_error("network spec: unknown layer kind: " + s);
}

Act act_from(const std::string& s) {
  if (s == "none") return Act::none;
  if (s == "relu") return Act::relu;
  if (s == "sigmoid") return Act::sigmoid;
  throw std::runtime_error("network spec: unknown activation: " + s);
}

void write_seq(std::ostream& os, const std::string& name, const LayerSeq& seq) {
  os << "[" << name << "]\n";
  for (const LayerSpec& l : seq) {
    os << kind_name(l.kind);
    if (l.has_weights()) os << " in=" << l.in_ch << " out=" << l.out_ch;
    os << " k=" << l.kernel << " s=" << l.stride << " p=" << l.padding;
    if (l.has_weights())
      os << " norm=" << (l.norm ? 1 : 0) << " act=" << act_name(l.act);
    if (l.residual_from >= 0) os << " res=" << l.residual_from;
    os << "\n";
  }
}

}  // namespace

std::string serialize(const NetworkSpec& spec) {
  std::ostringstream os;
  os << "init = " << spec.init_scheme << "\n";
  os << "param_budget = " << spec.param_budget << "\n";
  os << "condition_on_image = " << (spec.discriminator.condition_on_image ? 1 : 0)
     << "\n";
  write_seq(os, "generator.trunk", spec.generator.trunk);
  write_seq(os, "generator.local", spec.generator.local_branch);
  write_seq(os, "generator.global", spec.generator.global_branch);
  write_seq(os, "generator.weight_head", spec.generator.weight_head);
  write_seq(os, "discriminator", spec.discriminator.layers);
  return os.str();
}

NetworkSpec parse_network_spec(std::string_view text) {
  NetworkSpec spec;
  spec.generator = GeneratorSpec{};
  spec.discriminator = DiscriminatorSpec{};
  std::map<std::string, LayerSeq*> sections = {
      {"generator.trunk", &spec.generator.trunk},
      {"generator.local", &spec.generator.local_branch},
      {"generator.global", &spec.generator.global_branch},
      {"generator.weight_head", &spec.generator.weight_head},
      {"discriminator", &spec.discriminator.layers},
  };
  LayerSeq* current = nullptr;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      const auto end = line.find(']');
      if (end == std::string::npos)
        throw std::runtime_error("network spec line " + std::to_string(lineno) +
                                 ": unterminated section");
      const std::string name = line.substr(1, end - 1);
      auto it = sections.find(name);
      if (it == sections.end())
        throw std::runtime_error("network spec: unknown section " + name);
      current = it->second;
      continue;
    }
    if (line.find('=') != std::string::npos && current == nullptr) {
      std::istringstream kv(line);
      std::string key, eq, value;
      kv >> key >> eq >> value;
      if (key == "init")
        spec.init_scheme = value;
      else if (key == "param_budget")
        spec.param_budget = std::stoll(value);
      else if (key == "condition_on_image")
        spec.discriminator.condition_on_image = value == "1" || value == "true";
      else
        throw std::runtime_error("network spec: unknown key " + key);
      continue;
    }
    if (!current)
      throw std::runtime_error("network spec line " + std::to_string(lineno) +
                               ": layer outside any section");
    std::istringstream ls(line);
    std::string kind_str;
    ls >> kind_str;
    LayerSpec l;
    l.kind = kind_from(kind_str);
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("network spec line " + std::to_string(lineno) +
                                 ": expected key=value, got " + tok);
      const std::string key = tok.substr(0, eq);
      const std::string value = tok.substr(eq + 1);
      if (key == "in")
        l.in_ch = std::stoi(value);
      else if (key == "out")
        l.out_ch = std::stoi(value);
      else if (key == "k")
        l.kernel = std::stoi(value);
      else if (key == "s")
        l.stride = std::stoi(value);
      else if (key == "p")
        l.padding = std::stoi(value);
      else if (key == "norm")
        l.norm = value == "1" || value == "true";
      else if (key == "act")
        l.act = act_from(value);
      else if (key == "res")
        l.residual_from = std::stoi(value);
      else
        throw std::runtime_error("network spec: unknown layer key " + key);
    }
    current->push_back(l);
  }
  return spec;
}

}  // namespace racegan::net
