#include "racegan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace racegan {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_vec(std::ostream& os, const net::Vec<float>& v) {
  write_u64(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
net::Vec<float> read_vec(std::istream& is) {
  const auto n = static_cast<Eigen::Index>(read_u64(is));
  net::Vec<float> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  return v;
}

}  // namespace

Checkpoint Checkpoint::from_model(const net::Model<float>& model,
                                  std::uint64_t config_hash) {
  Checkpoint c;
  c.spec = model.spec;
  c.config_hash = config_hash;
  c.generator_flat = model.generator.params().flat;
  c.generator_running = model.generator.params().running;
  c.discriminator_flat = model.discriminator.params().flat;
  c.discriminator_running = model.discriminator.params().running;
  return c;
}

net::Model<float> Checkpoint::to_model() const {
  net::Model<float> model(spec, /*seed=*/0);
  auto restore = [](net::NetParams<float>& p, const net::Vec<float>& flat,
                    const net::Vec<float>& running, const char* what) {
    if (p.flat.size() != flat.size() || p.running.size() != running.size())
      throw std::runtime_error(std::string("checkpoint: ") + what +
                               " parameter count does not match spec");
    p.flat = flat;
    p.running = running;
  };
  restore(model.generator.params(), generator_flat, generator_running,
          "generator");
  restore(model.discriminator.params(), discriminator_flat,
          discriminator_running, "discriminator");
  return model;
}

void Checkpoint::save(const std::filesystem::path& file) const {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + file.string());
  write_u32(os, kMagic);
  write_u32(os, kVersion);
  const std::string spec_text = net::serialize(spec);
  write_u64(os, spec_text.size());
  os.write(spec_text.data(), static_cast<std::streamsize>(spec_text.size()));
  write_u64(os, config_hash);
  write_vec(os, generator_flat);
  write_vec(os, generator_running);
  write_vec(os, discriminator_flat);
  write_vec(os, discriminator_running);
  if (!os) throw std::runtime_error("checkpoint write failed: " + file.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + file.string());
  if (read_u32(is) != kMagic)
    throw std::runtime_error("not a checkpoint file: " + file.string());
  const std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + file.string());
  Checkpoint c;
  const auto spec_len = read_u64(is);
  std::string spec_text(spec_len, '\0');
  is.read(spec_text.data(), static_cast<std::streamsize>(spec_len));
  c.spec = net::parse_network_spec(spec_text);
  c.config_hash = read_u64(is);
  c.generator_flat = read_vec(is);
  c.generator_running = read_vec(is);
  c.discriminator_flat = read_vec(is);
  c.discriminator_running = read_vec(is);
  if (!is) throw std::runtime_error("checkpoint truncated: " + file.string());
  return c;
}

}  // namespace racegan
